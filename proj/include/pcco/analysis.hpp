#ifndef PCCO_ANALYSIS_HPP
#define PCCO_ANALYSIS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pcco/dda.hpp"
#include "pcco/reduction.hpp"
#include "pcco/synthetic.hpp"

namespace pcco {

// One Monte-Carlo check of a theoretical probability bound.
struct BoundExperiment {
  std::string name;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double observed = 0.0;  // empirical success frequency
  double bound = 0.0;     // theoretical lower bound
  double sigma = 0.0;     // binomial sigma at the bound
  bool verdict = false;   // observed >= bound - 3 sigma
  std::size_t solver_failures = 0;
};

// Draws `trials` z-samples from the planted instance, re-solves each, and
// compares the success frequency (sampled optimum equals the full optimum
// within tol) against the hypergeometric lower bound at plan.z. A false
// verdict on a correctly sized plan flags a violated boundary-count
// assumption.
BoundExperiment verify_varrho(const PlantedLpInstance& inst, const SamplingPlan& plan,
                              std::size_t trials, std::uint64_t seed, int threads = 1,
                              double tol = 1e-6);

struct PhiOptions {
  double delta = 0.0;          // finite-difference step; 0 picks 1e-5 * scale
  bool central = false;        // central differences (O(delta^2))
  bool second_order = false;   // add the Hessian term to the bound
  std::uint64_t sds_seed = 1;  // seed for the internal thinning run
  SolveOptions solve;
};

struct PhiEstimate {
  double phi_lower = 0.0;       // bound at the requested order
  double phi_lower_first = 0.0; // first-order term only
  double measured_phi = 0.0;
  double h_norm = 0.0;          // spectral norm of the implicit-map Jacobian
  double h2_norm = 0.0;         // Frobenius norm of the Hessian tensor (if enabled)
  double jacobian_condition = 0.0;
  double eta_hat = 0.0;         // mixed-data radius aggregate
  std::size_t z_eta = 0;
  Eigen::MatrixXd H;            // n x (perturbable coords * n)
};

// Accuracy bound for thinning at radius eta: differentiates the implicit
// map defined by the n binding rows through finite differences, evaluates
// the first-order (optionally second-order) bound, then measures the
// actual optimum shift of a seeded thinning run. Requires exactly n
// boundary constraints and an invertible binding Jacobian.
PhiEstimate estimate_phi_bound(const ProblemTemplate& tmpl, const DataSet& points,
                               const SolveResult& optimum, const BoundaryReport& boundary,
                               double eta, const PhiOptions& opts = {});

struct OmegaReport {
  std::vector<double> etas;
  std::vector<double> omega;  // success frequency per eta
  std::vector<double> sigma;
  double reference_objective = 0.0;
  std::size_t trials = 0;
  bool monotone_within_noise = true;
  std::vector<std::pair<double, double>> violations;  // (eta_small, eta_large)
};

// Empirical success frequency (thinned optimum matches the input-set
// optimum within tol) across an eta grid; nonincreasing up to 3-sigma
// noise is expected, violations are reported rather than failed.
OmegaReport verify_omega_monotone(const ProblemTemplate& tmpl, const DataSet& points,
                                  const std::vector<double>& etas, std::size_t trials,
                                  std::uint64_t seed, double tol = 1e-6, int threads = 1,
                                  const SolveOptions& solve = {});

// Minimal scenario count prescribed by the classical bound
// e (n - ln eps) / (beta (e - 1)), rounded up.
double scenario_sample_size(int n, double epsilon, double beta);

struct ScenarioConfig {
  std::size_t n_samples = 10;   // N iid draws per trial
  double alpha = 0.05;
  std::size_t trials = 50;
  std::size_t probes = 1000;
  std::size_t pool_size = 20000;  // dense pool for the contour proxy
  double zeta = 0.0;              // 0: auto
  std::uint64_t seed = 1;
  double tol = 1e-8;
};

struct ScenarioComparison {
  std::size_t n_samples = 0;
  double alpha = 0.0;
  std::size_t trials = 0;
  double freq_proper_superset = 0.0;  // scenario set strictly contains the contour proxy
  double freq_not_equal = 0.0;        // probe memberships differ
  double proxy_objective = 0.0;
};

// Compares the iid-sample feasible set against the contour-constrained
// proxy (the filtered dense pool) by membership probes around the proxy
// optimum.
ScenarioComparison compare_scenario_method(const ProblemTemplate& tmpl,
                                           const PointSampler& sampler,
                                           const ScenarioConfig& cfg);

struct CcMembership {
  double violation_probability = 0.0;
  double ci_halfwidth = 0.0;  // 95% normal approximation
  std::size_t draws = 0;
};

// Monte-Carlo estimate of P[g(x, xi) > 0] under the sampler.
CcMembership cc_violation_probability(const ProblemTemplate& tmpl, const Eigen::VectorXd& x,
                                      const PointSampler& sampler, std::size_t draws,
                                      std::uint64_t seed, double tol = 1e-9);

}  // namespace pcco

#endif  // PCCO_ANALYSIS_HPP
