#ifndef PCCO_OPF_HPP
#define PCCO_OPF_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pcco/dda.hpp"
#include "pcco/reduction.hpp"

namespace pcco {

struct GridBranch {
  int from = 0;
  int to = 0;
  double susceptance = 0.0;  // b_ij, per unit on base_mva
  double limit = 0.0;        // |flow| bound, MW
};

struct GridGenerator {
  int bus = 0;
  double p_min = 0.0, p_max = 0.0;  // MW
  double cost_c2 = 0.0;             // $/MW^2 h
  double cost_c1 = 0.0;             // $/MWh
  double cost_c0 = 0.0;             // $
};

struct GridRenewable {
  int bus = 0;
  double forecast = 0.0;  // MW
};

// Bus/branch/generator/renewable description of a DC network. Demands are
// nonnegative MW withdrawals; the reference bus pins its phase angle to 0.
struct GridCase {
  std::string name;
  double base_mva = 100.0;
  int reference_bus = 0;
  std::vector<double> demand;  // one entry per bus
  std::vector<GridBranch> branches;
  std::vector<GridGenerator> generators;
  std::vector<GridRenewable> renewables;

  int num_buses() const { return static_cast<int>(demand.size()); }
  int num_generators() const { return static_cast<int>(generators.size()); }
  int num_renewables() const { return static_cast<int>(renewables.size()); }
  // Decision variables: p^G, non-reference angles, participation factors.
  int num_decision_vars() const { return 2 * num_generators() + num_buses() - 1; }
  // Rows contributed by one data point: two per branch plus two per generator.
  int rows_per_data_point() const {
    return 2 * static_cast<int>(branches.size()) + 2 * num_generators();
  }

  // Throws std::invalid_argument on structural defects (bad bus ids, zero
  // susceptance, p_min > p_max, disconnected graph handled in build_matrices).
  void validate() const;

  static GridCase load_json(const std::string& path);
  void save_json(const std::string& path) const;
};

// DC power-flow matrices. B is the susceptance Laplacian; b_reduced drops
// the reference row/column; b_pseudo places its inverse back with zeros in
// the reference row/column.
struct DcMatrices {
  Eigen::MatrixXd gen_incidence;   // A: n_bus x g
  Eigen::MatrixXd laplacian;       // B: n_bus x n_bus
  Eigen::MatrixXd ren_incidence;   // C: n_bus x r
  Eigen::MatrixXd b_reduced;       // B-hat
  Eigen::MatrixXd b_pseudo;        // B-breve
  Eigen::MatrixXd response;        // B-breve * A (angle response to recourse)
  Eigen::MatrixXd ren_response;    // B-breve * C
};

// Throws std::runtime_error("Singular: ...") for a disconnected network.
DcMatrices build_matrices(const GridCase& gc);

// Sign convention: a data point holds the net-load deviation (renewable
// shortfall), so the real-time renewable injection is forecast - xi and
// generators pick up lambda_i * sum(xi). mean_deviation is subtracted from
// every point and folded into the forecast injection.
struct OpfDataStats {
  Eigen::VectorXd mean_deviation;       // r entries
  double variance_total_deviation = 0;  // weighted second moment of e'(xi - mean)
};

// x = (p^G, theta_non-ref, lambda). Objective: generation cost plus
// variance_total_deviation * sum_i c2_i lambda_i^2. Per-point rows: branch
// flow pairs then generator recourse bounds. Base: power balance, sum of
// lambda = 1, lambda in [0, 1].
ProblemTemplate build_template(const GridCase& gc, const DcMatrices& mats,
                               const OpfDataStats& stats);

// Column means of a dataset's deviations (integer columns included).
Eigen::VectorXd mean_deviation(const DataSet& ds);

// (1/normalizer) * sum_k w_k (e'(xi_k - mean))^2 ; pass empty weights for 1.
double weighted_total_deviation_moment(const std::vector<UncertaintyPoint>& pts,
                                       const std::vector<std::size_t>& weights,
                                       double normalizer, const Eigen::VectorXd& mean);

struct OpfDecision {
  Eigen::VectorXd p_gen;   // g
  Eigen::VectorXd theta;   // n_bus, reference entry 0
  Eigen::VectorXd lambda;  // g
};

OpfDecision split_decision(const GridCase& gc, const Eigen::VectorXd& x);

struct PipelineConfig {
  double alpha = 0.05;
  double rho = 0.90;
  double zeta = 0.0;      // <= 0: pick via select_bandwidth
  double eta = -1.0;      // < 0: use zeta; == 0: SDS stage skipped
  std::size_t b_bar = 0;  // 0: decision dimension (convex default)
  std::uint64_t seed = 0;
  int threads = 1;
  bool skip_sds = false;
  SolveOptions solve;
};

struct StageResult {
  std::string name;  // "alpha", "z", "eta"
  std::size_t points = 0;
  Eigen::Index constraint_rows = 0;
  double wall_seconds = 0.0;
  double objective = 0.0;
  SolveStatus status = SolveStatus::IterLimit;
  double gap_vs_alpha_pct = 0.0;
  Eigen::VectorXd x;
};

struct PipelineResult {
  ReductionReport reduction;
  double zeta = 0.0;
  Eigen::VectorXd data_mean;
  std::vector<StageResult> stages;
};

// Full chain: density/bandwidth, alpha filter, sized subsample, SDS, and
// one deterministic solve per stage. Errors are annotated with the stage
// that raised them.
PipelineResult run_pipeline(const GridCase& gc, const DataSet& ds, const PipelineConfig& cfg);

// Plot data: the thinned stage re-run across a radius grid.
struct EtaSweepRow {
  double eta = 0.0;
  std::size_t z_eta = 0;
  double objective = 0.0;
  double gap_vs_alpha_pct = 0.0;
};

std::vector<EtaSweepRow> eta_sweep(const GridCase& gc, const DataSet& ds,
                                   const PipelineConfig& cfg, const std::vector<double>& etas);

}  // namespace pcco

#endif  // PCCO_OPF_HPP
