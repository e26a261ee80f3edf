#ifndef PCCO_SYNTHETIC_HPP
#define PCCO_SYNTHETIC_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "pcco/dataset.hpp"
#include "pcco/dda.hpp"
#include "pcco/rng.hpp"

namespace pcco {

struct GaussianComponent {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;  // per-axis standard deviation
};

DataSet sample_gaussian_mixture(const std::vector<GaussianComponent>& comps, std::size_t count,
                                std::uint64_t seed);
double mixture_density(const std::vector<GaussianComponent>& comps, const Eigen::VectorXd& x);

DataSet sample_uniform_box(int dim, double lo, double hi, std::size_t count, std::uint64_t seed);

// Uniform integer lattice points; r1 integer columns, no real columns.
DataSet sample_integer_box(int r1, long long lo, long long hi, std::size_t count,
                           std::uint64_t seed);

using PointSampler = std::function<UncertaintyPoint(Rng&)>;

PointSampler make_gaussian_sampler(const Eigen::VectorXd& mean, const Eigen::VectorXd& sd);
PointSampler make_mixture_sampler(std::vector<GaussianComponent> comps);
PointSampler make_cauchy_sampler(int dim, double scale);  // heavy tails

// Coordinate-max LP with planted boundary scenarios:
//   minimize 1'x  subject to  x >= xi componentwise, per data point.
// `planted` designated points (point i carries the unique maximum 1.0 in
// coordinate i) are each replicated `multiplicity` times inside a filler
// cloud bounded by 0.5, so the sampled program keeps the full optimum
// exactly when every planted scenario is hit.
struct PlantedLpInstance {
  ProblemTemplate tmpl;
  DataSet filtered;             // the synthetic filtered multiset (D_alpha)
  std::size_t planted_count = 0;
  std::size_t multiplicity = 0;
  double alpha = 0.0;           // alpha * dataset_size == multiplicity exactly
  std::size_t dataset_size = 0;
  double full_objective = 0.0;  // analytic optimum of the whole set
};

PlantedLpInstance make_planted_lp(int dims, std::size_t planted, std::size_t multiplicity,
                                  std::size_t fillers, std::uint64_t seed);

// Two-variable envelope family used by the accuracy experiments: each
// scalar data point xi contributes the halfplane x2 >= xi x1 + q(xi) with
// q(xi) = 1 - xi^2 + 0.3 xi^4, and the objective minimizes x2. The optimum
// sits on the intersection of two lines with slopes of opposite sign, so
// exactly n = 2 rows bind and the implicit map has a closed form.
ProblemTemplate make_envelope_lp();
double envelope_intercept(double xi);

// Scalar slopes alternating in sign with magnitudes in [0.25, 1].
DataSet sample_slope_cloud(std::size_t count, std::uint64_t seed);

}  // namespace pcco

#endif  // PCCO_SYNTHETIC_HPP
