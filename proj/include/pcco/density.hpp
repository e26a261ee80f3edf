#ifndef PCCO_DENSITY_HPP
#define PCCO_DENSITY_HPP

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "pcco/dataset.hpp"

namespace pcco {

// Per-point vicinity counts and the joint-probability estimates
// counts[j] / D at a fixed bandwidth.
struct DensityEstimate {
  std::vector<std::size_t> counts;  // D_j^zeta, always >= 1
  Eigen::VectorXd probabilities;    // counts[j] / D, in (0, 1]
  double zeta = 0.0;
  std::size_t dataset_size = 0;  // D of the source dataset
};

// counts[j] = |{k : dist(k, j) <= zeta}| over the full dataset.
DensityEstimate estimate_density(const DataSet& ds, double zeta, int threads = 1);

// Bandwidth choice: the candidate whose probability field is smoothest,
// scored as the mean squared deviation of each point's probability from
// the mean probability of its k nearest neighbours, k = max(5, ceil(D/100)).
// Ties go to the smaller candidate. This is a deterministic stand-in for
// picking the visually smoothest distribution by hand.
double select_bandwidth(const DataSet& ds, const std::vector<double>& grid, int threads = 1);
double roughness_score(const DataSet& ds, const DensityEstimate& de);

// Geometric 8-point default grid spanning [0.05, 0.8] times the RMS
// per-coordinate standard deviation of the real parts.
std::vector<double> default_bandwidth_grid(const DataSet& ds);

// Points surviving the probability filter, in source order.
struct AlphaFilterResult {
  std::vector<int> kept_indices;  // j with counts[j] >= alpha * D
  std::size_t d_alpha = 0;        // |kept_indices|
  double alpha = 0.0;
  double zeta = 0.0;
  std::size_t source_size = 0;  // D
};

// Keeps the points whose vicinity count clears alpha * D. Counts are always
// measured against the full source dataset, never against a shrinking
// subset. alpha must lie in [0, 1); an empty result is reported, not an
// error.
AlphaFilterResult alpha_process(const DataSet& ds, const DensityEstimate& de, double alpha);

// Empirical threshold calibration: the largest probability level v such
// that at least a (1 - beta) fraction of the data points have estimated
// probability >= v. beta in (0, 1).
double calibrate_alpha(const DensityEstimate& de, double beta);

}  // namespace pcco

#endif  // PCCO_DENSITY_HPP
