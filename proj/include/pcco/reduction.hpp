#ifndef PCCO_REDUCTION_HPP
#define PCCO_REDUCTION_HPP

#include <cstdint>
#include <vector>

#include "pcco/dataset.hpp"
#include "pcco/density.hpp"

namespace pcco {

// Sample-size plan for drawing z points from a filtered set of D_alpha so
// that the drawn program keeps the full optimum with probability at least
// rho (per the hypergeometric lower bound below).
struct SamplingPlan {
  double rho = 0.0;
  std::size_t b_bar = 1;          // upper bound on boundary-forming points
  double alpha = 0.0;
  std::size_t dataset_size = 0;   // D
  std::size_t filtered_size = 0;  // D_alpha
  std::size_t z = 0;              // smallest z whose bound reaches rho
  double bound_at_z = 0.0;
};

// Lower bound on the probability that a uniform without-replacement
// z-sample from the filtered set hits every one of b_bar designated
// points, each of which appears at least floor(alpha * D) times:
//
//   1 + sum_{k=1..b_bar} (-1)^k C(b_bar, k) C(D_alpha - k m, z) / C(D_alpha, z),
//
// m = floor(alpha * D), C(a, b) = 0 for a < b or a < 0. Evaluated in
// extended precision (the alternating sum cancels catastrophically in
// doubles for large b_bar) and clamped to [0, 1]. Nondecreasing in z.
double varrho_lower_bound(std::size_t z, std::size_t b_bar, double alpha,
                          std::size_t dataset_size, std::size_t filtered_size);

// Binary search for the minimal z with varrho_lower_bound(z) >= rho.
// Throws std::runtime_error("Infeasible...") when even z = D_alpha misses.
SamplingPlan plan_sample_size(double rho, std::size_t b_bar, double alpha,
                              std::size_t dataset_size, std::size_t filtered_size);

// Uniform sample of plan.z entries of filtered.kept_indices, without
// replacement, reproducible from the seed. Returned in source order.
std::vector<int> draw_subsample(const AlphaFilterResult& filtered, const SamplingPlan& plan,
                                std::uint64_t seed);

// Output of the greedy thinning pass: survivors are pairwise >= 2 eta
// apart within each integer group, every input point is within 2 eta of a
// survivor, and each input point is represented by exactly one survivor
// (its weight).
struct SdsResult {
  std::vector<int> selected;          // indices into the input set, in pick order
  std::vector<std::size_t> weights;   // points represented by each survivor
  std::vector<double> group_eta;      // radius used per input group
  std::size_t z_eta = 0;              // selected.size()
  bool saturated = false;             // one survivor per group (eta >= eta_bar)
};

// Greedy randomized thinning for pure-continuous data (r1 = 0): repeatedly
// pick a remaining point at least 2 eta from every survivor, then drop the
// eta-ball around it. Points left unclaimed at the end are assigned to
// their nearest survivor so that weights total the input size.
SdsResult sds_continuous(const DataSet& points, double eta, std::uint64_t seed);

// Mixed-integer variant: partitions by exact integer part and runs the
// continuous pass on the real coordinates of each group with that group's
// radius. group_eta holds either a single broadcast value or one radius
// per group (group ids as assigned by the DataSet). For pure-integer data
// this keeps exactly one representative per distinct integer vector.
SdsResult sds_mixed(const DataSet& points, const std::vector<double>& group_eta,
                    std::uint64_t seed);

// Provenance of a full reduction chain D -> D_alpha -> D_alpha^z -> D_alpha^eta.
struct ReductionReport {
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double zeta = 0.0;
  double rho = 0.0;
  std::vector<double> eta;  // one entry, or one per integer group
  std::size_t b_bar = 1;
  std::size_t dataset_size = 0;
  std::size_t d_alpha = 0;
  std::size_t z = 0;
  std::size_t z_eta = 0;
  std::vector<std::size_t> weights;  // per survivor
  std::vector<int> indices;          // survivors, as rows of the source dataset
};

}  // namespace pcco

#endif  // PCCO_REDUCTION_HPP
