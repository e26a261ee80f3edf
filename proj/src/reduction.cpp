#include "pcco/reduction.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pcco/rng.hpp"

namespace pcco {

namespace {

using BigFloat = boost::multiprecision::cpp_bin_float_100;

// C(a, z) / C(d, z) = prod_{i=0..z-1} (a - i) / (d - i); zero when a < z.
BigFloat binom_ratio(long long a, long long d, long long z) {
  if (a < z || a < 0) return 0;
  BigFloat r = 1;
  for (long long i = 0; i < z; ++i) {
    r *= BigFloat(a - i);
    r /= BigFloat(d - i);
  }
  return r;
}

BigFloat binom_small(long long n, long long k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigFloat r = 1;
  for (long long i = 1; i <= k; ++i) {
    r *= BigFloat(n - k + i);
    r /= BigFloat(i);
  }
  return r;
}

long long floor_with_slack(double v) {
  return static_cast<long long>(std::floor(v + 1e-9));
}

}  // namespace

double varrho_lower_bound(std::size_t z, std::size_t b_bar, double alpha,
                          std::size_t dataset_size, std::size_t filtered_size) {
  if (b_bar < 1) throw std::invalid_argument("b_bar must be >= 1");
  if (z < 1 || z > filtered_size)
    throw std::invalid_argument("z must lie in [1, D_alpha]");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in [0, 1)");
  const double ad = alpha * static_cast<double>(dataset_size);
  if (ad > static_cast<double>(filtered_size) + 1e-9)
    throw std::invalid_argument("alpha * D exceeds D_alpha");

  const long long m = floor_with_slack(ad);
  const long long d_alpha = static_cast<long long>(filtered_size);
  const long long zz = static_cast<long long>(z);

  BigFloat sum = 1;
  for (std::size_t k = 1; k <= b_bar; ++k) {
    const long long remaining = d_alpha - static_cast<long long>(k) * m;
    const BigFloat ratio = binom_ratio(remaining, d_alpha, zz);
    if (ratio == 0 && remaining < zz) {
      // all later terms vanish as well once remaining < z keeps shrinking
      if (m > 0) break;
    }
    const BigFloat term = binom_small(static_cast<long long>(b_bar),
                                      static_cast<long long>(k)) * ratio;
    if (k % 2 == 1)
      sum -= term;
    else
      sum += term;
  }
  double out = sum.convert_to<double>();
  return std::clamp(out, 0.0, 1.0);
}

SamplingPlan plan_sample_size(double rho, std::size_t b_bar, double alpha,
                              std::size_t dataset_size, std::size_t filtered_size) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0, 1]");
  if (filtered_size < 1) throw std::invalid_argument("D_alpha must be >= 1");
  SamplingPlan plan;
  plan.rho = rho;
  plan.b_bar = b_bar;
  plan.alpha = alpha;
  plan.dataset_size = dataset_size;
  plan.filtered_size = filtered_size;

  const double at_max = varrho_lower_bound(filtered_size, b_bar, alpha, dataset_size,
                                           filtered_size);
  if (at_max < rho)
    throw std::runtime_error("Infeasible: bound at z = D_alpha is " + std::to_string(at_max) +
                             " < rho");
  // varrho_lower_bound is nondecreasing in z: binary search the first hit.
  std::size_t lo = 1, hi = filtered_size;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (varrho_lower_bound(mid, b_bar, alpha, dataset_size, filtered_size) >= rho)
      hi = mid;
    else
      lo = mid + 1;
  }
  plan.z = lo;
  plan.bound_at_z = varrho_lower_bound(lo, b_bar, alpha, dataset_size, filtered_size);
  return plan;
}

std::vector<int> draw_subsample(const AlphaFilterResult& filtered, const SamplingPlan& plan,
                                std::uint64_t seed) {
  if (plan.z > filtered.d_alpha)
    throw std::invalid_argument("z exceeds the filtered set size");
  std::vector<int> pool = filtered.kept_indices;
  Rng rng(seed);
  // Partial Fisher-Yates: the first z slots become the sample.
  for (std::size_t i = 0; i < plan.z; ++i) {
    const std::size_t j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(plan.z);
  std::sort(pool.begin(), pool.end());
  return pool;
}

namespace {

// Greedy pass over one integer group. `members` are input-set row indices;
// distances are Euclidean on the real coordinates. Appends survivors and
// weights; leftover points (never claimed by an eta-ball) raise the weight
// of their nearest survivor.
void greedy_thin_group(const DataSet& points, const std::vector<int>& members, double eta,
                       Rng& rng, std::vector<int>& survivors_out,
                       std::vector<std::size_t>& weights_out) {
  const double sep2 = 4.0 * eta * eta;  // (2 eta)^2
  const double ball2 = eta * eta;
  const Eigen::MatrixXd& x = points.reals();

  std::vector<int> candidates = members;  // eligible picks
  std::vector<int> pool = members;        // not yet claimed by a ball
  std::vector<int> local_survivors;
  std::vector<std::size_t> local_weights;

  while (!candidates.empty()) {
    const int pick = candidates[rng.uniform_index(candidates.size())];
    local_survivors.push_back(pick);

    // Claim the eta-ball around the pick.
    std::size_t claimed = 0;
    std::vector<int> next_pool;
    next_pool.reserve(pool.size());
    for (int idx : pool) {
      if (squared_distance(x.row(idx).transpose(), x.row(pick).transpose()) <= ball2)
        ++claimed;
      else
        next_pool.push_back(idx);
    }
    pool.swap(next_pool);
    local_weights.push_back(claimed);

    // Eligible picks must stay in the pool and keep 2 eta separation.
    std::vector<int> next_candidates;
    next_candidates.reserve(candidates.size());
    for (int idx : candidates) {
      if (squared_distance(x.row(idx).transpose(), x.row(pick).transpose()) < sep2) continue;
      bool in_pool = std::binary_search(pool.begin(), pool.end(), idx);
      if (in_pool) next_candidates.push_back(idx);
    }
    candidates.swap(next_candidates);
  }

  // Leftovers sit in the (eta, 2 eta] shell of at least one survivor;
  // assign each to its nearest survivor so weights cover the whole group.
  for (int idx : pool) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < local_survivors.size(); ++k) {
      const double d2 =
          squared_distance(x.row(idx).transpose(), x.row(local_survivors[k]).transpose());
      if (d2 < best) {
        best = d2;
        best_k = k;
      }
    }
    local_weights[best_k] += 1;
  }

  survivors_out.insert(survivors_out.end(), local_survivors.begin(), local_survivors.end());
  weights_out.insert(weights_out.end(), local_weights.begin(), local_weights.end());
}

}  // namespace

SdsResult sds_continuous(const DataSet& points, double eta, std::uint64_t seed) {
  if (points.r1() != 0)
    throw std::invalid_argument("sds_continuous requires pure-continuous data (r1 = 0)");
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  SdsResult res;
  res.group_eta = {eta};
  Rng rng(seed);
  greedy_thin_group(points, points.group_members(0), eta, rng, res.selected, res.weights);
  res.z_eta = res.selected.size();
  res.saturated = res.z_eta == 1;
  return res;
}

SdsResult sds_mixed(const DataSet& points, const std::vector<double>& group_eta,
                    std::uint64_t seed) {
  if (points.r1() < 1)
    throw std::invalid_argument("sds_mixed requires at least one integer coordinate");
  const int groups = points.group_count();
  std::vector<double> radii;
  if (group_eta.size() == 1)
    radii.assign(groups, group_eta[0]);
  else if (static_cast<int>(group_eta.size()) == groups)
    radii = group_eta;
  else
    throw std::invalid_argument("group_eta must hold one radius or one per group");
  for (double e : radii)
    if (!(e > 0.0)) throw std::invalid_argument("group radius must be > 0");

  SdsResult res;
  res.group_eta = radii;
  Rng rng(seed);
  for (int g = 0; g < groups; ++g)
    greedy_thin_group(points, points.group_members(g), radii[g], rng, res.selected, res.weights);
  res.z_eta = res.selected.size();
  res.saturated = res.z_eta == static_cast<std::size_t>(groups);
  return res;
}

}  // namespace pcco
