#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "pcco/reduction.hpp"
#include "pcco/rng.hpp"
#include "pcco/synthetic.hpp"

using namespace pcco;

namespace {

// Independent oracle for C(a, z) / C(d, z) as a plain product.
double ratio_oracle(long long a, long long d, long long z) {
  if (a < z || a < 0) return 0.0;
  double r = 1.0;
  for (long long i = 0; i < z; ++i) r *= static_cast<double>(a - i) / static_cast<double>(d - i);
  return r;
}

AlphaFilterResult fake_filter(std::size_t d_alpha) {
  AlphaFilterResult f;
  for (std::size_t i = 0; i < d_alpha; ++i) f.kept_indices.push_back(static_cast<int>(i));
  f.d_alpha = d_alpha;
  return f;
}

// Exhaustive enumeration of the greedy thinning process on a 1-D point
// set: every pick sequence is explored and the set of survivor counts is
// returned.
void enumerate_thinning(const std::vector<double>& pts, double eta,
                        std::vector<int> pool, const std::vector<int>& survivors,
                        std::set<std::size_t>& outcomes) {
  std::vector<int> candidates;
  for (int i : pool) {
    bool ok = true;
    for (int s : survivors)
      if (std::abs(pts[i] - pts[s]) < 2.0 * eta) {
        ok = false;
        break;
      }
    if (ok) candidates.push_back(i);
  }
  if (candidates.empty()) {
    outcomes.insert(survivors.size());
    return;
  }
  for (int pick : candidates) {
    std::vector<int> next_pool;
    for (int i : pool)
      if (std::abs(pts[i] - pts[pick]) > eta) next_pool.push_back(i);
    std::vector<int> next_surv = survivors;
    next_surv.push_back(pick);
    enumerate_thinning(pts, eta, next_pool, next_surv, outcomes);
  }
}

std::set<std::size_t> thinning_outcomes(const std::vector<double>& pts, double eta) {
  std::vector<int> pool(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) pool[i] = static_cast<int>(i);
  std::set<std::size_t> outcomes;
  enumerate_thinning(pts, eta, pool, {}, outcomes);
  return outcomes;
}

DataSet line_points(const std::vector<double>& xs) {
  Eigen::MatrixXd reals(xs.size(), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) reals(i, 0) = xs[i];
  return DataSet::from_matrices({}, reals);
}

}  // namespace

TEST_CASE("bound: sampling everything is certain when alpha D >= 1") {
  CHECK(varrho_lower_bound(100, 3, 0.05, 1000, 100) == 1.0);
}

TEST_CASE("bound: single designated point, single draw") {
  // 1 - 90/100 with one group of 10 inside 100.
  CHECK(varrho_lower_bound(1, 1, 0.1, 100, 100) == doctest::Approx(0.10).epsilon(1e-12));
}

TEST_CASE("bound: z = 10 against the exact binomial product") {
  const double expected = 1.0 - ratio_oracle(90, 100, 10);
  CHECK(varrho_lower_bound(10, 1, 0.1, 100, 100) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("bound: Monte-Carlo agreement on a two-group instance") {
  // D_alpha = 50 points: two designated groups of 10 plus 30 fillers.
  const std::size_t d_alpha = 50, m = 10, z = 8;
  const double alpha = 0.1;
  const std::size_t dataset_size = 100;  // floor(alpha D) = 10 = m
  const double bound = varrho_lower_bound(z, 2, alpha, dataset_size, d_alpha);

  const std::size_t trials = 200000;
  Rng rng(99);
  std::size_t hits = 0;
  std::vector<int> idx(d_alpha);
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < d_alpha; ++i) idx[i] = static_cast<int>(i);
    bool a = false, b = false;
    for (std::size_t i = 0; i < z; ++i) {
      const std::size_t j = i + rng.uniform_index(d_alpha - i);
      std::swap(idx[i], idx[j]);
      if (idx[i] < static_cast<int>(m)) a = true;
      else if (idx[i] < static_cast<int>(2 * m)) b = true;
    }
    if (a && b) ++hits;
  }
  const double freq = static_cast<double>(hits) / trials;
  const double sigma = std::sqrt(bound * (1 - bound) / trials);
  // groups have exactly floor(alpha D) copies, so the bound is the exact
  // probability here
  CHECK(std::abs(freq - bound) <= 3.0 * sigma);
}

TEST_CASE("bound: nondecreasing in z and within [0, 1]") {
  // valid geometries only: b_bar groups of floor(alpha D) copies must fit
  // inside the filtered set
  for (std::size_t b_bar : {1u, 2u, 3u}) {
    double prev = -1.0;
    for (std::size_t z = 1; z <= 60; ++z) {
      const double v = varrho_lower_bound(z, b_bar, 0.05, 400, 60);
      CHECK(v >= prev - 1e-12);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      prev = v;
    }
  }
  for (std::size_t b_bar : {1u, 5u, 9u}) {
    double prev = -1.0;
    for (std::size_t z = 1; z <= 300; z += 7) {
      const double v = varrho_lower_bound(z, b_bar, 0.05, 600, 300);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("plan: rho zero needs a single draw") {
  CHECK(plan_sample_size(0.0, 3, 0.05, 1000, 300).z == 1);
}

TEST_CASE("plan: binary search matches a linear scan") {
  for (double rho : {0.5, 0.9, 0.999}) {
    const std::size_t b_bar = 1, d = 1000, d_alpha = 100;
    const double alpha = 0.01;  // floor(alpha D) = 10
    const SamplingPlan plan = plan_sample_size(rho, b_bar, alpha, d, d_alpha);
    std::size_t z_scan = d_alpha;
    for (std::size_t z = 1; z <= d_alpha; ++z) {
      if (varrho_lower_bound(z, b_bar, alpha, d, d_alpha) >= rho) {
        z_scan = z;
        break;
      }
    }
    CHECK(plan.z == z_scan);
    CHECK(plan.bound_at_z >= rho);
  }
}

TEST_CASE("plan: published-scale inputs give a sample far below the filtered size") {
  // n = 9 boundary bound, alpha = 0.05 over 1000 points, 685 kept.
  const SamplingPlan plan = plan_sample_size(0.90, 9, 0.05, 1000, 685);
  CHECK(plan.z < 150);
  CHECK(plan.z > 20);
  std::size_t z_scan = 0;
  for (std::size_t z = 1; z <= 685; ++z)
    if (varrho_lower_bound(z, 9, 0.05, 1000, 685) >= 0.90) {
      z_scan = z;
      break;
    }
  CHECK(plan.z == z_scan);
}

TEST_CASE("subsample: drawing everything returns the whole set, in order") {
  const auto filtered = fake_filter(40);
  SamplingPlan plan;
  plan.z = 40;
  const auto s = draw_subsample(filtered, plan, 7);
  CHECK(s == filtered.kept_indices);
}

TEST_CASE("subsample: reproducible from the seed") {
  const auto filtered = fake_filter(100);
  SamplingPlan plan;
  plan.z = 17;
  CHECK(draw_subsample(filtered, plan, 5) == draw_subsample(filtered, plan, 5));
  CHECK(draw_subsample(filtered, plan, 5) != draw_subsample(filtered, plan, 6));
}

TEST_CASE("subsample: per-point inclusion frequency matches z / D_alpha") {
  const auto filtered = fake_filter(20);
  SamplingPlan plan;
  plan.z = 5;
  const std::size_t seeds = 10000;
  std::vector<std::size_t> hits(20, 0);
  for (std::size_t s = 0; s < seeds; ++s)
    for (int i : draw_subsample(filtered, plan, s)) ++hits[i];
  const double p = 5.0 / 20.0;
  const double sigma = std::sqrt(p * (1 - p) / seeds);
  for (std::size_t i = 0; i < 20; ++i) {
    const double freq = static_cast<double>(hits[i]) / seeds;
    CHECK(std::abs(freq - p) <= 4.0 * sigma);
  }
}

TEST_CASE("thinning: vanishing radius keeps all distinct points") {
  const DataSet ds = sample_uniform_box(2, 0, 1, 60, 3);
  const SdsResult r = sds_continuous(ds, 1e-12, 17);
  CHECK(r.z_eta == 60);
}

TEST_CASE("thinning: radius at half the diameter collapses to one point") {
  const DataSet ds = sample_uniform_box(2, 0, 1, 40, 4);
  const SdsResult r = sds_continuous(ds, 2.0, 17);
  CHECK(r.z_eta == 1);
  CHECK(r.saturated);
  CHECK(r.weights[0] == 40);
}

TEST_CASE("thinning: collinear example against exhaustive process enumeration") {
  const std::vector<double> xs{0, 1, 2, 3, 4};
  const std::set<std::size_t> outcomes = thinning_outcomes(xs, 0.6);
  // Frozen from the enumeration: the greedy process can end with two
  // survivors (e.g. {1, 3}) or three ({0, 2, 4}).
  CHECK(outcomes == std::set<std::size_t>{2, 3});

  const DataSet ds = line_points(xs);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SdsResult r = sds_continuous(ds, 0.6, seed);
    CHECK(outcomes.count(r.z_eta) == 1);
    // separation within the survivor set
    for (std::size_t a = 0; a < r.selected.size(); ++a)
      for (std::size_t b = a + 1; b < r.selected.size(); ++b)
        CHECK(std::abs(xs[r.selected[a]] - xs[r.selected[b]]) >= 2 * 0.6);
    std::size_t total = 0;
    for (auto w : r.weights) total += w;
    CHECK(total == xs.size());
  }
}

TEST_CASE("thinning invariants on random clouds") {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const DataSet ds = sample_uniform_box(2, 0, 1, 150, seed);
    const double eta = 0.11;
    const SdsResult r = sds_continuous(ds, eta, seed * 31);
    // pairwise separation >= 2 eta, exactly
    for (std::size_t a = 0; a < r.selected.size(); ++a)
      for (std::size_t b = a + 1; b < r.selected.size(); ++b) {
        const double d =
            (ds.reals().row(r.selected[a]) - ds.reals().row(r.selected[b])).norm();
        CHECK(d >= 2 * eta);
      }
    // every input point within 2 eta of some survivor
    for (std::size_t i = 0; i < ds.size(); ++i) {
      double best = 1e9;
      for (int s : r.selected)
        best = std::min(best, (ds.reals().row(i) - ds.reals().row(s)).norm());
      CHECK(best <= 2 * eta + 1e-12);
    }
    // weights form a partition of the input
    std::size_t total = 0;
    for (auto w : r.weights) total += w;
    CHECK(total == ds.size());
  }
}

TEST_CASE("thinning: survivor count shrinks with the radius and scales like 1/eta^2") {
  const DataSet ds = sample_uniform_box(2, 0, 1, 2000, 77);
  std::vector<double> etas{0.03, 0.05, 0.08, 0.13};
  std::vector<double> mean_counts;
  for (double eta : etas) {
    double acc = 0;
    for (std::uint64_t s = 0; s < 5; ++s) acc += sds_continuous(ds, eta, s).z_eta;
    mean_counts.push_back(acc / 5.0);
  }
  for (std::size_t i = 0; i + 1 < etas.size(); ++i) CHECK(mean_counts[i] >= mean_counts[i + 1]);
  const double slope = (std::log(mean_counts.front()) - std::log(mean_counts.back())) /
                       (std::log(1 / etas.front()) - std::log(1 / etas.back()));
  CHECK(slope > 1.0);
  CHECK(slope < 3.0);
}

TEST_CASE("mixed thinning: pure integer data keeps the underlying set") {
  const DataSet ds = sample_integer_box(2, 0, 3, 200, 5);
  const SdsResult r = sds_mixed(ds, {0.5}, 9);
  CHECK(r.z_eta == static_cast<std::size_t>(ds.group_count()));
  std::set<std::vector<long long>> distinct;
  for (int s : r.selected) distinct.insert(ds.point(s).integer_part);
  CHECK(distinct.size() == r.z_eta);
  std::size_t total = 0;
  for (auto w : r.weights) total += w;
  CHECK(total == ds.size());
}

TEST_CASE("mixed thinning: a single group reduces to the continuous pass") {
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> ints =
      Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>::Zero(5, 1);
  Eigen::MatrixXd reals(5, 1);
  reals << 0, 1, 2, 3, 4;
  const DataSet mixed = DataSet::from_matrices(ints, reals);
  const DataSet cont = line_points({0, 1, 2, 3, 4});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SdsResult a = sds_mixed(mixed, {0.6}, seed);
    const SdsResult b = sds_continuous(cont, 0.6, seed);
    CHECK(a.selected == b.selected);
    CHECK(a.weights == b.weights);
  }
}

TEST_CASE("mixed thinning: two copies of the collinear group add up") {
  std::vector<UncertaintyPoint> pts;
  for (long long g : {0, 1})
    for (double v : {0.0, 1.0, 2.0, 3.0, 4.0}) {
      UncertaintyPoint p;
      p.integer_part = {g};
      p.real_part = Eigen::VectorXd::Constant(1, v);
      pts.push_back(p);
    }
  const DataSet ds = DataSet::from_points(pts);
  const std::set<std::size_t> group_outcomes = thinning_outcomes({0, 1, 2, 3, 4}, 0.6);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SdsResult r = sds_mixed(ds, {0.6}, seed);
    // each group lands in {2, 3}; totals in {4, 5, 6}
    bool plausible = false;
    for (std::size_t a : group_outcomes)
      for (std::size_t b : group_outcomes)
        if (a + b == r.z_eta) plausible = true;
    CHECK(plausible);
  }
}

TEST_CASE("thinning rejects nonpositive radii") {
  const DataSet ds = sample_uniform_box(1, 0, 1, 10, 6);
  CHECK_THROWS_AS(sds_continuous(ds, 0.0, 1), std::invalid_argument);
  const DataSet ints = sample_integer_box(1, 0, 3, 10, 7);
  CHECK_THROWS_AS(sds_mixed(ints, {-1.0}, 1), std::invalid_argument);
}
