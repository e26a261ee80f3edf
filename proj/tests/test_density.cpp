#include <algorithm>

#include "doctest.h"
#include "pcco/density.hpp"
#include "pcco/rng.hpp"
#include "pcco/synthetic.hpp"

using namespace pcco;

namespace {

DataSet normal_cloud(std::size_t count, std::uint64_t seed) {
  std::vector<GaussianComponent> comps(1);
  comps[0].mean = Eigen::Vector2d(0, 0);
  comps[0].sd = Eigen::Vector2d(1, 1);
  return sample_gaussian_mixture(comps, count, seed);
}

}  // namespace

TEST_CASE("all identical points give probability one") {
  Eigen::MatrixXd reals = Eigen::MatrixXd::Zero(20, 2);
  const DataSet ds = DataSet::from_matrices({}, reals);
  const DensityEstimate de = estimate_density(ds, 0.3);
  for (Eigen::Index j = 0; j < de.probabilities.size(); ++j)
    CHECK(de.probabilities[j] == 1.0);
}

TEST_CASE("two distant points split the mass") {
  Eigen::MatrixXd reals(2, 1);
  reals << 0.0, 10.0;
  const DataSet ds = DataSet::from_matrices({}, reals);
  const DensityEstimate de = estimate_density(ds, 1.0);
  CHECK(de.probabilities[0] == 0.5);
  CHECK(de.probabilities[1] == 0.5);
}

TEST_CASE("discrete scenario with nine copies among one hundred points") {
  // 8 distinct integer scenarios; scenario (1,2) appears 9 times; its
  // estimated probability is 9/100 = 0.09.
  std::vector<UncertaintyPoint> pts;
  auto add = [&](long long a, long long b, int copies) {
    for (int c = 0; c < copies; ++c) {
      UncertaintyPoint p;
      p.integer_part = {a, b};
      p.real_part = Eigen::VectorXd(0);
      pts.push_back(p);
    }
  };
  add(1, 2, 9);
  add(1, 3, 13);
  add(2, 1, 12);
  add(2, 2, 20);
  add(2, 3, 16);
  add(3, 1, 12);
  add(3, 2, 11);
  add(1, 1, 7);
  REQUIRE(pts.size() == 100);
  const DataSet ds = DataSet::from_points(pts);
  const DensityEstimate de = estimate_density(ds, 0.5);
  for (std::size_t j = 0; j < 9; ++j) CHECK(de.probabilities[j] == doctest::Approx(0.09));
  CHECK(de.counts[0] == 9);
}

TEST_CASE("bandwidth: single candidate grid is forced") {
  const DataSet ds = normal_cloud(100, 4);
  CHECK(select_bandwidth(ds, {0.12}) == 0.12);
}

TEST_CASE("bandwidth: selection is the roughness argmin; ties go small") {
  const DataSet ds = normal_cloud(400, 5);
  const std::vector<double> grid{0.06, 0.12, 0.24, 0.5, 1.0};
  double best = grid.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (double z : grid) {
    const double s = roughness_score(ds, estimate_density(ds, z));
    if (s < best_score) {
      best_score = s;
      best = z;
    }
  }
  CHECK(select_bandwidth(ds, grid) == best);

  // identical-roughness tie: two candidates below the minimum pairwise
  // distance both give all-singleton counts
  Eigen::MatrixXd reals(4, 1);
  reals << 0, 10, 20, 30;
  const DataSet spread = DataSet::from_matrices({}, reals);
  CHECK(select_bandwidth(spread, {2.0, 1.0}) == 1.0);
}

TEST_CASE("bandwidth: interior candidate wins on a mixture when scores are U-shaped") {
  std::vector<GaussianComponent> comps(2);
  comps[0].weight = 0.6;
  comps[0].mean = Eigen::Vector2d(0, 0);
  comps[0].sd = Eigen::Vector2d(1.0, 0.8);
  comps[1].weight = 0.4;
  comps[1].mean = Eigen::Vector2d(2.5, 1.5);
  comps[1].sd = Eigen::Vector2d(0.9, 1.1);
  const DataSet ds = sample_gaussian_mixture(comps, 1000, 9);
  std::vector<double> grid;
  for (int i = 0; i < 8; ++i) grid.push_back(0.05 * std::pow(16.0, i / 7.0));
  std::vector<double> scores;
  for (double z : grid) scores.push_back(roughness_score(ds, estimate_density(ds, z)));
  const std::size_t argmin =
      std::min_element(scores.begin(), scores.end()) - scores.begin();
  const bool u_shaped = scores.front() > scores[argmin] && scores.back() > scores[argmin];
  CHECK(select_bandwidth(ds, grid) == grid[argmin]);
  if (u_shaped) {
    CHECK(argmin > 0);
    CHECK(argmin + 1 < grid.size());
  }
}

TEST_CASE("alpha filter keeps everything at alpha zero") {
  const DataSet ds = normal_cloud(200, 6);
  const DensityEstimate de = estimate_density(ds, 0.4);
  const AlphaFilterResult r = alpha_process(ds, de, 0.0);
  CHECK(r.d_alpha == 200);
}

TEST_CASE("alpha above the maximum probability empties the result without error") {
  const DataSet ds = normal_cloud(100, 7);
  const DensityEstimate de = estimate_density(ds, 0.2);
  const double pmax = de.probabilities.maxCoeff();
  const AlphaFilterResult r = alpha_process(ds, de, std::min(0.999, pmax + 0.05));
  CHECK(r.d_alpha == 0);
  CHECK(r.kept_indices.empty());
}

TEST_CASE("alpha = 1 is rejected") {
  const DataSet ds = normal_cloud(10, 8);
  const DensityEstimate de = estimate_density(ds, 0.2);
  CHECK_THROWS_AS(alpha_process(ds, de, 1.0), std::invalid_argument);
}

TEST_CASE("alpha filter on a synthetic normal cloud: recount the kept and dropped points") {
  const DataSet ds = normal_cloud(1000, 42);
  const double zeta = select_bandwidth(ds, default_bandwidth_grid(ds));
  const DensityEstimate de = estimate_density(ds, zeta);
  const AlphaFilterResult r = alpha_process(ds, de, 0.05);
  CHECK(r.d_alpha > 0);
  CHECK(r.d_alpha < ds.size());
  const double threshold = 0.05 * static_cast<double>(ds.size());
  std::vector<char> kept(ds.size(), 0);
  for (int j : r.kept_indices) kept[j] = 1;
  for (std::size_t j = 0; j < ds.size(); ++j) {
    const double count = static_cast<double>(ds.vicinity_count(j, zeta));
    CHECK(static_cast<bool>(kept[j]) == (count >= threshold));
    if (kept[j]) CHECK(de.probabilities[j] >= 0.05);
  }
  // source order preserved
  CHECK(std::is_sorted(r.kept_indices.begin(), r.kept_indices.end()));
}

TEST_CASE("nesting: a higher threshold keeps a subset, exactly") {
  const DataSet ds = normal_cloud(300, 10);
  const DensityEstimate de = estimate_density(ds, 0.35);
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    double a1 = rng.uniform(0.0, 0.5), a2 = rng.uniform(0.0, 0.5);
    if (a1 < a2) std::swap(a1, a2);  // a1 >= a2
    const auto keep_hi = alpha_process(ds, de, a1).kept_indices;
    const auto keep_lo = alpha_process(ds, de, a2).kept_indices;
    CHECK(std::includes(keep_lo.begin(), keep_lo.end(), keep_hi.begin(), keep_hi.end()));
  }
}

TEST_CASE("re-filtering the kept subset against the frozen counts is a no-op") {
  const DataSet ds = normal_cloud(400, 12);
  const DensityEstimate de = estimate_density(ds, 0.3);
  const double alpha = 0.03;
  const AlphaFilterResult first = alpha_process(ds, de, alpha);
  REQUIRE(first.d_alpha > 0);
  // counts stay those of the source dataset
  const double threshold = alpha * static_cast<double>(ds.size());
  std::size_t surviving = 0;
  for (int j : first.kept_indices)
    if (static_cast<double>(de.counts[j]) >= threshold) ++surviving;
  CHECK(surviving == first.d_alpha);
}

TEST_CASE("alpha calibration hits the extremes and the uniform case") {
  const DataSet ds = normal_cloud(500, 13);
  const DensityEstimate de = estimate_density(ds, 0.3);
  CHECK(calibrate_alpha(de, 1.0 - 1e-9) == doctest::Approx(de.probabilities.maxCoeff()));
  CHECK(calibrate_alpha(de, 1e-9) == doctest::Approx(de.probabilities.minCoeff()));

  Eigen::MatrixXd reals = Eigen::MatrixXd::Zero(50, 1);
  const DataSet uniform = DataSet::from_matrices({}, reals);
  const DensityEstimate ude = estimate_density(uniform, 0.1);
  for (double beta : {0.1, 0.5, 0.9}) CHECK(calibrate_alpha(ude, beta) == 1.0);
}

TEST_CASE("alpha calibration is monotone nondecreasing in beta") {
  // A larger allowed violation mass can only raise the contour level.
  const DataSet ds = normal_cloud(400, 14);
  const DensityEstimate de = estimate_density(ds, 0.3);
  double prev = 0.0;
  for (double beta : {0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.95}) {
    const double a = calibrate_alpha(de, beta);
    CHECK(a >= prev);
    prev = a;
  }
}
