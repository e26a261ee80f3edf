#include "pcco/density.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

namespace pcco {

namespace {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 64) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] {
      for (std::size_t i = begin; i < end; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

DensityEstimate estimate_density(const DataSet& ds, double zeta, int threads) {
  if (!(zeta > 0.0)) throw std::invalid_argument("zeta must be > 0");
  const std::size_t d = ds.size();
  DensityEstimate de;
  de.zeta = zeta;
  de.dataset_size = d;
  de.counts.assign(d, 0);
  de.probabilities.resize(static_cast<Eigen::Index>(d));
  parallel_for(d, threads, [&](std::size_t j) {
    de.counts[j] = ds.vicinity_count(j, zeta);
    de.probabilities[static_cast<Eigen::Index>(j)] =
        static_cast<double>(de.counts[j]) / static_cast<double>(d);
  });
  return de;
}

double roughness_score(const DataSet& ds, const DensityEstimate& de) {
  const std::size_t d = ds.size();
  const std::size_t k = std::max<std::size_t>(5, (d + 99) / 100);
  double score = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const auto nbrs = ds.nearest_neighbors(j, k);
    if (nbrs.empty()) continue;  // singleton integer group
    double mean = 0.0;
    for (int i : nbrs) mean += de.probabilities[i];
    mean /= static_cast<double>(nbrs.size());
    const double dev = de.probabilities[static_cast<Eigen::Index>(j)] - mean;
    score += dev * dev;
  }
  // Mean squared deviation in units of the binomial noise scale
  // mean(p)/D; the raw mean squared deviation is monotone in zeta and
  // would always elect the smallest candidate.
  const double mean_p = de.probabilities.mean();
  return score / mean_p;
}

double select_bandwidth(const DataSet& ds, const std::vector<double>& grid, int threads) {
  if (grid.empty()) throw std::invalid_argument("bandwidth grid is empty");
  for (double z : grid)
    if (!(z > 0.0)) throw std::invalid_argument("bandwidth candidates must be > 0");
  std::vector<double> sorted(grid);
  std::sort(sorted.begin(), sorted.end());
  double best_zeta = sorted.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (double z : sorted) {
    const DensityEstimate de = estimate_density(ds, z, threads);
    const double score = roughness_score(ds, de);
    if (score < best_score) {  // strict: ties keep the smaller candidate
      best_score = score;
      best_zeta = z;
    }
  }
  return best_zeta;
}

std::vector<double> default_bandwidth_grid(const DataSet& ds) {
  double scale = 0.0;
  if (ds.r2() > 0) {
    const Eigen::MatrixXd& x = ds.reals();
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::RowVectorXd var =
        (x.rowwise() - mean).array().square().colwise().sum() /
        std::max<double>(1.0, static_cast<double>(x.rows()));
    scale = std::sqrt(var.mean());
  }
  if (!(scale > 0.0)) scale = 1.0;
  std::vector<double> grid;
  const double lo = 0.05 * scale, hi = 0.8 * scale;
  const int n = 8;
  for (int i = 0; i < n; ++i)
    grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return grid;
}

AlphaFilterResult alpha_process(const DataSet& ds, const DensityEstimate& de, double alpha) {
  if (de.dataset_size != ds.size())
    throw std::invalid_argument("density estimate was built from a different dataset");
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in [0, 1)");
  AlphaFilterResult res;
  res.alpha = alpha;
  res.zeta = de.zeta;
  res.source_size = ds.size();
  const double threshold = alpha * static_cast<double>(ds.size());
  for (std::size_t j = 0; j < ds.size(); ++j) {
    if (static_cast<double>(de.counts[j]) >= threshold)
      res.kept_indices.push_back(static_cast<int>(j));
  }
  res.d_alpha = res.kept_indices.size();
  return res;
}

double calibrate_alpha(const DensityEstimate& de, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  std::vector<double> probs(de.probabilities.data(),
                            de.probabilities.data() + de.probabilities.size());
  std::sort(probs.begin(), probs.end(), std::greater<double>());
  const double needed = (1.0 - beta) * static_cast<double>(probs.size());
  // Walk the distinct levels from the top; the cumulative count at level v
  // is the number of points with probability >= v.
  std::size_t cum = 0;
  for (std::size_t i = 0; i < probs.size();) {
    std::size_t j = i;
    while (j < probs.size() && probs[j] == probs[i]) ++j;
    cum = j;
    if (static_cast<double>(cum) >= needed) return probs[i];
    i = j;
  }
  return probs.back();
}

}  // namespace pcco
