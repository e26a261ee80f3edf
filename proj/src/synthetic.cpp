#include "pcco/synthetic.hpp"

#include <cmath>
#include <stdexcept>

namespace pcco {

DataSet sample_gaussian_mixture(const std::vector<GaussianComponent>& comps, std::size_t count,
                                std::uint64_t seed) {
  if (comps.empty()) throw std::invalid_argument("mixture needs at least one component");
  const int dim = static_cast<int>(comps.front().mean.size());
  double wsum = 0.0;
  for (const auto& c : comps) {
    if (c.mean.size() != dim || c.sd.size() != dim)
      throw std::invalid_argument("mixture components must share a dimension");
    wsum += c.weight;
  }
  Rng rng(seed);
  Eigen::MatrixXd reals(count, dim);
  for (std::size_t i = 0; i < count; ++i) {
    double pick = rng.uniform01() * wsum;
    std::size_t c = 0;
    while (c + 1 < comps.size() && pick > comps[c].weight) {
      pick -= comps[c].weight;
      ++c;
    }
    for (int d = 0; d < dim; ++d)
      reals(i, d) = rng.normal(comps[c].mean[d], comps[c].sd[d]);
  }
  return DataSet::from_matrices({}, std::move(reals));
}

double mixture_density(const std::vector<GaussianComponent>& comps, const Eigen::VectorXd& x) {
  double wsum = 0.0, acc = 0.0;
  for (const auto& c : comps) wsum += c.weight;
  for (const auto& c : comps) {
    double logp = 0.0;
    for (int d = 0; d < x.size(); ++d) {
      const double z = (x[d] - c.mean[d]) / c.sd[d];
      logp += -0.5 * z * z - std::log(c.sd[d] * std::sqrt(2.0 * M_PI));
    }
    acc += c.weight / wsum * std::exp(logp);
  }
  return acc;
}

DataSet sample_uniform_box(int dim, double lo, double hi, std::size_t count,
                           std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd reals(count, dim);
  for (std::size_t i = 0; i < count; ++i)
    for (int d = 0; d < dim; ++d) reals(i, d) = rng.uniform(lo, hi);
  return DataSet::from_matrices({}, std::move(reals));
}

DataSet sample_integer_box(int r1, long long lo, long long hi, std::size_t count,
                           std::uint64_t seed) {
  Rng rng(seed);
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> ints(count, r1);
  for (std::size_t i = 0; i < count; ++i)
    for (int d = 0; d < r1; ++d) ints(i, d) = rng.uniform_int(lo, hi);
  return DataSet::from_matrices(std::move(ints), {});
}

PointSampler make_gaussian_sampler(const Eigen::VectorXd& mean, const Eigen::VectorXd& sd) {
  return [mean, sd](Rng& rng) {
    UncertaintyPoint p;
    p.real_part.resize(mean.size());
    for (int d = 0; d < mean.size(); ++d) p.real_part[d] = rng.normal(mean[d], sd[d]);
    return p;
  };
}

PointSampler make_mixture_sampler(std::vector<GaussianComponent> comps) {
  double wsum = 0.0;
  for (const auto& c : comps) wsum += c.weight;
  return [comps = std::move(comps), wsum](Rng& rng) {
    double pick = rng.uniform01() * wsum;
    std::size_t c = 0;
    while (c + 1 < comps.size() && pick > comps[c].weight) {
      pick -= comps[c].weight;
      ++c;
    }
    UncertaintyPoint p;
    p.real_part.resize(comps[c].mean.size());
    for (int d = 0; d < comps[c].mean.size(); ++d)
      p.real_part[d] = rng.normal(comps[c].mean[d], comps[c].sd[d]);
    return p;
  };
}

PointSampler make_cauchy_sampler(int dim, double scale) {
  return [dim, scale](Rng& rng) {
    UncertaintyPoint p;
    p.real_part.resize(dim);
    for (int d = 0; d < dim; ++d)
      p.real_part[d] = scale * std::tan(M_PI * (rng.uniform01() - 0.5));
    return p;
  };
}

PlantedLpInstance make_planted_lp(int dims, std::size_t planted, std::size_t multiplicity,
                                  std::size_t fillers, std::uint64_t seed) {
  if (dims < 1 || planted < 1 || static_cast<int>(planted) > dims)
    throw std::invalid_argument("need 1 <= planted <= dims");
  if (multiplicity < 1) throw std::invalid_argument("multiplicity must be >= 1");
  Rng rng(seed);

  std::vector<Eigen::VectorXd> planted_pts;
  for (std::size_t i = 0; i < planted; ++i) {
    Eigen::VectorXd p(dims);
    for (int d = 0; d < dims; ++d) p[d] = rng.uniform(-1.0, 0.0);
    p[static_cast<int>(i)] = 1.0;  // unique coordinate maximum
    planted_pts.push_back(p);
  }

  const std::size_t total = planted * multiplicity + fillers;
  Eigen::MatrixXd reals(total, dims);
  std::size_t row = 0;
  for (std::size_t i = 0; i < planted; ++i)
    for (std::size_t c = 0; c < multiplicity; ++c) reals.row(row++) = planted_pts[i];
  for (std::size_t f = 0; f < fillers; ++f) {
    for (int d = 0; d < dims; ++d) reals(row, d) = rng.uniform(-1.0, 0.5);
    ++row;
  }

  PlantedLpInstance inst;
  inst.filtered = DataSet::from_matrices({}, std::move(reals));
  inst.planted_count = planted;
  inst.multiplicity = multiplicity;
  inst.dataset_size = 10 * multiplicity;  // alpha * D == multiplicity exactly
  inst.alpha = 0.1;

  ProblemTemplate tmpl;
  tmpl.Q = Eigen::MatrixXd::Zero(dims, dims);
  tmpl.c = Eigen::VectorXd::Ones(dims);
  tmpl.rows_per_point = dims;
  tmpl.expected_r1 = 0;
  tmpl.expected_r2 = dims;
  tmpl.generator = [dims](const UncertaintyPoint& p) {
    Eigen::MatrixXd G = -Eigen::MatrixXd::Identity(dims, dims);
    Eigen::VectorXd h = -p.real_part;
    return std::make_pair(std::move(G), std::move(h));
  };
  tmpl.base_E.resize(0, dims);
  tmpl.base_b.resize(0);
  tmpl.base_G.resize(0, dims);
  tmpl.base_h.resize(0);
  inst.tmpl = std::move(tmpl);

  double obj = 0.0;
  for (int d = 0; d < dims; ++d) obj += inst.filtered.reals().col(d).maxCoeff();
  inst.full_objective = obj;
  return inst;
}

double envelope_intercept(double xi) {
  return 1.0 - xi * xi + 0.3 * xi * xi * xi * xi;
}

ProblemTemplate make_envelope_lp() {
  ProblemTemplate tmpl;
  tmpl.Q = Eigen::MatrixXd::Zero(2, 2);
  tmpl.c = Eigen::VectorXd::Zero(2);
  tmpl.c[1] = 1.0;
  tmpl.rows_per_point = 1;
  tmpl.expected_r1 = 0;
  tmpl.expected_r2 = 1;
  tmpl.generator = [](const UncertaintyPoint& p) {
    const double xi = p.real_part[0];
    Eigen::MatrixXd G(1, 2);
    G << xi, -1.0;
    Eigen::VectorXd h(1);
    h << -envelope_intercept(xi);
    return std::make_pair(std::move(G), std::move(h));
  };
  tmpl.base_E.resize(0, 2);
  tmpl.base_b.resize(0);
  tmpl.base_G.resize(0, 2);
  tmpl.base_h.resize(0);
  return tmpl;
}

DataSet sample_slope_cloud(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd reals(count, 1);
  for (std::size_t i = 0; i < count; ++i) {
    const double mag = rng.uniform(0.25, 1.0);
    reals(i, 0) = (i % 2 == 0) ? mag : -mag;
  }
  return DataSet::from_matrices({}, reals);
}

}  // namespace pcco
