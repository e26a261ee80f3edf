#include "pcco/analysis.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "pcco/density.hpp"
#include "pcco/rng.hpp"

namespace pcco {

namespace {

std::vector<UncertaintyPoint> all_points(const DataSet& ds) {
  std::vector<UncertaintyPoint> pts;
  pts.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) pts.push_back(ds.point(i));
  return pts;
}

std::vector<int> sample_without_replacement(std::size_t universe, std::size_t k, Rng& rng) {
  std::vector<int> idx(universe);
  for (std::size_t i = 0; i < universe; ++i) idx[i] = static_cast<int>(i);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(universe - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

void run_trials(std::size_t trials, int threads, const std::function<void(std::size_t)>& body) {
  threads = std::max(1, threads);
  if (threads == 1) {
    for (std::size_t t = 0; t < trials; ++t) body(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t t = next.fetch_add(1);
        if (t >= trials) return;
        body(t);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

BoundExperiment verify_varrho(const PlantedLpInstance& inst, const SamplingPlan& plan,
                              std::size_t trials, std::uint64_t seed, int threads, double tol) {
  BoundExperiment exp;
  exp.name = "varrho";
  exp.trials = trials;
  exp.seed = seed;
  exp.bound = varrho_lower_bound(plan.z, plan.b_bar, inst.alpha, inst.dataset_size,
                                 inst.filtered.size());

  const auto pts = all_points(inst.filtered);
  const double ref = inst.full_objective;
  std::atomic<std::size_t> successes{0}, failures{0};

  run_trials(trials, threads, [&](std::size_t t) {
    Rng rng = Rng::for_stream(seed, t);
    const auto idx = sample_without_replacement(pts.size(), plan.z, rng);
    std::vector<UncertaintyPoint> sub;
    sub.reserve(idx.size());
    for (int i : idx) sub.push_back(pts[i]);
    const AssembledProgram prog = assemble(inst.tmpl, sub);
    const SolveResult res = solve_qp(prog.qp);
    if (res.status != SolveStatus::Optimal) {
      ++failures;
      return;
    }
    if (std::abs(res.objective - ref) <= tol * (1.0 + std::abs(ref))) ++successes;
  });

  exp.solver_failures = failures;
  exp.observed = static_cast<double>(successes) / static_cast<double>(trials);
  exp.sigma = std::sqrt(std::max(exp.bound * (1.0 - exp.bound), 0.0) /
                        static_cast<double>(trials));
  exp.verdict = exp.observed >= exp.bound - 3.0 * exp.sigma;
  return exp;
}

PhiEstimate estimate_phi_bound(const ProblemTemplate& tmpl, const DataSet& points,
                               const SolveResult& optimum, const BoundaryReport& boundary,
                               double eta, const PhiOptions& opts) {
  const Eigen::Index n = tmpl.num_vars();
  const auto pts = all_points(points);
  if (optimum.status != SolveStatus::Optimal)
    throw std::invalid_argument("phi bound needs an Optimal base solve");
  if (eta < 0.0) throw std::invalid_argument("eta must be >= 0");
  if (eta == 0.0) {
    // no thinning: both programs coincide and the bound is exact
    PhiEstimate exact;
    exact.phi_lower = exact.phi_lower_first = 1.0;
    const SolveResult again = solve_qp(assemble(tmpl, pts).qp, opts.solve);
    if (again.status != SolveStatus::Optimal)
      throw std::runtime_error("re-solve failed at eta = 0");
    const double xnorm = optimum.x.norm();
    exact.measured_phi = xnorm > 0 ? 1.0 - (again.x - optimum.x).norm() / xnorm : 1.0;
    exact.z_eta = pts.size();
    return exact;
  }

  // Collect the binding rows owned by boundary points; the implicit-map
  // argument needs exactly n of them.
  const int m = tmpl.rows_per_point;
  std::vector<std::pair<int, int>> binding;  // (point, row-within-point)
  {
    std::vector<char> is_boundary(pts.size(), 0);
    for (int k : boundary.boundary_points) is_boundary[k] = 1;
    for (int row : boundary.active_rows) {
      const int point = row / m;
      if (point < static_cast<int>(pts.size()) && is_boundary[point])
        binding.emplace_back(point, row % m);
    }
  }
  if (static_cast<Eigen::Index>(binding.size()) != n)
    throw std::runtime_error("boundary constraint count B_c = " + std::to_string(binding.size()) +
                             " does not equal n = " + std::to_string(n) +
                             "; the implicit-map precondition fails");

  const bool mixed = points.r1() > 0;
  const int pert_dims = mixed ? points.r2() : points.dim();

  // Square binding system A(xi) x = rhs(xi): row i comes from generator
  // row binding[i].second of its point.
  auto binding_system = [&](const std::vector<UncertaintyPoint>& bpts, Eigen::MatrixXd& A,
                            Eigen::VectorXd& rhs) {
    A.resize(n, n);
    rhs.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto [gk, hk] = tmpl.generator(bpts[i]);
      A.row(i) = gk.row(binding[i].second);
      rhs[i] = hk[binding[i].second];
    }
  };

  std::vector<UncertaintyPoint> base_pts;
  base_pts.reserve(n);
  for (auto& [pt, r] : binding) base_pts.push_back(pts[pt]);

  Eigen::MatrixXd A;
  Eigen::VectorXd rhs;
  binding_system(base_pts, A, rhs);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  PhiEstimate est;
  est.jacobian_condition = smin > 0 ? smax / smin : kInf;
  if (!(smin > 0) || est.jacobian_condition > 1e12)
    throw std::runtime_error("binding Jacobian is singular (condition " +
                             std::to_string(est.jacobian_condition) + ")");

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const Eigen::VectorXd x0 = lu.solve(rhs);

  double scale = 1.0;
  for (const auto& p : base_pts) {
    for (double v : p.integer_part) scale = std::max(scale, std::abs(static_cast<double>(v)));
    if (p.r2() > 0) scale = std::max(scale, p.real_part.cwiseAbs().maxCoeff());
  }
  const double delta = opts.delta > 0 ? opts.delta : 1e-5 * scale;

  auto solve_perturbed = [&](Eigen::Index block, int coord, double step) {
    std::vector<UncertaintyPoint> moved = base_pts;
    moved[block].real_part[coord] += step;  // real coords only; integers stay fixed
    Eigen::MatrixXd Ap;
    Eigen::VectorXd rp;
    binding_system(moved, Ap, rp);
    return Eigen::PartialPivLU<Eigen::MatrixXd>(Ap).solve(rp).eval();
  };

  const Eigen::Index cols = n * pert_dims;
  est.H.resize(n, cols);
  for (Eigen::Index blk = 0; blk < n; ++blk) {
    for (int d = 0; d < pert_dims; ++d) {
      const Eigen::Index col = blk * pert_dims + d;
      if (opts.central) {
        est.H.col(col) = (solve_perturbed(blk, d, delta) - solve_perturbed(blk, d, -delta)) /
                         (2.0 * delta);
      } else {
        est.H.col(col) = (solve_perturbed(blk, d, delta) - x0) / delta;
      }
    }
  }
  est.h_norm = est.H.jacobiSvd().singularValues().maxCoeff();

  if (opts.second_order) {
    // Frobenius norm of the finite-difference Hessian tensor.
    double acc = 0.0;
    for (Eigen::Index blk = 0; blk < n; ++blk) {
      for (int d = 0; d < pert_dims; ++d) {
        std::vector<UncertaintyPoint> moved = base_pts;
        moved[blk].real_part[d] += delta;
        Eigen::MatrixXd Hp(n, cols);
        Eigen::MatrixXd Ap;
        Eigen::VectorXd rp;
        binding_system(moved, Ap, rp);
        Eigen::PartialPivLU<Eigen::MatrixXd> lup(Ap);
        const Eigen::VectorXd xp = lup.solve(rp);
        for (Eigen::Index blk2 = 0; blk2 < n; ++blk2) {
          for (int d2 = 0; d2 < pert_dims; ++d2) {
            std::vector<UncertaintyPoint> moved2 = moved;
            moved2[blk2].real_part[d2] += delta;
            Eigen::MatrixXd A2;
            Eigen::VectorXd r2;
            binding_system(moved2, A2, r2);
            Hp.col(blk2 * pert_dims + d2) =
                (Eigen::PartialPivLU<Eigen::MatrixXd>(A2).solve(r2) - xp) / delta;
          }
        }
        acc += (Hp - est.H).squaredNorm() / (delta * delta);
      }
    }
    est.h2_norm = std::sqrt(acc);
  }

  const double xnorm = optimum.x.norm();
  if (!(xnorm > 0)) throw std::runtime_error("reference optimum has zero norm");

  // Thinning displacement per binding block: 2 eta for the continuous
  // metric; for mixed data aggregate per-block group radii.
  if (mixed) {
    double acc = 0.0;
    for (auto& [pt, r] : binding) {
      (void)r;
      acc += eta * eta;  // single broadcast radius per group here
    }
    est.eta_hat = 2.0 * std::sqrt(acc);
    est.phi_lower_first = 1.0 - est.h_norm * est.eta_hat / xnorm;
    est.phi_lower = est.phi_lower_first -
                    (opts.second_order ? 0.5 * est.h2_norm * est.eta_hat * est.eta_hat / xnorm
                                       : 0.0);
  } else {
    const double nd = static_cast<double>(n);
    est.eta_hat = 2.0 * std::sqrt(nd) * eta;
    est.phi_lower_first = 1.0 - 2.0 * std::sqrt(nd) * est.h_norm * eta / xnorm;
    est.phi_lower = est.phi_lower_first -
                    (opts.second_order ? 2.0 * nd * est.h2_norm * eta * eta / xnorm : 0.0);
  }

  // Measured accuracy of an actual thinning run at this radius.
  const SdsResult sds = mixed ? sds_mixed(points, {eta}, opts.sds_seed)
                              : sds_continuous(points, eta, opts.sds_seed);
  est.z_eta = sds.z_eta;
  std::vector<UncertaintyPoint> survivors;
  survivors.reserve(sds.selected.size());
  for (int i : sds.selected) survivors.push_back(pts[i]);
  const SolveResult thin = solve_qp(assemble(tmpl, survivors).qp, opts.solve);
  if (thin.status != SolveStatus::Optimal)
    throw std::runtime_error("thinned solve failed: " + std::string(to_string(thin.status)));
  est.measured_phi = 1.0 - (thin.x - optimum.x).norm() / xnorm;
  return est;
}

OmegaReport verify_omega_monotone(const ProblemTemplate& tmpl, const DataSet& points,
                                  const std::vector<double>& etas, std::size_t trials,
                                  std::uint64_t seed, double tol, int threads,
                                  const SolveOptions& solve) {
  OmegaReport report;
  report.etas = etas;
  report.trials = trials;
  const auto pts = all_points(points);
  const SolveResult ref = solve_qp(assemble(tmpl, pts).qp, solve);
  if (ref.status != SolveStatus::Optimal)
    throw std::runtime_error("reference solve failed");
  report.reference_objective = ref.objective;
  const bool mixed = points.r1() > 0;

  for (std::size_t e = 0; e < etas.size(); ++e) {
    std::atomic<std::size_t> ok{0};
    run_trials(trials, threads, [&](std::size_t t) {
      const std::uint64_t s = seed ^ (0x51ed2700dcull + 1315423911ull * e);
      const SdsResult sds = mixed ? sds_mixed(points, {etas[e]}, s + t)
                                  : sds_continuous(points, etas[e], s + t);
      std::vector<UncertaintyPoint> survivors;
      survivors.reserve(sds.selected.size());
      for (int i : sds.selected) survivors.push_back(pts[i]);
      const SolveResult res = solve_qp(assemble(tmpl, survivors).qp, solve);
      if (res.status == SolveStatus::Optimal &&
          std::abs(res.objective - ref.objective) <= tol * (1.0 + std::abs(ref.objective)))
        ++ok;
    });
    const double w = static_cast<double>(ok) / static_cast<double>(trials);
    report.omega.push_back(w);
    report.sigma.push_back(std::sqrt(std::max(w * (1.0 - w), 1.0 / static_cast<double>(trials)) /
                                     static_cast<double>(trials)));
  }

  for (std::size_t i = 0; i + 1 < etas.size(); ++i) {
    const double noise = 3.0 * std::hypot(report.sigma[i], report.sigma[i + 1]);
    if (report.omega[i + 1] > report.omega[i] + noise) {
      report.monotone_within_noise = false;
      report.violations.emplace_back(etas[i], etas[i + 1]);
    }
  }
  return report;
}

double scenario_sample_size(int n, double epsilon, double beta) {
  const double e = std::exp(1.0);
  return std::ceil(e * (static_cast<double>(n) - std::log(epsilon)) / (beta * (e - 1.0)));
}

ScenarioComparison compare_scenario_method(const ProblemTemplate& tmpl,
                                           const PointSampler& sampler,
                                           const ScenarioConfig& cfg) {
  ScenarioComparison out;
  out.n_samples = cfg.n_samples;
  out.alpha = cfg.alpha;
  out.trials = cfg.trials;

  // Contour proxy: alpha-filter a dense pool.
  Rng pool_rng(cfg.seed);
  std::vector<UncertaintyPoint> pool;
  pool.reserve(cfg.pool_size);
  for (std::size_t i = 0; i < cfg.pool_size; ++i) pool.push_back(sampler(pool_rng));
  const DataSet pool_ds = DataSet::from_points(pool);
  const double zeta =
      cfg.zeta > 0 ? cfg.zeta : select_bandwidth(pool_ds, default_bandwidth_grid(pool_ds));
  const DensityEstimate de = estimate_density(pool_ds, zeta);
  const AlphaFilterResult keep = alpha_process(pool_ds, de, cfg.alpha);
  std::vector<UncertaintyPoint> kept;
  kept.reserve(keep.kept_indices.size());
  for (int i : keep.kept_indices) kept.push_back(pool[i]);
  const AssembledProgram proxy = assemble(tmpl, kept);
  const SolveResult proxy_opt = solve_qp(proxy.qp);
  if (proxy_opt.status != SolveStatus::Optimal)
    throw std::runtime_error("contour proxy solve failed");
  out.proxy_objective = proxy_opt.objective;

  // Probe cloud around the proxy optimum.
  Rng probe_rng(cfg.seed + 1);
  const double spread = 2.0 * (1.0 + proxy_opt.x.lpNorm<Eigen::Infinity>());
  std::vector<Eigen::VectorXd> probes;
  probes.reserve(cfg.probes);
  for (std::size_t i = 0; i < cfg.probes; ++i) {
    Eigen::VectorXd x = proxy_opt.x;
    for (Eigen::Index d = 0; d < x.size(); ++d) x[d] += probe_rng.uniform(-spread, spread);
    probes.push_back(std::move(x));
  }
  std::vector<char> in_proxy(cfg.probes);
  for (std::size_t i = 0; i < cfg.probes; ++i)
    in_proxy[i] = check_feasible(proxy, probes[i], cfg.tol).feasible;

  std::size_t proper = 0, unequal = 0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    Rng rng = Rng::for_stream(cfg.seed + 2, t);
    std::vector<UncertaintyPoint> iid;
    iid.reserve(cfg.n_samples);
    for (std::size_t i = 0; i < cfg.n_samples; ++i) iid.push_back(sampler(rng));
    const AssembledProgram scen = assemble(tmpl, iid);
    bool contains_proxy = true, strictly_bigger = false, differs = false;
    for (std::size_t i = 0; i < cfg.probes; ++i) {
      const bool in_scen = check_feasible(scen, probes[i], cfg.tol).feasible;
      if (in_proxy[i] && !in_scen) contains_proxy = false;
      if (in_scen && !in_proxy[i]) strictly_bigger = true;
      if (in_scen != static_cast<bool>(in_proxy[i])) differs = true;
    }
    if (contains_proxy && strictly_bigger) ++proper;
    if (differs) ++unequal;
  }
  out.freq_proper_superset = static_cast<double>(proper) / static_cast<double>(cfg.trials);
  out.freq_not_equal = static_cast<double>(unequal) / static_cast<double>(cfg.trials);
  return out;
}

CcMembership cc_violation_probability(const ProblemTemplate& tmpl, const Eigen::VectorXd& x,
                                      const PointSampler& sampler, std::size_t draws,
                                      std::uint64_t seed, double tol) {
  Rng rng(seed);
  std::size_t violated = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const UncertaintyPoint p = sampler(rng);
    auto [gk, hk] = tmpl.generator(p);
    if (((gk * x - hk).array() > tol).any()) ++violated;
  }
  CcMembership m;
  m.draws = draws;
  m.violation_probability = static_cast<double>(violated) / static_cast<double>(draws);
  m.ci_halfwidth = 1.96 * std::sqrt(std::max(m.violation_probability *
                                                 (1.0 - m.violation_probability),
                                             1.0 / static_cast<double>(draws)) /
                                    static_cast<double>(draws));
  return m;
}

}  // namespace pcco
