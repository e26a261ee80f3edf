#include "pcco/opf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <queue>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "pcco/density.hpp"

namespace pcco {

void GridCase::validate() const {
  const int n = num_buses();
  if (n < 1) throw std::invalid_argument("case has no buses");
  if (reference_bus < 0 || reference_bus >= n)
    throw std::invalid_argument("reference bus out of range");
  if (generators.empty()) throw std::invalid_argument("case has no generators");
  for (const auto& br : branches) {
    if (br.from < 0 || br.from >= n || br.to < 0 || br.to >= n || br.from == br.to)
      throw std::invalid_argument("branch endpoints out of range");
    if (br.susceptance == 0.0) throw std::invalid_argument("branch susceptance must be nonzero");
    if (!(br.limit > 0.0)) throw std::invalid_argument("branch limit must be positive");
  }
  for (const auto& g : generators) {
    if (g.bus < 0 || g.bus >= n) throw std::invalid_argument("generator bus out of range");
    if (g.p_min > g.p_max) throw std::invalid_argument("generator p_min exceeds p_max");
  }
  for (const auto& r : renewables) {
    if (r.bus < 0 || r.bus >= n) throw std::invalid_argument("renewable bus out of range");
  }
}

GridCase GridCase::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("case file not found: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("case JSON parse failure in " + path + ": " + e.what());
  }
  GridCase gc;
  try {
    gc.name = doc.value("name", "");
    gc.base_mva = doc.value("base_mva", 100.0);
    gc.reference_bus = doc.at("reference_bus").get<int>();
    for (const auto& b : doc.at("buses")) gc.demand.push_back(b.at("demand").get<double>());
    for (const auto& b : doc.at("branches")) {
      GridBranch br;
      br.from = b.at("from").get<int>();
      br.to = b.at("to").get<int>();
      br.susceptance = b.at("susceptance").get<double>();
      br.limit = b.at("limit").get<double>();
      gc.branches.push_back(br);
    }
    for (const auto& g : doc.at("generators")) {
      GridGenerator gen;
      gen.bus = g.at("bus").get<int>();
      gen.p_min = g.at("p_min").get<double>();
      gen.p_max = g.at("p_max").get<double>();
      gen.cost_c2 = g.at("cost_c2").get<double>();
      gen.cost_c1 = g.at("cost_c1").get<double>();
      gen.cost_c0 = g.at("cost_c0").get<double>();
      gc.generators.push_back(gen);
    }
    for (const auto& r : doc.at("renewables")) {
      GridRenewable rn;
      rn.bus = r.at("bus").get<int>();
      rn.forecast = r.at("forecast").get<double>();
      gc.renewables.push_back(rn);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("case JSON schema error in " + path + ": " + e.what());
  }
  gc.validate();
  return gc;
}

void GridCase::save_json(const std::string& path) const {
  nlohmann::ordered_json doc;
  doc["name"] = name;
  doc["base_mva"] = base_mva;
  doc["reference_bus"] = reference_bus;
  doc["buses"] = nlohmann::ordered_json::array();
  for (double d : demand) doc["buses"].push_back({{"demand", d}});
  doc["branches"] = nlohmann::ordered_json::array();
  for (const auto& b : branches)
    doc["branches"].push_back({{"from", b.from},
                               {"to", b.to},
                               {"susceptance", b.susceptance},
                               {"limit", b.limit}});
  doc["generators"] = nlohmann::ordered_json::array();
  for (const auto& g : generators)
    doc["generators"].push_back({{"bus", g.bus},
                                 {"p_min", g.p_min},
                                 {"p_max", g.p_max},
                                 {"cost_c2", g.cost_c2},
                                 {"cost_c1", g.cost_c1},
                                 {"cost_c0", g.cost_c0}});
  doc["renewables"] = nlohmann::ordered_json::array();
  for (const auto& r : renewables)
    doc["renewables"].push_back({{"bus", r.bus}, {"forecast", r.forecast}});
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write case file: " + path);
  out << doc.dump(2) << "\n";
}

DcMatrices build_matrices(const GridCase& gc) {
  gc.validate();
  const int n = gc.num_buses();

  // Connectivity first: a disconnected network makes the reduced
  // susceptance matrix singular.
  {
    std::vector<std::vector<int>> adj(n);
    for (const auto& br : gc.branches) {
      adj[br.from].push_back(br.to);
      adj[br.to].push_back(br.from);
    }
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    q.push(gc.reference_bus);
    seen[gc.reference_bus] = 1;
    int reached = 1;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++reached;
          q.push(v);
        }
    }
    if (reached != n) throw std::runtime_error("Singular: network is disconnected");
  }

  DcMatrices m;
  m.laplacian = Eigen::MatrixXd::Zero(n, n);
  for (const auto& br : gc.branches) {
    m.laplacian(br.from, br.to) -= br.susceptance;
    m.laplacian(br.to, br.from) -= br.susceptance;
    m.laplacian(br.from, br.from) += br.susceptance;
    m.laplacian(br.to, br.to) += br.susceptance;
  }

  m.gen_incidence = Eigen::MatrixXd::Zero(n, gc.num_generators());
  for (int j = 0; j < gc.num_generators(); ++j) m.gen_incidence(gc.generators[j].bus, j) = 1.0;
  m.ren_incidence = Eigen::MatrixXd::Zero(n, gc.num_renewables());
  for (int j = 0; j < gc.num_renewables(); ++j) m.ren_incidence(gc.renewables[j].bus, j) = 1.0;

  const int ref = gc.reference_bus;
  std::vector<int> keep;
  keep.reserve(n - 1);
  for (int i = 0; i < n; ++i)
    if (i != ref) keep.push_back(i);
  m.b_reduced.resize(n - 1, n - 1);
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n - 1; ++j) m.b_reduced(i, j) = m.laplacian(keep[i], keep[j]);

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m.b_reduced);
  const Eigen::MatrixXd inv = lu.solve(Eigen::MatrixXd::Identity(n - 1, n - 1));
  if ((m.b_reduced * inv - Eigen::MatrixXd::Identity(n - 1, n - 1)).lpNorm<Eigen::Infinity>() >
      1e-6)
    throw std::runtime_error("Singular: reduced susceptance matrix is not invertible");

  m.b_pseudo = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n - 1; ++j) m.b_pseudo(keep[i], keep[j]) = inv(i, j);

  m.response = m.b_pseudo * m.gen_incidence;
  m.ren_response = m.b_pseudo * m.ren_incidence;
  return m;
}

namespace {

struct TemplateContext {
  GridCase gc;
  DcMatrices mats;
  Eigen::VectorXd mean;         // folded into the forecast injection
  std::vector<int> theta_var;   // bus -> decision index (-1 for reference)
  int g = 0, n_bus = 0, r = 0, n_vars = 0;
};

Eigen::VectorXd deviation_vector(const UncertaintyPoint& p, int r) {
  if (p.dim() != r)
    throw std::invalid_argument("data point dimension " + std::to_string(p.dim()) +
                                " does not match renewable count " + std::to_string(r));
  Eigen::VectorXd xi(r);
  for (int i = 0; i < p.r1(); ++i) xi[i] = static_cast<double>(p.integer_part[i]);
  for (int i = 0; i < p.r2(); ++i) xi[p.r1() + i] = p.real_part[i];
  return xi;
}

}  // namespace

ProblemTemplate build_template(const GridCase& gc, const DcMatrices& mats,
                               const OpfDataStats& stats) {
  gc.validate();
  const int g = gc.num_generators();
  const int n_bus = gc.num_buses();
  const int r = gc.num_renewables();
  if (stats.mean_deviation.size() != r)
    throw std::invalid_argument("mean_deviation must have one entry per renewable");

  auto ctx = std::make_shared<TemplateContext>();
  ctx->gc = gc;
  ctx->mats = mats;
  ctx->mean = stats.mean_deviation;
  ctx->g = g;
  ctx->n_bus = n_bus;
  ctx->r = r;
  ctx->n_vars = gc.num_decision_vars();
  ctx->theta_var.assign(n_bus, -1);
  {
    int k = g;
    for (int i = 0; i < n_bus; ++i)
      if (i != gc.reference_bus) ctx->theta_var[i] = k++;
  }

  ProblemTemplate tmpl;
  const int n = ctx->n_vars;
  tmpl.Q = Eigen::MatrixXd::Zero(n, n);
  tmpl.c = Eigen::VectorXd::Zero(n);
  tmpl.c0 = 0.0;
  for (int i = 0; i < g; ++i) {
    tmpl.Q(i, i) = 2.0 * gc.generators[i].cost_c2;
    tmpl.Q(g + n_bus - 1 + i, g + n_bus - 1 + i) =
        2.0 * stats.variance_total_deviation * gc.generators[i].cost_c2;
    tmpl.c[i] = gc.generators[i].cost_c1;
    tmpl.c0 += gc.generators[i].cost_c0;
  }

  tmpl.rows_per_point = gc.rows_per_data_point();
  tmpl.expected_r1 = -1;  // integer/real split is free; total must equal r
  tmpl.expected_r2 = -1;

  // Power balance: B theta - A p = C (forecast - mean) - demand, then
  // sum(lambda) = 1.
  {
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs(n_bus + 1);
    Eigen::VectorXd injection = Eigen::VectorXd::Zero(n_bus);
    for (int j = 0; j < r; ++j)
      injection[gc.renewables[j].bus] += gc.renewables[j].forecast - stats.mean_deviation[j];
    for (int i = 0; i < n_bus; ++i) {
      for (int j = 0; j < n_bus; ++j) {
        if (ctx->theta_var[j] >= 0 && mats.laplacian(i, j) != 0.0)
          trips.emplace_back(i, ctx->theta_var[j], mats.laplacian(i, j));
      }
      for (int j = 0; j < g; ++j)
        if (gc.generators[j].bus == i) trips.emplace_back(i, j, -1.0);
      rhs[i] = injection[i] - gc.demand[i];
    }
    for (int j = 0; j < g; ++j) trips.emplace_back(n_bus, g + n_bus - 1 + j, 1.0);
    rhs[n_bus] = 1.0;
    tmpl.base_E.resize(n_bus + 1, n);
    tmpl.base_E.setFromTriplets(trips.begin(), trips.end());
    tmpl.base_b = rhs;
  }
  tmpl.base_G.resize(0, n);
  tmpl.base_h.resize(0);
  tmpl.lo = Eigen::VectorXd::Constant(n, -kInf);
  tmpl.hi = Eigen::VectorXd::Constant(n, kInf);
  for (int i = 0; i < g; ++i) {
    tmpl.lo[g + n_bus - 1 + i] = 0.0;
    tmpl.hi[g + n_bus - 1 + i] = 1.0;
  }

  tmpl.generator = [ctx](const UncertaintyPoint& p) {
    const int g = ctx->g, n_bus = ctx->n_bus, n = ctx->n_vars;
    const Eigen::VectorXd xi = deviation_vector(p, ctx->r) - ctx->mean;
    const double total = xi.sum();  // e' xi
    // Real-time angles: theta_hat = theta + total * (response * lambda)
    //                    - ren_response * xi.
    const Eigen::VectorXd shift = ctx->mats.ren_response * xi;

    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(ctx->gc.rows_per_data_point(), n);
    Eigen::VectorXd h(ctx->gc.rows_per_data_point());
    int row = 0;
    for (const auto& br : ctx->gc.branches) {
      const double b = br.susceptance;
      const int ti = ctx->theta_var[br.from];
      const int tj = ctx->theta_var[br.to];
      // flow = b (theta_hat_i - theta_hat_j)
      //      = b (theta_i - theta_j) + b total (resp_i - resp_j) lambda
      //        - b (shift_i - shift_j)
      const double cshift = b * (shift[br.from] - shift[br.to]);
      Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(n);
      if (ti >= 0) a[ti] += b;
      if (tj >= 0) a[tj] -= b;
      for (int c = 0; c < g; ++c)
        a[g + n_bus - 1 + c] +=
            b * total * (ctx->mats.response(br.from, c) - ctx->mats.response(br.to, c));
      G.row(row) = a;
      h[row] = br.limit + cshift;
      ++row;
      G.row(row) = -a;
      h[row] = br.limit - cshift;
      ++row;
    }
    for (int c = 0; c < g; ++c) {
      // p_c + lambda_c * total within [p_min, p_max]
      G(row, c) = 1.0;
      G(row, g + n_bus - 1 + c) = total;
      h[row] = ctx->gc.generators[c].p_max;
      ++row;
      G(row, c) = -1.0;
      G(row, g + n_bus - 1 + c) = -total;
      h[row] = -ctx->gc.generators[c].p_min;
      ++row;
    }
    return std::make_pair(std::move(G), std::move(h));
  };

  validate_template(tmpl);
  return tmpl;
}

Eigen::VectorXd mean_deviation(const DataSet& ds) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(ds.dim());
  for (std::size_t j = 0; j < ds.size(); ++j) {
    for (int c = 0; c < ds.r1(); ++c) mu[c] += static_cast<double>(ds.ints()(j, c));
    for (int c = 0; c < ds.r2(); ++c) mu[ds.r1() + c] += ds.reals()(j, c);
  }
  return mu / static_cast<double>(ds.size());
}

double weighted_total_deviation_moment(const std::vector<UncertaintyPoint>& pts,
                                       const std::vector<std::size_t>& weights,
                                       double normalizer, const Eigen::VectorXd& mean) {
  if (!weights.empty() && weights.size() != pts.size())
    throw std::invalid_argument("weights must be empty or match the point count");
  if (!(normalizer > 0)) throw std::invalid_argument("normalizer must be positive");
  double acc = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Eigen::VectorXd xi =
        deviation_vector(pts[k], static_cast<int>(mean.size())) - mean;
    const double t = xi.sum();
    acc += (weights.empty() ? 1.0 : static_cast<double>(weights[k])) * t * t;
  }
  return acc / normalizer;
}

OpfDecision split_decision(const GridCase& gc, const Eigen::VectorXd& x) {
  const int g = gc.num_generators();
  const int n_bus = gc.num_buses();
  if (x.size() != gc.num_decision_vars())
    throw std::invalid_argument("decision vector has wrong size");
  OpfDecision d;
  d.p_gen = x.head(g);
  d.lambda = x.tail(g);
  d.theta = Eigen::VectorXd::Zero(n_bus);
  int k = g;
  for (int i = 0; i < n_bus; ++i)
    if (i != gc.reference_bus) d.theta[i] = x[k++];
  return d;
}

namespace {

std::vector<UncertaintyPoint> collect(const DataSet& ds, const std::vector<int>& idx) {
  std::vector<UncertaintyPoint> pts;
  pts.reserve(idx.size());
  for (int i : idx) pts.push_back(ds.point(static_cast<std::size_t>(i)));
  return pts;
}

StageResult solve_stage(const std::string& name, const ProblemTemplate& tmpl,
                        const std::vector<UncertaintyPoint>& pts, const SolveOptions& opts) {
  StageResult st;
  st.name = name;
  st.points = pts.size();
  const auto t0 = std::chrono::steady_clock::now();
  AssembledProgram prog = assemble(tmpl, pts);
  st.constraint_rows = prog.total_rows();
  SolveResult res = solve_qp(prog.qp, opts);
  st.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  st.objective = res.objective;
  st.status = res.status;
  st.x = res.x;
  if (res.status != SolveStatus::Optimal)
    throw std::runtime_error("stage " + name + ": solve ended with status " +
                             to_string(res.status));
  return st;
}

}  // namespace

PipelineResult run_pipeline(const GridCase& gc, const DataSet& ds, const PipelineConfig& cfg) {
  gc.validate();
  if (ds.dim() != gc.num_renewables())
    throw std::invalid_argument("dataset dimension does not match renewable count");
  if (!(cfg.alpha >= 0.0 && cfg.alpha < 1.0))
    throw std::invalid_argument("alpha must lie in [0, 1)");
  if (!(cfg.rho >= 0.0 && cfg.rho <= 1.0))
    throw std::invalid_argument("rho must lie in [0, 1]");

  PipelineResult out;
  const DcMatrices mats = build_matrices(gc);
  out.data_mean = mean_deviation(ds);

  // Stage: density + alpha filter.
  double zeta = cfg.zeta;
  AlphaFilterResult filtered;
  DensityEstimate de;
  try {
    if (zeta <= 0.0) zeta = select_bandwidth(ds, default_bandwidth_grid(ds), cfg.threads);
    de = estimate_density(ds, zeta, cfg.threads);
    filtered = alpha_process(ds, de, cfg.alpha);
    if (filtered.d_alpha == 0) throw std::runtime_error("alpha filter kept no points");
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage alpha: ") + e.what());
  }
  out.zeta = zeta;

  // Stage: plan + subsample.
  SamplingPlan plan;
  std::vector<int> z_idx;
  const std::size_t b_bar =
      cfg.b_bar > 0 ? cfg.b_bar : static_cast<std::size_t>(gc.num_decision_vars());
  try {
    plan = plan_sample_size(cfg.rho, b_bar, cfg.alpha, ds.size(), filtered.d_alpha);
    z_idx = draw_subsample(filtered, plan, cfg.seed);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage z: ") + e.what());
  }

  // Stage: SDS.
  const double eta = cfg.eta < 0.0 ? zeta : cfg.eta;
  const bool run_sds = !cfg.skip_sds && eta > 0.0;
  DataSet z_set = ds.subset(z_idx);
  SdsResult sds;
  std::vector<int> eta_idx;          // indices into the source dataset
  std::vector<std::size_t> weights;  // per survivor
  try {
    if (run_sds) {
      sds = ds.r1() == 0 ? sds_continuous(z_set, eta, cfg.seed + 1)
                         : sds_mixed(z_set, {eta}, cfg.seed + 1);
      for (int local : sds.selected) eta_idx.push_back(z_idx[local]);
      weights = sds.weights;
    } else {
      eta_idx = z_idx;
      weights.assign(z_idx.size(), 1);
    }
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage eta: ") + e.what());
  }

  out.reduction.seed = cfg.seed;
  out.reduction.alpha = cfg.alpha;
  out.reduction.zeta = zeta;
  out.reduction.rho = cfg.rho;
  out.reduction.eta = run_sds ? sds.group_eta : std::vector<double>{eta};
  out.reduction.b_bar = b_bar;
  out.reduction.dataset_size = ds.size();
  out.reduction.d_alpha = filtered.d_alpha;
  out.reduction.z = plan.z;
  out.reduction.z_eta = eta_idx.size();
  out.reduction.weights = weights;
  out.reduction.indices = eta_idx;

  // Build the three programs. The variance term follows each stage's own
  // weighted data; the mean is folded once, from the full dataset.
  const auto alpha_pts = collect(ds, filtered.kept_indices);
  const auto z_pts = collect(ds, z_idx);
  const auto eta_pts = collect(ds, eta_idx);

  OpfDataStats stats_alpha{out.data_mean,
                           weighted_total_deviation_moment(
                               alpha_pts, {}, static_cast<double>(alpha_pts.size()),
                               out.data_mean)};
  OpfDataStats stats_z{out.data_mean,
                       weighted_total_deviation_moment(
                           z_pts, {}, static_cast<double>(z_pts.size()), out.data_mean)};
  OpfDataStats stats_eta{out.data_mean,
                         weighted_total_deviation_moment(
                             eta_pts, weights, static_cast<double>(z_pts.size()),
                             out.data_mean)};

  const ProblemTemplate tmpl_alpha = build_template(gc, mats, stats_alpha);
  const ProblemTemplate tmpl_z = build_template(gc, mats, stats_z);
  const ProblemTemplate tmpl_eta = build_template(gc, mats, stats_eta);

  std::vector<StageResult> stages(run_sds ? 3 : 2);
  std::exception_ptr error;
  auto run_one = [&](int slot, const std::string& name, const ProblemTemplate& tmpl,
                     const std::vector<UncertaintyPoint>& pts) {
    try {
      stages[slot] = solve_stage(name, tmpl, pts, cfg.solve);
    } catch (...) {
      if (!error) error = std::current_exception();
    }
  };
  if (cfg.threads > 1) {
    std::vector<std::thread> pool;
    pool.emplace_back(run_one, 0, "alpha", std::cref(tmpl_alpha), std::cref(alpha_pts));
    pool.emplace_back(run_one, 1, "z", std::cref(tmpl_z), std::cref(z_pts));
    if (run_sds) pool.emplace_back(run_one, 2, "eta", std::cref(tmpl_eta), std::cref(eta_pts));
    for (auto& th : pool) th.join();
  } else {
    run_one(0, "alpha", tmpl_alpha, alpha_pts);
    run_one(1, "z", tmpl_z, z_pts);
    if (run_sds) run_one(2, "eta", tmpl_eta, eta_pts);
  }
  if (error) std::rethrow_exception(error);

  const double ref = stages[0].objective;
  for (auto& st : stages)
    st.gap_vs_alpha_pct = 100.0 * (ref - st.objective) / std::max(std::abs(ref), 1e-300);
  out.stages = std::move(stages);
  return out;
}

}  // namespace pcco
