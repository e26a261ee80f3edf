#include <fstream>

#include "doctest.h"
#include "pcco/density.hpp"
#include "pcco/opf.hpp"
#include "pcco/report_io.hpp"
#include "pcco/rng.hpp"
#include "pcco/synthetic.hpp"

using namespace pcco;

namespace {

GridCase two_bus() {
  GridCase gc;
  gc.name = "pair";
  gc.reference_bus = 0;
  gc.demand = {0.0, 50.0};
  gc.branches = {{0, 1, 10.0, 100.0}};
  gc.generators = {{0, 0.0, 120.0, 0.01, 20.0, 0.0}};
  gc.renewables = {{1, 10.0}};
  return gc;
}

GridCase bundled_case6() {
  return GridCase::load_json(std::string(PCCO_DATA_DIR) + "/case6.json");
}

DataSet bundled_history() {
  return DataSet::load_csv(std::string(PCCO_DATA_DIR) + "/wind6.csv", 0, 2);
}

UncertaintyPoint deviation(std::initializer_list<double> vals) {
  UncertaintyPoint p;
  p.real_part.resize(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double v : vals) p.real_part[i++] = v;
  return p;
}

}  // namespace

TEST_CASE("two-bus matrices by hand") {
  const DcMatrices m = build_matrices(two_bus());
  Eigen::MatrixXd b_expected(2, 2);
  b_expected << 10, -10, -10, 10;
  CHECK((m.laplacian - b_expected).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(m.b_reduced(0, 0) == 10.0);
  CHECK(m.b_pseudo(0, 0) == 0.0);
  CHECK(m.b_pseudo(0, 1) == 0.0);
  CHECK(m.b_pseudo(1, 1) == doctest::Approx(0.1));
}

TEST_CASE("disconnected network is singular") {
  GridCase gc = two_bus();
  gc.demand.push_back(5.0);  // third bus with no branch
  CHECK_THROWS_WITH_AS(build_matrices(gc), doctest::Contains("Singular"), std::runtime_error);
}

TEST_CASE("laplacian rows sum to zero on the bundled cases") {
  for (const char* name : {"/case6.json", "/case39.json"}) {
    const GridCase gc = GridCase::load_json(std::string(PCCO_DATA_DIR) + name);
    const DcMatrices m = build_matrices(gc);
    CHECK(m.laplacian.rowwise().sum().lpNorm<Eigen::Infinity>() <= 1e-9);
    const int n = gc.num_buses();
    const Eigen::MatrixXd prod = m.b_pseudo * m.laplacian;
    for (int i = 0; i < n; ++i) {
      if (i == gc.reference_bus) continue;
      for (int j = 0; j < n; ++j) {
        if (j == gc.reference_bus) continue;
        CHECK(prod(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));
      }
    }
    CHECK((m.gen_incidence.colwise().sum().array() == 1.0).all());
    CHECK((m.ren_incidence.colwise().sum().array() == 1.0).all());
  }
}

TEST_CASE("per-point row count follows the branch and generator counts") {
  const GridCase gc = bundled_case6();
  CHECK(gc.branches.size() == 7);
  CHECK(gc.num_generators() == 3);
  CHECK(gc.rows_per_data_point() == 2 * 7 + 2 * 3);
  CHECK(gc.num_decision_vars() == 2 * 3 + 6 - 1);
}

TEST_CASE("real-time balance identity holds for random recourse states") {
  const GridCase gc = bundled_case6();
  const DcMatrices m = build_matrices(gc);
  const int nb = gc.num_buses(), g = gc.num_generators(), r = gc.num_renewables();
  Rng rng(5);
  const Eigen::VectorXd demand = Eigen::Map<const Eigen::VectorXd>(gc.demand.data(), nb);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd lambda(g);
    double s = 0;
    for (int i = 0; i < g; ++i) {
      lambda[i] = rng.uniform01();
      s += lambda[i];
    }
    lambda /= s;
    Eigen::VectorXd xi(r);
    for (int i = 0; i < r; ++i) xi[i] = rng.uniform(-8.0, 8.0);

    Eigen::VectorXd forecast = Eigen::VectorXd::Zero(nb);
    for (int i = 0; i < r; ++i) forecast[gc.renewables[i].bus] += gc.renewables[i].forecast;

    // dispatch balancing total load so the forecast balance is solvable
    Eigen::VectorXd p(g);
    for (int i = 0; i + 1 < g; ++i) p[i] = rng.uniform(10.0, 60.0);
    p[g - 1] = demand.sum() - forecast.sum() - p.head(g - 1).sum();
    const Eigen::VectorXd injection = m.gen_incidence * p + forecast - demand;
    REQUIRE(std::abs(injection.sum()) <= 1e-9);
    const Eigen::VectorXd theta = m.b_pseudo * injection;
    REQUIRE((m.laplacian * theta - injection).lpNorm<Eigen::Infinity>() <= 1e-8);

    const double total = xi.sum();
    const Eigen::VectorXd delta_theta = -(total * (m.response * lambda) - m.ren_response * xi);
    const Eigen::VectorXd lhs = m.laplacian * (theta - delta_theta);
    const Eigen::VectorXd rhs =
        m.gen_incidence * (p + lambda * total) + (forecast - m.ren_incidence * xi) - demand;
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("zero deviation reduces generated rows to nominal limits") {
  const GridCase gc = bundled_case6();
  const DcMatrices m = build_matrices(gc);
  OpfDataStats stats{Eigen::VectorXd::Zero(2), 10.0};
  const ProblemTemplate tmpl = build_template(gc, m, stats);
  auto [G, h] = tmpl.generator(deviation({0.0, 0.0}));
  const int nb = gc.num_buses(), g = gc.num_generators();
  int row = 0;
  for (const auto& br : gc.branches) {
    for (int pass = 0; pass < 2; ++pass, ++row) {
      CHECK(h[row] == doctest::Approx(br.limit));
      for (int c = 0; c < g; ++c) CHECK(G(row, g + nb - 1 + c) == doctest::Approx(0.0));
    }
  }
  for (int c = 0; c < g; ++c) {
    CHECK(h[row] == doctest::Approx(gc.generators[c].p_max));
    CHECK(G(row, c) == 1.0);
    CHECK(G(row, g + nb - 1 + c) == doctest::Approx(0.0));
    row += 2;
  }
}

TEST_CASE("variance term: all participation on one generator") {
  const GridCase gc = bundled_case6();
  const DcMatrices m = build_matrices(gc);
  const double vhat = 17.5;
  OpfDataStats stats{Eigen::VectorXd::Zero(2), vhat};
  const ProblemTemplate tmpl = build_template(gc, m, stats);
  const int nb = gc.num_buses(), g = gc.num_generators();
  for (int i = 0; i < g; ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(tmpl.num_vars());
    x[g + nb - 1 + i] = 1.0;  // lambda_i = 1
    const double with_lambda = 0.5 * x.dot(tmpl.Q * x);
    CHECK(with_lambda == doctest::Approx(gc.generators[i].cost_c2 * vhat).epsilon(1e-12));
  }
}

TEST_CASE("pipeline: ordering, counts, balance, and replay on the bundled case") {
  const GridCase gc = bundled_case6();
  const DataSet ds = bundled_history();
  PipelineConfig cfg;
  cfg.alpha = 0.05;
  cfg.rho = 0.90;
  cfg.seed = 3;
  const PipelineResult res = run_pipeline(gc, ds, cfg);
  REQUIRE(res.stages.size() == 3);
  const auto& sa = res.stages[0];
  const auto& sz = res.stages[1];
  const auto& se = res.stages[2];

  const double tol = 1e-6 * std::abs(sa.objective);
  CHECK(se.objective <= sz.objective + tol);
  CHECK(sz.objective <= sa.objective + tol);

  const Eigen::Index m = gc.rows_per_data_point();
  const Eigen::Index base = gc.num_buses() + 1;  // balance + participation total
  CHECK(sa.constraint_rows == static_cast<Eigen::Index>(sa.points) * m + base);
  CHECK(sz.constraint_rows == static_cast<Eigen::Index>(sz.points) * m + base);
  CHECK(se.constraint_rows == static_cast<Eigen::Index>(se.points) * m + base);

  const DcMatrices mats = build_matrices(gc);
  for (const auto& st : res.stages) {
    const OpfDecision d = split_decision(gc, st.x);
    Eigen::VectorXd demand = Eigen::Map<const Eigen::VectorXd>(gc.demand.data(), gc.num_buses());
    Eigen::VectorXd forecast = Eigen::VectorXd::Zero(gc.num_buses());
    for (int i = 0; i < gc.num_renewables(); ++i)
      forecast[gc.renewables[i].bus] += gc.renewables[i].forecast - res.data_mean[i];
    const Eigen::VectorXd resid =
        mats.laplacian * d.theta - mats.gen_incidence * d.p_gen - forecast + demand;
    CHECK(resid.lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK(d.lambda.sum() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(d.lambda.minCoeff() >= -1e-8);
  }

  // recourse replay: each stage's decision satisfies the limits for every
  // point that stage was built from
  OpfDataStats stats{res.data_mean, 1.0};
  const ProblemTemplate tmpl = build_template(gc, mats, stats);
  std::vector<UncertaintyPoint> eta_pts;
  for (int idx : res.reduction.indices) eta_pts.push_back(ds.point(idx));
  const AssembledProgram replay = assemble(tmpl, eta_pts);
  CHECK(check_feasible(replay, se.x, 1e-6).feasible);
}

TEST_CASE("pipeline: skip-thinning stage flag") {
  const GridCase gc = bundled_case6();
  const DataSet ds = bundled_history();
  PipelineConfig cfg;
  cfg.seed = 4;
  cfg.skip_sds = true;
  const PipelineResult res = run_pipeline(gc, ds, cfg);
  CHECK(res.stages.size() == 2);
  CHECK(res.reduction.z_eta == res.reduction.z);
}

TEST_CASE("pipeline report is byte-stable for a fixed seed") {
  const GridCase gc = bundled_case6();
  const DataSet ds = bundled_history();
  PipelineConfig cfg;
  cfg.seed = 11;
  cfg.threads = 2;
  const std::string a = pipeline_result_json(run_pipeline(gc, ds, cfg), false);
  const std::string b = pipeline_result_json(run_pipeline(gc, ds, cfg), false);
  CHECK(a == b);
}

TEST_CASE("case files round trip and bad schemas are reported") {
  const GridCase gc = bundled_case6();
  gc.save_json("test_tmp_case.json");
  const GridCase back = GridCase::load_json("test_tmp_case.json");
  CHECK(back.num_buses() == gc.num_buses());
  CHECK(back.branches.size() == gc.branches.size());
  CHECK(back.generators.size() == gc.generators.size());
  std::remove("test_tmp_case.json");

  std::ofstream bad("test_tmp_bad.json");
  bad << "{\"name\": \"broken\"}";
  bad.close();
  CHECK_THROWS_WITH_AS(GridCase::load_json("test_tmp_bad.json"),
                       doctest::Contains("schema"), std::invalid_argument);
  std::remove("test_tmp_bad.json");
}

TEST_CASE("pure-integer deviations run the mixed thinning path end to end") {
  const GridCase gc = bundled_case6();
  const DataSet ds = sample_integer_box(2, -4, 4, 300, 21);
  PipelineConfig cfg;
  cfg.alpha = 0.01;
  cfg.rho = 0.8;
  cfg.zeta = 0.5;
  cfg.seed = 9;
  const PipelineResult res = run_pipeline(gc, ds, cfg);
  REQUIRE(res.stages.size() == 3);
  CHECK(std::abs(res.stages[2].objective - res.stages[1].objective) <=
        1e-9 * (1.0 + std::abs(res.stages[1].objective)));
}

TEST_CASE("dimension mismatch between case and data is reported") {
  const GridCase gc = bundled_case6();
  const DataSet ds = sample_uniform_box(3, -1, 1, 50, 2);
  PipelineConfig cfg;
  cfg.seed = 1;
  CHECK_THROWS_WITH_AS(run_pipeline(gc, ds, cfg), doctest::Contains("dimension"),
                       std::invalid_argument);
}
