// contour_opt: data-driven contour-constrained optimization pipeline.
// Subcommands: alpha, reduce, opf, verify. Exit codes: 0 success,
// 1 computational failure, 2 usage/config error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <algorithm>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pcco/analysis.hpp"
#include "pcco/density.hpp"
#include "pcco/opf.hpp"
#include "pcco/report_io.hpp"
#include "pcco/synthetic.hpp"

namespace {

// Flat-JSON config support with "flags > config file > defaults": the file
// is expanded into extra argv tokens for options not already given.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config file not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config file parse failure: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config file must hold a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string flag = "--" + it.key();
    bool present = false;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) {
        present = true;
        break;
      }
    if (present) continue;
    args.push_back(flag);
    if (it.value().is_boolean()) {
      if (!it.value().get<bool>()) args.pop_back();  // false flags stay off
    } else if (it.value().is_string()) {
      args.push_back(it.value().get<std::string>());
    } else {
      args.push_back(it.value().dump());
    }
  }
  return args;
}

struct CommonOpts {
  std::string config_path;
  std::string data_path;
  int r1 = 0, r2 = 0;
  bool has_header = false;
  double alpha = 0.05;
  std::string zeta_text = "auto";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  bool no_timestamp = false;
  std::string out = "";
};

void add_data_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--data", o.data_path, "dataset file (.csv or .json)")->required();
  cmd->add_option("--r1", o.r1, "integer columns");
  cmd->add_option("--r2", o.r2, "real columns");
  cmd->add_flag("--header", o.has_header, "CSV has a header row");
}

void add_common_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file (flags take precedence)");
  cmd->add_option("--alpha", o.alpha, "probability threshold in [0,1)")
      ->check(CLI::Range(0.0, 0.999999999));
  cmd->add_option("--zeta", o.zeta_text, "vicinity bandwidth (> 0) or 'auto'");
  cmd->add_option("--seed", o.seed, "RNG seed (env CONTOUR_OPT_SEED)")
      ->envname("CONTOUR_OPT_SEED")
      ->each([&o](const std::string&) { o.seed_given = true; });
  cmd->add_option("--threads", o.threads, "worker threads for parallel stages")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--no-timestamp", o.no_timestamp, "omit volatile fields from reports");
  cmd->add_option("--out", o.out, "output file (default: stdout)");
}

pcco::DataSet load_data(const CommonOpts& o) {
  if (o.r1 + o.r2 < 1)
    throw pcco::DatasetError("specify --r1/--r2 so that r1 + r2 >= 1");
  const std::string ext = std::filesystem::path(o.data_path).extension().string();
  if (ext == ".json") return pcco::DataSet::load_json(o.data_path, o.r1, o.r2);
  return pcco::DataSet::load_csv(o.data_path, o.r1, o.r2, o.has_header);
}

double resolve_zeta(const std::string& text) {
  if (text == "auto") return 0.0;
  try {
    const double z = std::stod(text);
    if (!(z > 0.0)) throw std::invalid_argument("zeta must be > 0");
    return z;
  } catch (const std::exception&) {
    throw pcco::DatasetError("bad --zeta value '" + text + "' (number or 'auto')");
  }
}

void emit(const std::string& out, const std::string& content) {
  if (out.empty())
    std::cout << content;
  else
    pcco::write_text_file(out, content);
}

void require_seed(const CommonOpts& o) {
  if (!o.seed_given)
    throw pcco::DatasetError(
        "a seed is required for randomized stages (--seed or CONTOUR_OPT_SEED)");
}

int run_alpha(const CommonOpts& o) {
  const pcco::DataSet ds = load_data(o);
  double zeta = resolve_zeta(o.zeta_text);
  if (zeta <= 0.0)
    zeta = pcco::select_bandwidth(ds, pcco::default_bandwidth_grid(ds), o.threads);
  const pcco::DensityEstimate de = pcco::estimate_density(ds, zeta, o.threads);
  const pcco::AlphaFilterResult res = pcco::alpha_process(ds, de, o.alpha);
  emit(o.out, pcco::alpha_result_json(res, !o.no_timestamp));
  return 0;
}

int run_reduce(const CommonOpts& o, double rho, double eta, std::size_t b_bar) {
  require_seed(o);
  const pcco::DataSet ds = load_data(o);
  double zeta = resolve_zeta(o.zeta_text);
  if (zeta <= 0.0)
    zeta = pcco::select_bandwidth(ds, pcco::default_bandwidth_grid(ds), o.threads);
  const pcco::DensityEstimate de = pcco::estimate_density(ds, zeta, o.threads);
  const pcco::AlphaFilterResult filtered = pcco::alpha_process(ds, de, o.alpha);
  if (filtered.d_alpha == 0) throw std::runtime_error("alpha filter kept no points");
  if (b_bar == 0) b_bar = static_cast<std::size_t>(ds.dim());

  const pcco::SamplingPlan plan =
      pcco::plan_sample_size(rho, b_bar, o.alpha, ds.size(), filtered.d_alpha);
  const std::vector<int> z_idx = pcco::draw_subsample(filtered, plan, o.seed);

  pcco::ReductionReport report;
  report.seed = o.seed;
  report.alpha = o.alpha;
  report.zeta = zeta;
  report.rho = rho;
  report.b_bar = b_bar;
  report.dataset_size = ds.size();
  report.d_alpha = filtered.d_alpha;
  report.z = plan.z;

  if (eta < 0.0) eta = zeta;
  if (eta > 0.0) {
    const pcco::DataSet z_set = ds.subset(z_idx);
    const pcco::SdsResult sds = ds.r1() == 0
                                    ? pcco::sds_continuous(z_set, eta, o.seed + 1)
                                    : pcco::sds_mixed(z_set, {eta}, o.seed + 1);
    report.eta = sds.group_eta;
    report.z_eta = sds.z_eta;
    report.weights = sds.weights;
    for (int local : sds.selected) report.indices.push_back(z_idx[local]);
  } else {
    report.eta = {0.0};
    report.z_eta = z_idx.size();
    report.weights.assign(z_idx.size(), 1);
    report.indices = z_idx;
  }
  emit(o.out, pcco::reduction_report_json(report, !o.no_timestamp));
  return 0;
}

int run_opf(const CommonOpts& o, const std::string& case_path, double rho, double eta,
            std::size_t b_bar, const std::string& stage, const std::string& csv_out) {
  require_seed(o);
  const pcco::GridCase gc = pcco::GridCase::load_json(case_path);
  const pcco::DataSet ds = load_data(o);
  pcco::PipelineConfig cfg;
  cfg.alpha = o.alpha;
  cfg.rho = rho;
  cfg.zeta = resolve_zeta(o.zeta_text);
  cfg.eta = eta;
  cfg.b_bar = b_bar;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.skip_sds = stage == "z-only";
  const pcco::PipelineResult res = pcco::run_pipeline(gc, ds, cfg);
  emit(o.out, pcco::pipeline_result_json(res, !o.no_timestamp));
  if (!csv_out.empty())
    pcco::write_text_file(csv_out, pcco::pipeline_result_csv(res, !o.no_timestamp));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-driven contour-constrained optimization pipeline"};
  app.require_subcommand(1);

  CommonOpts common;

  auto* alpha_cmd = app.add_subcommand("alpha", "estimate densities and filter by alpha");
  add_data_options(alpha_cmd, common);
  add_common_options(alpha_cmd, common);

  auto* reduce_cmd = app.add_subcommand("reduce", "size and draw the z-sample, then thin");
  double rho = 0.90, eta = -1.0;
  std::size_t b_bar = 0;
  add_data_options(reduce_cmd, common);
  add_common_options(reduce_cmd, common);
  reduce_cmd->add_option("--rho", rho, "target preservation probability")
      ->check(CLI::Range(0.0, 1.0));
  reduce_cmd->add_option("--eta", eta, "thinning radius (0 skips; default: zeta)");
  reduce_cmd->add_option("--b-bar", b_bar, "boundary-point bound override (0: dimension)");

  auto* opf_cmd = app.add_subcommand("opf", "run the DC-OPF case study pipeline");
  std::string case_path, stage = "all", csv_out;
  add_data_options(opf_cmd, common);
  add_common_options(opf_cmd, common);
  opf_cmd->add_option("--case", case_path, "grid case JSON")->required();
  opf_cmd->add_option("--rho", rho, "target preservation probability")
      ->check(CLI::Range(0.0, 1.0));
  opf_cmd->add_option("--eta", eta, "thinning radius (0 skips; default: zeta)");
  opf_cmd->add_option("--b-bar", b_bar, "boundary-point bound override (0: decision dim)");
  opf_cmd->add_option("--stage", stage, "all | z-only")
      ->check(CLI::IsMember({"all", "z-only"}));
  opf_cmd->add_option("--csv", csv_out, "also write a CSV stage table");

  auto* verify_cmd = app.add_subcommand("verify", "run bound-verification experiments");
  std::string experiment;
  std::size_t trials = 10000;
  std::string eta_sweep = "0.01:0.1:5";
  std::uint64_t vseed = 0;
  bool vseed_given = false;
  std::string vout;
  int vthreads = 1;
  verify_cmd->add_option("experiment", experiment, "varrho | phi | omega | scenario")
      ->required();
  verify_cmd->add_option("--trials", trials, "Monte Carlo trials");
  verify_cmd->add_option("--eta-sweep", eta_sweep, "lo:hi:count grid for phi/omega");
  verify_cmd->add_option("--seed", vseed, "RNG seed (env CONTOUR_OPT_SEED)")
      ->envname("CONTOUR_OPT_SEED")
      ->each([&vseed_given](const std::string&) { vseed_given = true; });
  verify_cmd->add_option("--threads", vthreads, "worker threads")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--out", vout, "output file (default: stdout)");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    std::reverse(args.begin(), args.end());  // CLI11 vector parse is reversed
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (alpha_cmd->parsed()) return run_alpha(common);
    if (reduce_cmd->parsed()) return run_reduce(common, rho, eta, b_bar);
    if (opf_cmd->parsed()) return run_opf(common, case_path, rho, eta, b_bar, stage, csv_out);
    if (verify_cmd->parsed()) {
      if (!vseed_given) {
        std::cerr << "error: a seed is required (--seed or CONTOUR_OPT_SEED)\n";
        return 2;
      }
      if (experiment == "varrho") {
        const auto inst = pcco::make_planted_lp(3, 3, 50, 350, vseed);
        const auto plan = pcco::plan_sample_size(0.9, 3, inst.alpha, inst.dataset_size,
                                                 inst.filtered.size());
        const auto exp = pcco::verify_varrho(inst, plan, trials, vseed, vthreads);
        emit(vout, pcco::bound_experiment_json(exp));
        return exp.solver_failures == 0 ? 0 : 1;
      }
      if (experiment == "phi" || experiment == "omega") {
        double lo = 0.01, hi = 0.1;
        int count = 5;
        if (std::sscanf(eta_sweep.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 || count < 1 ||
            !(lo > 0) || hi < lo) {
          std::cerr << "error: bad --eta-sweep (expected lo:hi:count)\n";
          return 2;
        }
        std::vector<double> grid;
        for (int i = 0; i < count; ++i)
          grid.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
        // halfplane-envelope family: exactly two rows bind at the optimum
        const pcco::DataSet cloud = pcco::sample_slope_cloud(400, vseed + 7);
        const pcco::ProblemTemplate tmpl = pcco::make_envelope_lp();
        if (experiment == "omega") {
          const auto rep = pcco::verify_omega_monotone(tmpl, cloud, grid, trials, vseed);
          emit(vout, pcco::omega_report_json(rep));
          return 0;
        }
        std::vector<pcco::UncertaintyPoint> pts;
        for (std::size_t i = 0; i < cloud.size(); ++i) pts.push_back(cloud.point(i));
        const auto prog = pcco::assemble(tmpl, pts);
        const auto opt = pcco::solve_qp(prog.qp);
        const auto br = pcco::find_boundary_points(tmpl, pts, opt);
        std::vector<pcco::PhiEstimate> ests;
        for (double e : grid) {
          pcco::PhiOptions po;
          po.sds_seed = vseed + 11;
          ests.push_back(pcco::estimate_phi_bound(tmpl, cloud, opt, br, e, po));
        }
        emit(vout, pcco::phi_sweep_csv(grid, ests));
        return 0;
      }
      if (experiment == "scenario") {
        pcco::ScenarioConfig cfg;
        cfg.trials = std::max<std::size_t>(1, trials / 100);
        cfg.seed = vseed;
        pcco::ProblemTemplate tmpl;
        tmpl.Q = Eigen::MatrixXd::Zero(1, 1);
        tmpl.c = Eigen::VectorXd::Ones(1);
        tmpl.rows_per_point = 1;
        tmpl.generator = [](const pcco::UncertaintyPoint& p) {
          Eigen::MatrixXd G = -Eigen::MatrixXd::Identity(1, 1);
          Eigen::VectorXd h = -p.real_part;
          return std::make_pair(G, h);
        };
        tmpl.base_E.resize(0, 1);
        tmpl.base_G.resize(0, 1);
        const auto sampler =
            pcco::make_gaussian_sampler(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
        const auto cmp = pcco::compare_scenario_method(tmpl, sampler, cfg);
        emit(vout, pcco::scenario_comparison_json(cmp, pcco::scenario_sample_size(1, 0.01, 0.05)));
        return 0;
      }
      std::cerr << "error: unknown experiment '" << experiment
                << "' (available: varrho, phi, omega, scenario)\n";
      return 2;
    }
  } catch (const pcco::DatasetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
