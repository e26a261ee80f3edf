#include "pcco/report_io.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pcco {

namespace {

using Json = nlohmann::ordered_json;

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

std::string alpha_result_json(const AlphaFilterResult& r, bool with_volatile) {
  Json j;
  if (with_volatile) j["timestamp"] = timestamp_utc();
  j["alpha"] = r.alpha;
  j["zeta"] = r.zeta;
  j["D"] = r.source_size;
  j["D_alpha"] = r.d_alpha;
  j["kept"] = r.kept_indices;
  return j.dump(2) + "\n";
}

std::string reduction_report_json(const ReductionReport& r, bool with_volatile) {
  Json j;
  if (with_volatile) j["timestamp"] = timestamp_utc();
  j["seed"] = r.seed;
  j["alpha"] = r.alpha;
  j["zeta"] = r.zeta;
  j["rho"] = r.rho;
  j["B_bar"] = r.b_bar;
  j["D"] = r.dataset_size;
  j["D_alpha"] = r.d_alpha;
  j["z"] = r.z;
  if (r.eta.size() == 1)
    j["eta"] = r.eta[0];
  else
    j["eta"] = r.eta;
  j["z_eta"] = r.z_eta;
  j["weights"] = r.weights;
  j["indices"] = r.indices;
  return j.dump(2) + "\n";
}

namespace {

Json stage_json(const StageResult& st, bool with_volatile) {
  Json s;
  s["name"] = st.name;
  s["points"] = st.points;
  s["constraints"] = st.constraint_rows;
  if (with_volatile) s["wall_seconds"] = st.wall_seconds;
  s["objective"] = st.objective;
  s["status"] = to_string(st.status);
  s["gap_vs_alpha_pct"] = st.gap_vs_alpha_pct;
  s["x"] = std::vector<double>(st.x.data(), st.x.data() + st.x.size());
  return s;
}

}  // namespace

std::string pipeline_result_json(const PipelineResult& r, bool with_volatile) {
  Json j;
  if (with_volatile) j["timestamp"] = timestamp_utc();
  j["zeta"] = r.zeta;
  j["data_mean"] =
      std::vector<double>(r.data_mean.data(), r.data_mean.data() + r.data_mean.size());
  j["reduction"] = Json::parse(reduction_report_json(r.reduction, false));
  j["stages"] = Json::array();
  for (const auto& st : r.stages) j["stages"].push_back(stage_json(st, with_volatile));
  return j.dump(2) + "\n";
}

std::string pipeline_result_csv(const PipelineResult& r, bool with_volatile) {
  std::ostringstream os;
  os << "stage,points,constraints,objective,gap_vs_alpha_pct";
  if (with_volatile) os << ",wall_seconds";
  os << "\n";
  os.precision(17);
  for (const auto& st : r.stages) {
    os << st.name << "," << st.points << "," << st.constraint_rows << "," << st.objective << ","
       << st.gap_vs_alpha_pct;
    if (with_volatile) os << "," << st.wall_seconds;
    os << "\n";
  }
  return os.str();
}

std::string bound_experiment_json(const BoundExperiment& e) {
  Json j;
  j["name"] = e.name;
  j["trials"] = e.trials;
  j["seed"] = e.seed;
  j["observed"] = e.observed;
  j["bound"] = e.bound;
  j["sigma"] = e.sigma;
  j["verdict"] = e.verdict;
  j["solver_failures"] = e.solver_failures;
  return j.dump(2) + "\n";
}

std::string omega_report_json(const OmegaReport& r) {
  Json j;
  j["trials"] = r.trials;
  j["reference_objective"] = r.reference_objective;
  j["etas"] = r.etas;
  j["omega"] = r.omega;
  j["sigma"] = r.sigma;
  j["monotone_within_noise"] = r.monotone_within_noise;
  j["violations"] = Json::array();
  for (auto& [a, b] : r.violations) j["violations"].push_back({a, b});
  return j.dump(2) + "\n";
}

std::string scenario_comparison_json(const ScenarioComparison& c, double recommended_n) {
  Json j;
  j["n_samples"] = c.n_samples;
  j["alpha"] = c.alpha;
  j["trials"] = c.trials;
  j["recommended_n_classical"] = recommended_n;
  j["freq_proper_superset"] = c.freq_proper_superset;
  j["freq_not_equal"] = c.freq_not_equal;
  j["proxy_objective"] = c.proxy_objective;
  return j.dump(2) + "\n";
}

std::string phi_sweep_csv(const std::vector<double>& etas,
                          const std::vector<PhiEstimate>& estimates) {
  if (etas.size() != estimates.size())
    throw std::invalid_argument("phi sweep: grid and estimates differ in length");
  std::ostringstream os;
  os << "eta,z_eta,phi_lower,measured_phi,h_norm,jacobian_condition\n";
  os.precision(17);
  for (std::size_t i = 0; i < etas.size(); ++i) {
    const auto& e = estimates[i];
    os << etas[i] << "," << e.z_eta << "," << e.phi_lower << "," << e.measured_phi << ","
       << e.h_norm << "," << e.jacobian_condition << "\n";
  }
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << content;
}

}  // namespace pcco
