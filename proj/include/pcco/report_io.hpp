#ifndef PCCO_REPORT_IO_HPP
#define PCCO_REPORT_IO_HPP

#include <string>

#include "pcco/analysis.hpp"
#include "pcco/density.hpp"
#include "pcco/opf.hpp"
#include "pcco/reduction.hpp"

namespace pcco {

// JSON emitters for the on-disk report formats (see FORMATS.md). All output
// is deterministic for a fixed input; volatile fields (timestamps, wall
// times) are included only when with_volatile is set.

std::string alpha_result_json(const AlphaFilterResult& r, bool with_volatile);
std::string reduction_report_json(const ReductionReport& r, bool with_volatile);
std::string pipeline_result_json(const PipelineResult& r, bool with_volatile);
std::string pipeline_result_csv(const PipelineResult& r, bool with_volatile);
std::string bound_experiment_json(const BoundExperiment& e);
std::string omega_report_json(const OmegaReport& r);
std::string scenario_comparison_json(const ScenarioComparison& c, double recommended_n);

// eta sweep rows: eta, z_eta, phi_lower, measured_phi
std::string phi_sweep_csv(const std::vector<double>& etas,
                          const std::vector<PhiEstimate>& estimates);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace pcco

#endif  // PCCO_REPORT_IO_HPP
