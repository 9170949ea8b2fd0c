#pragma once

#include <filesystem>
#include <vector>

#include "bathy/refraction_sim.hpp"
#include "config.hpp"

namespace bathy::cli {

using Outputs = std::vector<std::filesystem::path>;

// Each command validates its inputs exist before reading them and returns
// the files it wrote, in write order.

/// true_cloud.xyz, apparent_cloud.xyz, simulate.prov.json
Outputs cmd_simulate(const PipelineConfig& cfg);
/// samples.csv (+ .prov.json), apparent_filtered.xyz, reference_filtered.xyz
Outputs cmd_pair(const PipelineConfig& cfg);
/// model.txt, model_lsq.txt (baseline), training_report.txt
Outputs cmd_train(const PipelineConfig& cfg);
/// corrected cloud
Outputs cmd_predict(const PipelineConfig& cfg);
/// corrected.xyz, m3c2_before.csv, m3c2_after.csv, stats.json,
/// histogram_before.csv, histogram.csv
Outputs cmd_evaluate(const PipelineConfig& cfg);
/// section_<k>.csv per polyline
Outputs cmd_section(const PipelineConfig& cfg);
/// report.csv and report_matrix.csv
Outputs cmd_report(const PipelineConfig& cfg);

/// Builds the seabed, cameras and scene described by the simulate section.
SimScene make_scene(const SimulateConfig& sim);

}  // namespace bathy::cli
