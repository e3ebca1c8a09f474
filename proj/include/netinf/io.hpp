#pragma once

// File formats. Structured artifacts are JSON (matrices as row-major nested
// arrays, node and input indices 0-based); time series and benchmark rows
// are CSV with doubles printed as %.17g so that read -> write is exact.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "netinf/eval.hpp"
#include "netinf/netsim.hpp"
#include "netinf/topology.hpp"

namespace netinf::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

json read_json(const fs::path& path);
/// Two-space indent, trailing newline.
void write_json(const fs::path& path, const json& doc);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

json model_to_json(const StateSpaceModel& model);
StateSpaceModel model_from_json(const json& doc);

json structure_to_json(const DsfStructure& s);
DsfStructure structure_from_json(const json& doc);

/// Header y_1..y_p,u_1..u_m; one row per time step.
std::string experiment_csv(const Experiment& e);
/// Sidecar next to the CSV: same stem, ".json".
fs::path sidecar_path(const fs::path& csv);
void write_experiment(const fs::path& csv, const Experiment& e);
/// Reads the CSV and, when present, the sidecar (which supplies the input
/// count, SNR and seed; without it every column is an output).
Experiment read_experiment(const fs::path& csv);

json vi_config_to_json(const vi::ViConfig& c);
vi::ViConfig vi_config_from_json(const json& doc);
json keb_config_to_json(const keb::KebConfig& c);
keb::KebConfig keb_config_from_json(const json& doc);
json inference_config_to_json(const InferenceConfig& c);
InferenceConfig inference_config_from_json(const json& doc);

json network_to_json(const InferredNetwork& net);
InferredNetwork network_from_json(const json& doc);

json benchmark_config_to_json(const eval::BenchmarkConfig& c);
/// Missing keys keep the preset named by "suite" (or the defaults).
eval::BenchmarkConfig benchmark_config_from_json(const json& doc);

std::string results_csv_header(bool with_runtime = true);
std::string results_csv(const eval::BenchmarkConfig& config, const eval::BenchmarkResult& result,
                        bool with_runtime = true);
json summary_to_json(const eval::BenchmarkConfig& config, const eval::BenchmarkResult& result);

/// %.17g
std::string format_double(double v);

}  // namespace netinf::io
