#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "sparsectl/sim.hpp"
#include "sparsectl/synth.hpp"

namespace sparsectl::io {

inline constexpr const char* kPlanSchema = "sparsectl.plan/1";
inline constexpr const char* kCsvSchema = "sparsectl.stats-csv/1";
inline constexpr const char* kManifestSchema = "sparsectl.manifest/1";

// Provenance record written next to every output file.
struct RunManifest {
  std::vector<std::string> command_line;
  std::map<std::string, std::string> config;  // every default materialized
  std::map<std::string, std::uint64_t> seeds;
  std::string version = SPARSECTL_VERSION;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;
};

// <output>.manifest.json
[[nodiscard]] std::filesystem::path manifest_path_for(const std::filesystem::path& output);

[[nodiscard]] std::string manifest_to_json(const RunManifest& manifest);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

// Plan file: gain, probabilities and certificates, keyed to the plant hash.
void save_plan(const std::filesystem::path& path, const SparsificationPlan& plan,
               const Plant& plant, const RunManifest& manifest);
[[nodiscard]] std::string plan_to_json(const SparsificationPlan& plan, const Plant& plant,
                                       const RunManifest& manifest);

// Rebuilds the certificate against `plant`. Throws LoadError when the file
// is malformed or was synthesized for a different plant.
[[nodiscard]] SparsificationPlan load_plan(const std::filesystem::path& path, const Plant& plant);
[[nodiscard]] SparsificationPlan parse_plan(const std::string& text, const Plant& plant);

// k,mean_sq_norm,std_sq_norm,active_sensors_mean[,x_mean_<i>...]
[[nodiscard]] std::string csv_header(const EnsembleStats& stats);
void write_stats_csv(std::ostream& out, const EnsembleStats& stats);
void write_stats_csv(const std::filesystem::path& path, const EnsembleStats& stats);

// 17 significant digits, the lossless text form used by every writer.
[[nodiscard]] std::string format_real(double v);

[[nodiscard]] std::string decay_report_to_json(const DecayReport& report, double p_or_nan,
                                               const EnsembleStats& stats);

}  // namespace sparsectl::io
