#include "sparsectl/plan_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "sparsectl/errors.hpp"
#include "sparsectl/models.hpp"

namespace sparsectl::io {
namespace {

using nlohmann::json;

json to_array(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json to_row_major(const Matrix& M) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(M.size()));
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c) out.push_back(M(r, c));
  return out;
}

json manifest_json(const RunManifest& manifest) {
  json doc;
  doc["schema"] = kManifestSchema;
  doc["version"] = manifest.version;
  doc["command_line"] = manifest.command_line;
  doc["config"] = manifest.config;
  doc["seeds"] = manifest.seeds;
  doc["rng"] = std::string(rng::kGeneratorName);
  doc["csv_schema"] = kCsvSchema;
  doc["wall_seconds"] = manifest.wall_seconds;
  doc["outputs"] = manifest.outputs;
  return doc;
}

const json& field(const json& doc, const char* key) {
  if (!doc.contains(key)) throw LoadError(std::string("plan file is missing field '") + key + "'");
  return doc.at(key);
}

Vector read_vector(const json& doc, const char* key, Eigen::Index expected) {
  const json& arr = field(doc, key);
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != expected) {
    throw LoadError(std::string("plan field '") + key + "' must have " + std::to_string(expected) +
                    " entries");
  }
  Vector v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    const json& e = arr[static_cast<std::size_t>(i)];
    if (!e.is_number()) throw LoadError(std::string("plan field '") + key + "' has a non-number");
    v(i) = e.get<double>();
  }
  return v;
}

}  // namespace

std::string format_real(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  return std::filesystem::path(output.string() + ".manifest.json");
}

std::string manifest_to_json(const RunManifest& manifest) {
  return manifest_json(manifest).dump(2);
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write manifest '" + path.string() + "'");
  out << manifest_to_json(manifest) << '\n';
}

std::string plan_to_json(const SparsificationPlan& plan, const Plant& plant,
                         const RunManifest& manifest) {
  const GainCertificate& cert = plan.cert;
  json doc;
  doc["schema"] = kPlanSchema;
  doc["plant_hash"] = models::plant_hash_hex(plant);
  doc["plant_name"] = plant.name();
  doc["n"] = plant.n();
  doc["m"] = plant.m();
  doc["mode"] = plan.mode == SparsificationMode::kUniform ? "uniform" : "adaptive";
  doc["K"] = to_row_major(cert.K);
  doc["gamma"] = cert.gamma;
  doc["t"] = cert.t;
  doc["D_norm_sq"] = cert.D_norm_sq;
  doc["s"] = to_array(cert.s);
  doc["s_max"] = cert.s_max;
  doc["p_star"] = plan.p_star;
  doc["p_vec"] = to_array(plan.p_vec);
  doc["threshold"] = plan.threshold;
  doc["weights"] = to_array(plan.weights);
  doc["expected_sparsity"] = plan.expected_sparsity;
  doc["contraction"] = plan.contraction;
  doc["degenerate"] = plan.degenerate;
  doc["degenerate_uniform"] = plan.degenerate_uniform;
  doc["grid_points"] = plan.grid_points;
  doc["feasible_points"] = plan.feasible_points;
  doc["options"] = {{"delta", plan.options.delta},
                    {"p_floor", plan.options.p_floor},
                    {"eps_p", plan.options.eps_p},
                    {"gamma_grid", to_string(plan.options.grid)}};
  doc["manifest"] = manifest_json(manifest);
  return doc.dump(2);
}

void save_plan(const std::filesystem::path& path, const SparsificationPlan& plan,
               const Plant& plant, const RunManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write plan file '" + path.string() + "'");
  out << plan_to_json(plan, plant, manifest) << '\n';
  if (!out) throw LoadError("failed writing plan file '" + path.string() + "'");
}

SparsificationPlan parse_plan(const std::string& text, const Plant& plant) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("plan file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || field(doc, "schema") != kPlanSchema) {
    throw LoadError(std::string("plan file does not declare schema ") + kPlanSchema);
  }
  const Eigen::Index n = plant.n();
  const Eigen::Index m = plant.m();
  const auto plan_n = field(doc, "n").get<Eigen::Index>();
  const auto plan_m = field(doc, "m").get<Eigen::Index>();
  if (plan_n != n || plan_m != m) {
    throw PlanMismatch("plan is for a plant with n=" + std::to_string(plan_n) + ", m=" +
                       std::to_string(plan_m) + " but the model has n=" + std::to_string(n) +
                       ", m=" + std::to_string(m));
  }
  const std::string expected_hash = models::plant_hash_hex(plant);
  const std::string hash = field(doc, "plant_hash").get<std::string>();
  if (hash != expected_hash) {
    throw PlanMismatch("plan was synthesized for plant " + hash + " but the model hashes to " +
                       expected_hash);
  }
  const Vector k_flat = read_vector(doc, "K", n * m);
  Matrix K(m, n);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < n; ++c) K(r, c) = k_flat(r * n + c);

  SparsificationPlan plan;
  plan.cert = GainCertificate::from_gain(plant, std::move(K), field(doc, "gamma").get<double>(),
                                         field(doc, "t").get<double>());
  const std::string mode = field(doc, "mode").get<std::string>();
  if (mode == "uniform") {
    plan.mode = SparsificationMode::kUniform;
  } else if (mode == "adaptive") {
    plan.mode = SparsificationMode::kAdaptive;
  } else {
    throw LoadError("plan field 'mode' must be uniform or adaptive");
  }
  plan.p_star = field(doc, "p_star").get<double>();
  plan.p_vec = read_vector(doc, "p_vec", n);
  plan.weights = read_vector(doc, "weights", n);
  plan.threshold = field(doc, "threshold").get<double>();
  plan.expected_sparsity = field(doc, "expected_sparsity").get<double>();
  plan.contraction = field(doc, "contraction").get<double>();
  plan.degenerate = field(doc, "degenerate").get<std::vector<bool>>();
  plan.degenerate_uniform = field(doc, "degenerate_uniform").get<bool>();
  plan.grid_points = field(doc, "grid_points").get<std::size_t>();
  plan.feasible_points = field(doc, "feasible_points").get<std::size_t>();
  const json& options = field(doc, "options");
  plan.options.delta = field(options, "delta").get<double>();
  plan.options.p_floor = field(options, "p_floor").get<double>();
  plan.options.eps_p = field(options, "eps_p").get<double>();
  plan.options.grid = parse_gamma_grid(field(options, "gamma_grid").get<std::string>());
  const Vector probs = plan.probabilities();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(probs(i) > 0.0) || !(probs(i) <= 1.0)) {
      throw LoadError("plan probability at index " + std::to_string(i) + " outside (0, 1]");
    }
  }
  return plan;
}

SparsificationPlan load_plan(const std::filesystem::path& path, const Plant& plant) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open plan file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_plan(buffer.str(), plant);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": malformed plan (" + e.what() + ")");
  }
}

std::string csv_header(const EnsembleStats& stats) {
  std::string header = "k,mean_sq_norm,std_sq_norm,active_sensors_mean";
  for (const Eigen::Index c : stats.record_components) {
    header += ",x_mean_" + std::to_string(c);
  }
  return header;
}

void write_stats_csv(std::ostream& out, const EnsembleStats& stats) {
  out << csv_header(stats) << '\n';
  const Eigen::Index rows = stats.mean_sq_norm.size();
  for (Eigen::Index k = 0; k < rows; ++k) {
    out << k << ',' << format_real(stats.mean_sq_norm(k)) << ','
        << format_real(stats.std_sq_norm(k)) << ',' << format_real(stats.active_sensors_mean(k));
    for (const Eigen::Index c : stats.record_components) {
      out << ',' << format_real(stats.mean_state(k, c));
    }
    out << '\n';
  }
}

void write_stats_csv(const std::filesystem::path& path, const EnsembleStats& stats) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write CSV '" + path.string() + "'");
  write_stats_csv(out, stats);
  if (!out) throw LoadError("failed writing CSV '" + path.string() + "'");
}

std::string decay_report_to_json(const DecayReport& report, double p_or_nan,
                                 const EnsembleStats& stats) {
  json doc;
  if (std::isfinite(p_or_nan)) doc["p"] = p_or_nan;
  doc["verdict"] = to_string(report.verdict);
  doc["threshold_step"] = report.threshold_step ? json(*report.threshold_step) : json(nullptr);
  doc["bound"] = report.bound;
  doc["runs"] = stats.runs;
  doc["steps"] = stats.steps;
  doc["initial_mean_sq_norm"] = stats.mean_sq_norm(0);
  doc["final_mean_sq_norm"] = stats.mean_sq_norm(stats.mean_sq_norm.size() - 1);
  doc["diverged_runs"] = stats.diverged_runs.empty() ? 0 : stats.diverged_runs.back();
  json ratios = json::array();
  for (const auto& [k, r] : report.empirical_ratios) {
    if (std::isfinite(r)) ratios.push_back({k, r});
  }
  doc["empirical_ratios"] = std::move(ratios);
  return doc.dump(2);
}

}  // namespace sparsectl::io
