#include "sparsectl/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "sparsectl/errors.hpp"
#include "sparsectl/models.hpp"
#include "sparsectl/plan_io.hpp"
#include "sparsectl/rng.hpp"
#include "sparsectl/sim.hpp"
#include "sparsectl/synth.hpp"

namespace sparsectl::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr const char* kThreadsEnv = "SPARSECTL_THREADS";

class UsageError : public Error {
 public:
  using Error::Error;
};

double parse_real(const std::string& text, const std::string& what) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(value)) {
    throw UsageError(what + ": '" + text + "' is not a finite number");
  }
  return value;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

Vector parse_vector(const std::string& text, const std::string& what) {
  const auto items = split_list(text);
  Vector v(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = parse_real(items[i], what);
  }
  return v;
}

std::string join(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += io::format_real(v(i));
  }
  return s;
}

unsigned parse_threads(const std::string& text, const std::string& what) {
  unsigned value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw UsageError(what + ": '" + text + "' is not a nonnegative integer");
  }
  return value;
}

// --threads wins over the environment; 0 means hardware concurrency.
unsigned resolve_threads(const std::optional<unsigned>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kThreadsEnv); env != nullptr && *env != '\0') {
    return parse_threads(env, kThreadsEnv);
  }
  return 0;
}

models::ResolvedModel load_model(const std::string& source) {
  return models::resolve_model(models::parse_model(source));
}

io::RunManifest start_manifest(const std::vector<std::string>& args,
                               const models::ResolvedModel& model) {
  io::RunManifest manifest;
  manifest.command_line = args;
  manifest.config["model"] = model.spec.source;
  manifest.config["plant_name"] = model.plant.name();
  manifest.config["plant_hash"] = models::plant_hash_hex(model.plant);
  for (const auto& [key, value] : model.resolved_params) {
    manifest.config["model." + key] = value;
  }
  if (model.grid) {
    manifest.seeds["model_params"] =
        rng::derive_seed(std::stoull(model.resolved_params.at("seed")), rng::domain::kModelParams, 0);
  }
  return manifest;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void ensure_parent(const fs::path& path) {
  const fs::path parent = path.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw LoadError("cannot create directory '" + parent.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write '" + path.string() + "'");
  out << text << '\n';
  if (!out) throw LoadError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------- check

struct CheckArgs {
  std::string model;
};

int cmd_check(const CheckArgs& a, std::ostream& out) {
  const models::ResolvedModel model = load_model(a.model);
  const Plant& plant = model.plant;
  const AssumptionReport report = check_assumptions(plant);
  out << "model: " << model.spec.source << '\n';
  out << "n: " << plant.n() << '\n';
  out << "m: " << plant.m() << '\n';
  out << "rank_B: " << plant.rank_B() << '\n';
  out << "a_n: " << (report.a_n ? io::format_real(*report.a_n) : std::string("undefined")) << '\n';
  out << "rank_ok: " << (report.rank_ok ? "true" : "false") << '\n';
  out << "spectral_ok: " << (report.spectral_ok ? "true" : "false") << '\n';
  if (!report.rank_ok) {
    out << "Assumption 1 violated: rank(B) = " << plant.rank_B() << " < m = " << plant.m() << '\n';
    return kExitDomain;
  }
  if (!report.spectral_ok) {
    out << "Assumption 2 violated: a_n = " << io::format_real(*report.a_n) << " >= 1\n";
    return kExitDomain;
  }
  out << "assumptions: ok\n";
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string model;
  double delta = 0.01;
  double p_floor = 1e-4;
  double eps_p = 1e-4;
  bool adaptive = false;
  std::string weights = "unit";
  std::string grid = "standard";
  std::string out;
};

Vector resolve_weights(const std::string& source, const models::ResolvedModel& model) {
  const Eigen::Index n = model.plant.n();
  if (source == "unit") return Vector::Ones(n);
  if (source == "model") {
    if (!model.weights) throw UsageError("--weights model: the plant file carries no weights");
    return *model.weights;
  }
  Vector w = parse_vector(source, "--weights");
  if (w.size() != n) {
    throw UsageError("--weights has " + std::to_string(w.size()) + " entries, expected n = " +
                     std::to_string(n));
  }
  return w;
}

int cmd_synth(const SynthArgs& a, const std::vector<std::string>& args, std::ostream& out,
              std::ostream& err) {
  const auto t0 = Clock::now();
  const models::ResolvedModel model = load_model(a.model);
  SynthOptions options;
  options.delta = a.delta;
  options.p_floor = a.p_floor;
  options.eps_p = a.eps_p;
  options.grid = parse_gamma_grid(a.grid);

  io::RunManifest manifest = start_manifest(args, model);
  manifest.config["delta"] = io::format_real(options.delta);
  manifest.config["p_floor"] = io::format_real(options.p_floor);
  manifest.config["eps_p"] = io::format_real(options.eps_p);
  manifest.config["gamma_grid"] = to_string(options.grid);
  manifest.config["mode"] = a.adaptive ? "adaptive" : "uniform";

  SparsificationPlan plan;
  if (a.adaptive) {
    const Vector weights = resolve_weights(a.weights, model);
    manifest.config["weights"] = a.weights == "unit" || a.weights == "model"
                                     ? a.weights + ":" + join(weights)
                                     : join(weights);
    plan = algorithm2(model.plant, weights, options);
  } else {
    manifest.config["weights"] = "unit";
    plan = algorithm1(model.plant, options);
  }

  std::ostream& log = a.out.empty() ? err : out;
  log << std::setprecision(17);
  log << "gamma: " << plan.cert.gamma << '\n';
  log << "t: " << plan.cert.t << '\n';
  log << "D_norm_sq: " << plan.cert.D_norm_sq << '\n';
  if (a.adaptive) {
    log << "p_vec: " << join(plan.p_vec) << '\n';
  } else {
    log << "p_star: " << plan.p_star << '\n';
  }
  log << "contraction: " << plan.contraction << '\n';
  log << "expected_sparsity: " << plan.expected_sparsity << '\n';
  if (a.adaptive) {
    const auto degenerate = std::count(plan.degenerate.begin(), plan.degenerate.end(), true);
    if (degenerate > 0) log << "degenerate coordinates: " << degenerate << " (p_floor substituted)\n";
  } else if (plan.degenerate_uniform) {
    log << "degenerate: s_max = 0, p_floor substituted\n";
  }

  manifest.wall_seconds = seconds_since(t0);
  if (a.out.empty()) {
    out << io::plan_to_json(plan, model.plant, manifest) << '\n';
  } else {
    manifest.outputs = {a.out};
    ensure_parent(a.out);
    io::save_plan(a.out, plan, model.plant, manifest);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- simulate / sweep

struct SimArgs {
  std::string plan;
  std::string model;
  std::string p;  // simulate: scalar or length-n list; sweep: list
  std::size_t runs = 100;
  std::size_t steps = 200;
  double sigma = 100.0;
  std::uint64_t seed = 1;
  std::vector<Eigen::Index> components;
  std::optional<unsigned> threads;
  double tol_rel = kDefaultTolRel;
  std::string out;
};

SimConfig make_config(const SimArgs& a) {
  SimConfig cfg;
  cfg.runs = a.runs;
  cfg.steps = a.steps;
  cfg.init_sigma = a.sigma;
  cfg.master_seed = a.seed;
  cfg.record_components = a.components;
  cfg.threads = resolve_threads(a.threads);
  return cfg;
}

void record_sim_config(io::RunManifest& manifest, const SimArgs& a, const SimConfig& cfg) {
  manifest.config["plan"] = a.plan;
  manifest.config["runs"] = std::to_string(cfg.runs);
  manifest.config["steps"] = std::to_string(cfg.steps);
  manifest.config["sigma"] = io::format_real(cfg.init_sigma);
  manifest.config["tol_rel"] = io::format_real(a.tol_rel);
  manifest.config["threads"] = std::to_string(cfg.threads);
  std::string comps;
  for (const auto c : cfg.record_components) comps += (comps.empty() ? "" : ",") + std::to_string(c);
  manifest.config["components"] = comps;
  manifest.seeds["master"] = cfg.master_seed;
  manifest.seeds["initial_state"] = rng::derive_seed(cfg.master_seed, rng::domain::kInitialState, 0);
}

struct Loaded {
  models::ResolvedModel model;
  SparsificationPlan plan;
};

Loaded load_pair(const SimArgs& a) {
  models::ResolvedModel model = load_model(a.model);
  SparsificationPlan plan = io::load_plan(a.plan, model.plant);
  return {std::move(model), std::move(plan)};
}

int cmd_simulate(const SimArgs& a, const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
  const auto t0 = Clock::now();
  const Loaded loaded = load_pair(a);
  const Plant& plant = loaded.model.plant;
  const SparsificationPlan& plan = loaded.plan;
  const SimConfig cfg = make_config(a);

  Vector probs = plan.probabilities();
  double contraction = plan.contraction;
  double p_scalar = plan.mode == SparsificationMode::kUniform ? plan.p_star : std::nan("");
  if (!a.p.empty()) {
    const Vector p = parse_vector(a.p, "--p");
    if (p.size() == 1) {
      p_scalar = p(0);
      probs = Vector::Constant(plant.n(), p_scalar);
    } else if (p.size() == plant.n()) {
      p_scalar = std::nan("");
      probs = p;
    } else {
      throw PlanMismatch("--p has " + std::to_string(p.size()) + " entries; expected 1 or n = " +
                         std::to_string(plant.n()));
    }
    if ((probs.array() <= 0.0).any() || (probs.array() > 1.0).any()) {
      throw UsageError("--p: probabilities must lie in (0, 1]");
    }
    contraction = g_value(plan.cert, probs);
  }

  io::RunManifest manifest = start_manifest(args, loaded.model);
  record_sim_config(manifest, a, cfg);
  manifest.config["p"] = join(probs);
  manifest.seeds["mask"] = rng::derive_seed(cfg.master_seed, rng::domain::kMask, 0);

  const EnsembleStats stats = run_ensemble(plant, plan.cert.K, probs, cfg);
  const DecayReport report = decay_report(stats, contraction, a.tol_rel);
  const std::string summary = io::decay_report_to_json(report, p_scalar, stats);

  std::ostringstream brief;
  brief << "verdict: " << to_string(report.verdict) << '\n'
        << "threshold_step: "
        << (report.threshold_step ? std::to_string(*report.threshold_step) : std::string("none"))
        << '\n'
        << "bound: " << io::format_real(report.bound) << '\n'
        << "final_mean_sq_norm: "
        << io::format_real(stats.mean_sq_norm(stats.mean_sq_norm.size() - 1)) << '\n';

  if (a.out.empty()) {
    io::write_stats_csv(out, stats);
    err << brief.str();
  } else {
    const fs::path csv = a.out;
    const fs::path summary_path = csv.string() + ".summary.json";
    ensure_parent(csv);
    io::write_stats_csv(csv, stats);
    write_text(summary_path, summary);
    manifest.outputs = {csv.string(), summary_path.string()};
    manifest.wall_seconds = seconds_since(t0);
    io::write_manifest(io::manifest_path_for(csv), manifest);
    out << brief.str();
  }
  return report.verdict == Verdict::kDiverged ? kExitDomain : kExitOk;
}

std::vector<double> parse_p_list(const std::string& text, const SparsificationPlan& plan,
                                 std::ostream& err) {
  std::vector<double> ps;
  for (const std::string& item : split_list(text)) {
    double p = 0.0;
    if (item == "pstar" || item == "p_star") {
      if (plan.mode != SparsificationMode::kUniform) {
        throw UsageError("--p: p_star is only defined for uniform plans");
      }
      p = plan.p_star;
    } else {
      p = parse_real(item, "--p");
    }
    if (!(p > 0.0) || p > 1.0) throw UsageError("--p: " + item + " outside (0, 1]");
    if (std::find(ps.begin(), ps.end(), p) != ps.end()) {
      err << "warning: duplicate p value " << item << " ignored\n";
      continue;
    }
    ps.push_back(p);
  }
  if (ps.empty()) throw UsageError("--p: empty probability list");
  return ps;
}

int cmd_sweep(const SimArgs& a, const std::vector<std::string>& args, std::ostream& out,
              std::ostream& err) {
  const auto t0 = Clock::now();
  const Loaded loaded = load_pair(a);
  const std::vector<double> ps = parse_p_list(a.p, loaded.plan, err);
  const SimConfig cfg = make_config(a);

  io::RunManifest manifest = start_manifest(args, loaded.model);
  record_sim_config(manifest, a, cfg);
  std::string p_text;
  for (const double p : ps) p_text += (p_text.empty() ? "" : ",") + io::format_real(p);
  manifest.config["p_list"] = p_text;
  manifest.config["out_dir"] = a.out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    manifest.seeds["mask_p" + std::to_string(i)] = rng::derive_seed(cfg.master_seed, rng::domain::kMask, i);
  }

  const auto entries = sweep_p(loaded.model.plant, loaded.plan.cert, ps, cfg, a.tol_rel);

  const fs::path dir = a.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw LoadError("cannot create output directory '" + dir.string() + "': " + ec.message());

  std::ostringstream table;
  table << "p,verdict,threshold_step,mean_final_sq_norm\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const SweepEntry& e = entries[i];
    const fs::path csv = dir / ("p_" + std::to_string(i) + ".csv");
    io::write_stats_csv(csv, e.stats);
    manifest.outputs.push_back(csv.string());
    table << io::format_real(e.p) << ',' << to_string(e.report.verdict) << ','
          << (e.report.threshold_step ? std::to_string(*e.report.threshold_step) : std::string())
          << ',' << io::format_real(e.stats.mean_sq_norm(e.stats.mean_sq_norm.size() - 1)) << '\n';
  }
  const fs::path summary = dir / "summary.csv";
  {
    std::ofstream f(summary);
    if (!f) throw LoadError("cannot write '" + summary.string() + "'");
    f << table.str();
  }
  manifest.outputs.push_back(summary.string());
  manifest.wall_seconds = seconds_since(t0);
  io::write_manifest(dir / "manifest.json", manifest);
  out << table.str();
  return kExitOk;
}

void add_sim_options(CLI::App* cmd, SimArgs& a, bool sweep) {
  cmd->add_option("plan", a.plan, "Plan file written by synth")->required();
  cmd->add_option("model", a.model, "Model the plan was synthesized for")->required();
  if (sweep) {
    cmd->add_option("--p", a.p, "Comma-separated probabilities; 'pstar' selects the plan value")
        ->required();
    cmd->add_option("--out-dir", a.out, "Directory for per-p CSVs and summary.csv")->required();
  } else {
    cmd->add_option("--p", a.p, "Override: one probability or a comma-separated list of length n");
    cmd->add_option("--out", a.out, "CSV path (stdout when omitted)");
  }
  cmd->add_option("--runs", a.runs, "Monte Carlo trajectories")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--steps", a.steps, "Time steps")->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--sigma", a.sigma, "Std. deviation of each initial-state coordinate")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", a.seed, "Master seed")->capture_default_str();
  cmd->add_option("--components", a.components, "State indices whose mean is recorded")
      ->delimiter(',');
  cmd->add_option("--threads", a.threads, "Worker cap (0 = all cores); overrides " +
                                              std::string(kThreadsEnv));
  cmd->add_option("--tol-rel", a.tol_rel, "Relative level that counts as converged")
      ->capture_default_str()->check(CLI::PositiveNumber);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse state-feedback synthesis and Monte Carlo validation", "sparsectl"};
  app.set_version_flag("--version", std::string(SPARSECTL_VERSION));
  app.require_subcommand(1);

  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "Test Assumptions 1 and 2 on a model");
  check->add_option("model", check_args.model, "builtin:converter|grid?..|chain?.. or a plant file")
      ->required();

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Synthesize a gain and sparsification probabilities");
  synth->add_option("model", synth_args.model, "Model to synthesize for")->required();
  synth->add_option("--delta", synth_args.delta, "Gamma grid step")->capture_default_str();
  synth->add_option("--p-floor", synth_args.p_floor, "Probability for zero-influence coordinates")
      ->capture_default_str();
  synth->add_option("--eps-p", synth_args.eps_p, "Safety margin added to the threshold")
      ->capture_default_str();
  synth->add_flag("--adaptive", synth_args.adaptive, "Per-coordinate probabilities");
  synth->add_option("--weights", synth_args.weights,
                    "Adaptive costs: unit, model (from the plant file) or a comma list")
      ->capture_default_str();
  synth->add_option("--grid", synth_args.grid, "Gamma grid: standard or extended")
      ->capture_default_str()->check(CLI::IsMember({"standard", "extended"}));
  synth->add_option("--out", synth_args.out, "Plan path (stdout when omitted)");

  SimArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo ensemble under a plan");
  add_sim_options(simulate, sim_args, false);

  SimArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Common-random-number ensembles over several p");
  add_sim_options(sweep, sweep_args, true);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*check) return cmd_check(check_args, out);
    if (*synth) return cmd_synth(synth_args, args, out, err);
    if (*simulate) return cmd_simulate(sim_args, args, out, err);
    if (*sweep) return cmd_sweep(sweep_args, args, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const LoadError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    // AssumptionViolated, Infeasible, RankDeficient, InvalidCertificate, PlanMismatch
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace sparsectl::cli
