// Acceptance suite: one PASS/FAIL line per criterion.
//
//   sparsectl_acceptance            run everything
//   sparsectl_acceptance NAME...    run the named criteria
//   sparsectl_acceptance --list     print the names

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sparsectl/errors.hpp"
#include "sparsectl/models.hpp"
#include "sparsectl/sim.hpp"
#include "sparsectl/sparsify.hpp"
#include "sparsectl/synth.hpp"
#include "test_support.hpp"

namespace {

using namespace sparsectl;
using testing::Rand;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream out;
  out.precision(precision);
  out << v;
  return out.str();
}

// ---------------------------------------------------------------- criteria

Outcome second_moment_identity() {
  Rand rnd(101);
  double worst = 0.0;
  int cases = 0;
  for (int n = 2; n <= 8; ++n) {
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix L = rnd.matrix(n, n);
      const Vector probs = rnd.probs(n, 0.02, 1.0);
      const Matrix G = L.transpose() * L;
      Matrix acc = Matrix::Zero(n, n);
      for (std::uint32_t pattern = 0; pattern < (1U << n); ++pattern) {
        double weight = 1.0;
        Vector c(n);
        for (int i = 0; i < n; ++i) {
          const bool on = (pattern >> i) & 1U;
          weight *= on ? probs(i) : 1.0 - probs(i);
          c(i) = on ? 1.0 / probs(i) : 0.0;
        }
        acc += weight * (c.asDiagonal() * G * c.asDiagonal());
      }
      worst = std::max(worst, (acc - second_moment_matrix(L, probs)).norm());
      ++cases;
    }
  }
  return {worst <= 1e-12, std::to_string(cases) + " cases, max Frobenius error " + fmt(worst)};
}

Outcome schur_equivalence() {
  Rand rnd(202);
  int checked = 0, disagreements = 0, feasible = 0;
  while (checked < 1000) {
    const int n = rnd.integer(1, 8), m = rnd.integer(1, n);
    const Matrix A = rnd.matrix(n, n, 0.5), B = rnd.matrix(n, m), K = rnd.matrix(m, n, 0.3);
    const double gamma = rnd.uniform(0.05, 3.0);
    const double d = linops::spectral_norm(A + B * K);
    if (std::abs(d * d - gamma) <= 1e-6) continue;
    ++checked;
    feasible += d * d < gamma;
    disagreements += lmi_feasible(A, B, K, gamma) != (d * d < gamma);
  }
  return {disagreements == 0, std::to_string(checked) + " instances (" + std::to_string(feasible) +
                                  " feasible), " + std::to_string(disagreements) + " disagreements"};
}

Outcome theorem_soundness() {
  Rand rnd(303);
  double worst_f = 0.0, worst_g = 0.0;
  int plants = 0;
  while (plants < 200) {
    const Plant plant = rnd.assumption_plant(2, 8);
    ++plants;
    const auto uniform = algorithm1(plant);
    const auto adaptive = algorithm2(plant, rnd.probs(plant.n(), 0.5, 2.0));
    worst_f = std::max(worst_f, f_value(uniform.cert, uniform.p_star));
    worst_g = std::max(worst_g, g_value(adaptive.cert, adaptive.p_vec));
  }
  return {worst_f < 1.0 && worst_g < 1.0, std::to_string(plants) + " plants, max f(p*) = " +
                                              fmt(worst_f, 10) + ", max g(p_vec) = " + fmt(worst_g, 10)};
}

Outcome converter_end_to_end() {
  const Plant plant = models::converter();
  const auto plan = algorithm1(plant);
  SimConfig cfg;  // runs = 100, sigma = 100, steps = 200
  const auto at_star = decay_report(run_ensemble(plant, plan, cfg), plan.contraction);
  const auto low = sweep_p(plant, plan.cert, {0.4}, cfg).front();
  const bool band = plan.p_star >= 0.73 && plan.p_star <= 0.85;
  const bool converged = at_star.verdict == Verdict::kConverged;
  const bool diverged = low.report.verdict == Verdict::kDiverged;
  std::string detail = "p_star = " + fmt(plan.p_star) + (band ? " in" : " outside") + " [0.73, 0.85]; p_star " +
                       to_string(at_star.verdict);
  if (at_star.threshold_step) detail += " at step " + std::to_string(*at_star.threshold_step);
  detail += "; p = 0.4 " + to_string(low.report.verdict);
  return {band && converged && diverged, detail};
}

Outcome adaptive_converter() {
  const auto plan = algorithm2(models::converter(), Vector::Ones(3));
  const Vector& p = plan.p_vec;
  const bool ok = p(2) > p(0) && p(2) > p(1) && std::abs(p(2) - 0.794) <= 0.08 && p(0) < 0.15 && p(1) < 0.15;
  return {ok, "p_vec = [" + fmt(p(0)) + ", " + fmt(p(1)) + ", " + fmt(p(2)) + "]"};
}

Outcome decay_bound() {
  const Plant plant = models::converter();
  const auto plan = algorithm1(plant);
  const double p = plan.p_star + 0.05;
  SimConfig cfg;
  cfg.runs = 1000;
  cfg.steps = 50;
  const auto stats = run_ensemble(plant, plan.cert.K, Vector::Constant(3, p), cfg);
  const double bound = f_value(plan.cert, p);
  const auto check = check_ratio_bound(stats, bound, 5, 50);
  return {check.checked_steps > 0 && check.max_excess_sigma <= 4.0,
          "p = " + fmt(p) + ", f(p) = " + fmt(bound) + ", " + std::to_string(check.checked_steps) +
              " windows, worst excess " + fmt(check.max_excess_sigma, 4) + " SE at k = " +
              std::to_string(check.worst_step)};
}

Outcome expectation_dynamics() {
  const Plant plant = models::converter();
  const auto plan = algorithm1(plant);
  SimConfig cfg;
  cfg.runs = 2000;
  cfg.steps = 20;
  const auto stats = run_ensemble(plant, plan, cfg);
  const Matrix D = plant.A() + plant.B() * plan.cert.K;
  const Matrix L = plant.B() * plan.cert.K;
  const Vector probs = plan.probabilities();
  // Tolerance is relative to the true RMS state norm, sqrt(tr E[x x^T]),
  // propagated exactly from the initial covariance sigma^2 I.
  Matrix S = cfg.init_sigma * cfg.init_sigma * Matrix::Identity(3, 3);
  Vector predicted = stats.mean_state.row(0).transpose();
  const double rel_tol = 5.0 / std::sqrt(static_cast<double>(cfg.runs));
  double worst = 0.0;
  int worst_k = 0;
  for (int k = 1; k <= 20; ++k) {
    Matrix next = D * S * D.transpose();
    for (Eigen::Index i = 0; i < 3; ++i) next += (1.0 / probs(i) - 1.0) * S(i, i) * L.col(i) * L.col(i).transpose();
    S = next;
    predicted = D * predicted;
    const double rel = (stats.mean_state.row(k).transpose() - predicted).norm() / std::sqrt(S.trace());
    if (rel > worst) {
      worst = rel;
      worst_k = k;
    }
  }
  return {worst <= rel_tol, "max relative deviation " + fmt(worst, 4) + " at k = " + std::to_string(worst_k) +
                                " (tolerance " + fmt(rel_tol, 4) + ")"};
}

Outcome table1_trend() {
  std::string detail;
  bool ok = true;
  double previous = std::numeric_limits<double>::infinity();
  SynthOptions options;
  options.delta = 0.005;
  for (std::size_t nodes : {50U, 100U, 200U}) {
    models::GridOptions grid;
    grid.nodes = nodes;
    const Plant plant = models::power_grid(grid).plant;
    if (!detail.empty()) detail += "; ";
    detail += "n=" + std::to_string(nodes) + ": ";
    try {
      const auto plan = algorithm1(plant, options);
      const double es = plan.p_star * 2.0 * static_cast<double>(nodes);
      detail += "p_star = " + fmt(plan.p_star) + ", ES = " + fmt(es, 4);
      ok = ok && es >= 3.0 && es <= 8.0 && plan.p_star <= previous;
      previous = plan.p_star;
    } catch (const AssumptionViolated&) {
      detail += "a_n = " + fmt(plant.a_n().value_or(std::nan("")), 6) + " >= 1, Assumption 2 fails";
      ok = false;
    }
  }
  return {ok, detail};
}

Outcome chain_appendix() {
  const Plant plant = models::interconnected_chain(20);
  const auto plan = algorithm1(plant);
  const auto report = decay_report(run_ensemble(plant, plan, SimConfig{}), plan.contraction);
  const bool band = plan.p_star >= 0.75 && plan.p_star <= 0.87;
  std::string detail = "p_star = " + fmt(plan.p_star) + (band ? " in" : " outside") + " [0.75, 0.87]; " +
                       to_string(report.verdict);
  if (report.threshold_step) detail += " at step " + std::to_string(*report.threshold_step);
  return {band && report.verdict == Verdict::kConverged, detail};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int shell(const std::string& command) {
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const std::string bin = SPARSECTL_CLI_PATH;
  const fs::path dir = fs::temp_directory_path() / "sparsectl_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string quiet = " > /dev/null 2>&1";
  auto path = [&](const std::string& name) { return (dir / name).string(); };

  struct Case {
    std::string plan_args;
    std::string model;
    std::string sim_args;
  };
  const std::vector<Case> cases = {
      {"", "builtin:converter", "--seed 7"},
      {"", "builtin:converter", "--p 0.4 --runs 333 --seed 11"},
      {"--adaptive", "builtin:converter", "--runs 250 --components 0,2"},
      {"", "builtin:chain?N=6", "--runs 120 --steps 80 --components 0,5,11 --seed 3"},
  };
  int compared = 0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const std::string plan = path("plan" + std::to_string(c) + ".json");
    if (shell(bin + " synth '" + cases[c].model + "' " + cases[c].plan_args + " --out " + plan + quiet) != 0) {
      return {false, "synth failed for case " + std::to_string(c)};
    }
    std::string reference;
    for (int threads : {1, 8}) {
      const std::string csv = path("case" + std::to_string(c) + "_t" + std::to_string(threads) + ".csv");
      const int code = shell(bin + " simulate " + plan + " '" + cases[c].model + "' " + cases[c].sim_args +
                             " --threads " + std::to_string(threads) + " --out " + csv + quiet);
      if (code != 0 && code != 1) return {false, "simulate exited with " + std::to_string(code)};
      const std::string bytes = slurp(csv);
      if (bytes.empty()) return {false, "empty CSV for case " + std::to_string(c)};
      if (threads == 1) {
        reference = bytes;
      } else if (bytes != reference) {
        return {false, "case " + std::to_string(c) + ": CSVs differ between --threads 1 and 8"};
      }
    }
    ++compared;
  }
  return {true, std::to_string(compared) + " simulate invocations byte-identical at --threads 1 and 8"};
}

std::vector<Criterion> criteria() {
  return {
      {"second_moment_identity", 10, second_moment_identity},
      {"schur_equivalence", 30, schur_equivalence},
      {"theorem_soundness", 120, theorem_soundness},
      {"converter_end_to_end", 60, converter_end_to_end},
      {"adaptive_converter", 60, adaptive_converter},
      {"decay_bound", 120, decay_bound},
      {"expectation_dynamics", 120, expectation_dynamics},
      {"table1_trend", 600, table1_trend},
      {"chain_appendix", 120, chain_appendix},
      {"determinism", 60, determinism},
  };
}

}  // namespace

int main(int argc, char** argv) {
  const auto all = criteria();
  std::vector<std::string> selected(argv + 1, argv + argc);
  if (selected.size() == 1 && selected[0] == "--list") {
    for (const auto& c : all) std::cout << c.name << '\n';
    return 0;
  }
  for (const auto& name : selected) {
    bool known = false;
    for (const auto& c : all) known = known || c.name == name;
    if (!known) {
      std::cerr << "unknown criterion '" << name << "' (see --list)\n";
      return 2;
    }
  }

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.name) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (seconds > c.limit_seconds) {
      outcome.pass = false;
      outcome.detail += "; runtime " + fmt(seconds, 3) + " s exceeds " + fmt(c.limit_seconds, 3) + " s";
    }
    failures += !outcome.pass;
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << c.name << ": " << outcome.detail << " [" << fmt(seconds, 3)
              << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
