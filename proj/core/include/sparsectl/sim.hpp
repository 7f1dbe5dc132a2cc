#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sparsectl/linops.hpp"
#include "sparsectl/sparsify.hpp"
#include "sparsectl/synth.hpp"

namespace sparsectl {

// A trajectory whose state norm exceeds this is frozen at its last state
// below the cutoff and counted as diverged.
inline constexpr double kDivergenceNorm = 1e150;

struct SimConfig {
  std::size_t steps = 200;
  std::size_t runs = 100;
  // Standard deviation of each coordinate of the zero-mean Gaussian x(0).
  double init_sigma = 100.0;
  std::uint64_t master_seed = 1;
  std::vector<Eigen::Index> record_components;
  // Worker cap; 0 selects std::thread::hardware_concurrency(). Results do
  // not depend on this value.
  unsigned threads = 0;
};

// Per-step ensemble statistics for k = 0 .. steps (row k of mean_state).
struct EnsembleStats {
  std::size_t runs = 0;
  std::size_t steps = 0;
  Matrix mean_state;
  Vector mean_sq_norm;
  Vector std_sq_norm;
  Vector active_sensors_mean;
  std::vector<std::size_t> diverged_runs;  // cumulative count per step
  std::vector<Eigen::Index> record_components;

  // Standard error of mean_sq_norm(k).
  [[nodiscard]] double std_error(std::size_t k) const;
};

enum class Verdict { kConverged, kDiverged, kInconclusive };

[[nodiscard]] std::string to_string(Verdict verdict);

struct DecayReport {
  std::vector<std::pair<std::size_t, double>> empirical_ratios;  // (k, m(k+1) / m(k))
  double bound = 0.0;
  Verdict verdict = Verdict::kInconclusive;
  std::optional<std::size_t> threshold_step;
};

// x+ = A x + B (K (scale .* x)); only active coordinates touch K.
[[nodiscard]] Vector step(const Plant& plant, const Matrix& K, const Mask& mask, const Vector& x);

void step_into(const Matrix& A, const Matrix& B, const Matrix& K, const Mask& mask,
               const Vector& x, Vector& u_work, Vector& out);

// Monte Carlo ensemble with independent Gaussian initial states. Trajectory r
// uses stream r for both its initial state and its masks; mask_tag selects an
// independent family of mask streams (used by sweeps to key by p index).
[[nodiscard]] EnsembleStats run_ensemble(const Plant& plant, const Matrix& K, const Vector& probs,
                                         const SimConfig& cfg, std::uint64_t mask_tag = 0);

[[nodiscard]] EnsembleStats run_ensemble(const Plant& plant, const SparsificationPlan& plan,
                                         const SimConfig& cfg);

inline constexpr double kDefaultTolRel = 1e-3;

[[nodiscard]] DecayReport decay_report(const EnsembleStats& stats, double contraction,
                                       double tol_rel = kDefaultTolRel);

struct SweepEntry {
  double p = 1.0;
  EnsembleStats stats;
  DecayReport report;
};

// One ensemble per p with shared initial states (common random numbers).
[[nodiscard]] std::vector<SweepEntry> sweep_p(const Plant& plant, const GainCertificate& cert,
                                              const std::vector<double>& p_list,
                                              const SimConfig& cfg, double tol_rel = kDefaultTolRel);

// Compares the window-smoothed empirical ratio (m(k+w) / m(k))^(1/w) with a
// contraction bound, in units of its delta-method standard error.
struct RatioBoundCheck {
  double max_excess_sigma = -std::numeric_limits<double>::infinity();
  std::size_t worst_step = 0;
  std::size_t checked_steps = 0;
};

[[nodiscard]] RatioBoundCheck check_ratio_bound(const EnsembleStats& stats, double contraction,
                                                std::size_t window, std::size_t max_steps,
                                                double min_level = 1e-8);

}  // namespace sparsectl
