#include "sparsectl/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "sparsectl/errors.hpp"
#include "sparsectl/rng.hpp"

namespace sparsectl {
namespace {

constexpr std::size_t kChunkRuns = 16;
constexpr double kRatioFloor = 1e-12;

// Neumaier compensated summation.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) noexcept {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  void merge(const CompensatedSum& other) noexcept {
    add(other.sum);
    add(other.carry);
  }
  [[nodiscard]] double value() const noexcept { return sum + carry; }
};

// Per-chunk partial sums of the state, laid out (step, coordinate).
struct ChunkPartial {
  std::vector<CompensatedSum> state;
};

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1U, std::thread::hardware_concurrency());
}

void validate(const Plant& plant, const Matrix& K, const Vector& probs, const SimConfig& cfg) {
  if (K.rows() != plant.m() || K.cols() != plant.n()) {
    throw InvalidInput("gain K is " + std::to_string(K.rows()) + "x" + std::to_string(K.cols()) +
                       ", plant expects " + std::to_string(plant.m()) + "x" +
                       std::to_string(plant.n()));
  }
  if (probs.size() != plant.n()) {
    throw InvalidInput("probability vector has length " + std::to_string(probs.size()) +
                       ", plant has n = " + std::to_string(plant.n()));
  }
  if (cfg.steps == 0 || cfg.runs == 0) {
    throw InvalidInput("steps and runs must be at least 1");
  }
  if (!(cfg.init_sigma >= 0.0) || !std::isfinite(cfg.init_sigma)) {
    throw InvalidInput("init_sigma must be finite and nonnegative");
  }
  for (const Eigen::Index c : cfg.record_components) {
    if (c < 0 || c >= plant.n()) {
      throw InvalidInput("record component " + std::to_string(c) + " out of range");
    }
  }
}

}  // namespace

double EnsembleStats::std_error(std::size_t k) const {
  return std_sq_norm(static_cast<Eigen::Index>(k)) / std::sqrt(static_cast<double>(runs));
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kConverged: return "converged";
    case Verdict::kDiverged: return "diverged";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

void step_into(const Matrix& A, const Matrix& B, const Matrix& K, const Mask& mask,
               const Vector& x, Vector& u_work, Vector& out) {
  u_work.setZero(K.rows());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (mask.active[static_cast<std::size_t>(i)]) {
      u_work.noalias() += K.col(i) * (mask.scale(i) * x(i));
    }
  }
  out.noalias() = A * x;
  out.noalias() += B * u_work;
}

Vector step(const Plant& plant, const Matrix& K, const Mask& mask, const Vector& x) {
  if (x.size() != plant.n() || K.rows() != plant.m() || K.cols() != plant.n() ||
      mask.scale.size() != plant.n()) {
    throw InvalidInput("step: dimension mismatch");
  }
  Vector u;
  Vector out;
  step_into(plant.A(), plant.B(), K, mask, x, u, out);
  return out;
}

EnsembleStats run_ensemble(const Plant& plant, const Matrix& K, const Vector& probs,
                           const SimConfig& cfg, std::uint64_t mask_tag) {
  validate(plant, K, probs, cfg);
  const Eigen::Index n = plant.n();
  const std::size_t runs = cfg.runs;
  const std::size_t rows = cfg.steps + 1;
  const std::size_t width = static_cast<std::size_t>(n);

  const std::uint64_t init_seed = rng::derive_seed(cfg.master_seed, rng::domain::kInitialState);
  const std::uint64_t mask_seed = rng::derive_seed(cfg.master_seed, rng::domain::kMask, mask_tag);

  // Per-run series, indexed [run * rows + k].
  std::vector<double> sq_norm(runs * rows, 0.0);
  std::vector<std::uint32_t> active(runs * rows, 0);
  std::vector<std::size_t> diverged_at(runs, rows);

  auto simulate_run = [&](std::size_t r, ChunkPartial& partial) {
    const rng::CounterStream init(init_seed, r);
    Vector x(n);
    for (Eigen::Index i = 0; i < n; i += 2) {
      const auto [a, b] = init.block(0, static_cast<std::uint32_t>(i / 2));
      const auto [z0, z1] = rng::standard_normal_pair(a, b);
      x(i) = cfg.init_sigma * z0;
      if (i + 1 < n) x(i + 1) = cfg.init_sigma * z1;
    }
    const MaskSampler sampler(probs, mask_seed, r);
    Mask mask;
    Vector u, next;
    bool frozen = false;
    for (std::size_t k = 0; k < rows; ++k) {
      sq_norm[r * rows + k] = x.squaredNorm();
      for (std::size_t i = 0; i < width; ++i) {
        partial.state[k * width + i].add(x(static_cast<Eigen::Index>(i)));
      }
      sampler.sample_into(k, mask);
      active[r * rows + k] = static_cast<std::uint32_t>(mask.active_count());
      if (k + 1 == rows || frozen) continue;
      step_into(plant.A(), plant.B(), K, mask, x, u, next);
      const double norm = next.norm();
      if (!std::isfinite(norm) || norm > kDivergenceNorm) {
        frozen = true;
        diverged_at[r] = k + 1;
      } else {
        x.swap(next);
      }
    }
  };

  const std::size_t chunks = (runs + kChunkRuns - 1) / kChunkRuns;
  const unsigned threads = resolve_threads(cfg.threads);
  std::vector<CompensatedSum> total(rows * width);

  // Chunks are processed in batches of `threads` and reduced in chunk-index
  // order, so the result is independent of scheduling and thread count.
  for (std::size_t batch_begin = 0; batch_begin < chunks; batch_begin += threads) {
    const std::size_t batch_end = std::min(chunks, batch_begin + threads);
    std::vector<ChunkPartial> partials(batch_end - batch_begin);
    for (auto& partial : partials) partial.state.assign(rows * width, CompensatedSum{});
    std::atomic<std::size_t> next_chunk{batch_begin};
    auto worker = [&] {
      for (std::size_t c = next_chunk++; c < batch_end; c = next_chunk++) {
        ChunkPartial& partial = partials[c - batch_begin];
        const std::size_t first = c * kChunkRuns;
        const std::size_t last = std::min(runs, first + kChunkRuns);
        for (std::size_t r = first; r < last; ++r) simulate_run(r, partial);
      }
    };
    const std::size_t workers = std::min<std::size_t>(threads, batch_end - batch_begin);
    if (workers <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (const auto& partial : partials) {
      for (std::size_t j = 0; j < total.size(); ++j) total[j].merge(partial.state[j]);
    }
  }

  EnsembleStats stats;
  stats.runs = runs;
  stats.steps = cfg.steps;
  stats.record_components = cfg.record_components;
  stats.mean_state.resize(static_cast<Eigen::Index>(rows), n);
  stats.mean_sq_norm.resize(static_cast<Eigen::Index>(rows));
  stats.std_sq_norm.resize(static_cast<Eigen::Index>(rows));
  stats.active_sensors_mean.resize(static_cast<Eigen::Index>(rows));
  stats.diverged_runs.assign(rows, 0);

  const double inv_runs = 1.0 / static_cast<double>(runs);
  for (std::size_t k = 0; k < rows; ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    for (std::size_t i = 0; i < width; ++i) {
      stats.mean_state(row, static_cast<Eigen::Index>(i)) = total[k * width + i].value() * inv_runs;
    }
    CompensatedSum q_sum;
    CompensatedSum active_sum;
    double q_max = 0.0;
    for (std::size_t r = 0; r < runs; ++r) {
      const double q = sq_norm[r * rows + k];
      q_sum.add(q);
      q_max = std::max(q_max, q);
      active_sum.add(static_cast<double>(active[r * rows + k]));
      if (diverged_at[r] <= k) ++stats.diverged_runs[k];
    }
    const double mean = q_sum.value() * inv_runs;
    stats.mean_sq_norm(row) = mean;
    stats.active_sensors_mean(row) = active_sum.value() * inv_runs;
    // Two-pass variance on values scaled by the step maximum (q can reach 1e300).
    double sd = 0.0;
    if (runs > 1 && q_max > 0.0) {
      CompensatedSum dev;
      const double scaled_mean = mean / q_max;
      for (std::size_t r = 0; r < runs; ++r) {
        const double d = sq_norm[r * rows + k] / q_max - scaled_mean;
        dev.add(d * d);
      }
      sd = q_max * std::sqrt(std::max(0.0, dev.value()) / static_cast<double>(runs - 1));
    }
    stats.std_sq_norm(row) = sd;
  }
  return stats;
}

EnsembleStats run_ensemble(const Plant& plant, const SparsificationPlan& plan,
                           const SimConfig& cfg) {
  return run_ensemble(plant, plan.cert.K, plan.probabilities(), cfg);
}

DecayReport decay_report(const EnsembleStats& stats, double contraction, double tol_rel) {
  if (!(contraction >= 0.0)) {
    throw InvalidInput("decay_report: contraction must be nonnegative");
  }
  DecayReport report;
  report.bound = contraction;
  const Vector& m = stats.mean_sq_norm;
  const Eigen::Index rows = m.size();
  if (rows == 0) return report;
  for (Eigen::Index k = 0; k + 1 < rows; ++k) {
    if (m(k) < kRatioFloor) continue;
    report.empirical_ratios.emplace_back(static_cast<std::size_t>(k), m(k + 1) / m(k));
  }
  const double initial = m(0);
  for (Eigen::Index k = 0; k < rows; ++k) {
    if (m(k) < tol_rel * initial) {
      report.threshold_step = static_cast<std::size_t>(k);
      break;
    }
  }
  if (report.threshold_step) {
    report.verdict = Verdict::kConverged;
  } else if (m(rows - 1) > 10.0 * initial) {
    report.verdict = Verdict::kDiverged;
  } else {
    report.verdict = Verdict::kInconclusive;
  }
  return report;
}

std::vector<SweepEntry> sweep_p(const Plant& plant, const GainCertificate& cert,
                                const std::vector<double>& p_list, const SimConfig& cfg,
                                double tol_rel) {
  if (p_list.empty()) {
    throw InvalidInput("sweep_p: empty p list");
  }
  std::vector<SweepEntry> out;
  out.reserve(p_list.size());
  for (std::size_t j = 0; j < p_list.size(); ++j) {
    const double p = p_list[j];
    if (!(p > 0.0) || !(p <= 1.0)) {
      throw InvalidInput("sweep_p: probability outside (0, 1]");
    }
    SweepEntry entry;
    entry.p = p;
    entry.stats = run_ensemble(plant, cert.K, Vector::Constant(plant.n(), p), cfg, j);
    entry.report = decay_report(entry.stats, f_value(cert, p), tol_rel);
    out.push_back(std::move(entry));
  }
  return out;
}

RatioBoundCheck check_ratio_bound(const EnsembleStats& stats, double contraction,
                                  std::size_t window, std::size_t max_steps, double min_level) {
  if (window == 0) {
    throw InvalidInput("check_ratio_bound: window must be positive");
  }
  RatioBoundCheck out;
  const auto last = std::min<std::size_t>(max_steps, stats.steps);
  const double w = static_cast<double>(window);
  for (std::size_t k = 0; k + window <= last; ++k) {
    const double m0 = stats.mean_sq_norm(static_cast<Eigen::Index>(k));
    const double m1 = stats.mean_sq_norm(static_cast<Eigen::Index>(k + window));
    if (!(m0 > min_level) || !(m1 > min_level)) continue;
    const double ratio = std::pow(m1 / m0, 1.0 / w);
    const double rel0 = stats.std_error(k) / m0;
    const double rel1 = stats.std_error(k + window) / m1;
    const double se = ratio * std::sqrt(rel0 * rel0 + rel1 * rel1) / w;
    double excess;
    if (se > 0.0) {
      excess = (ratio - contraction) / se;
    } else {
      excess = ratio > contraction ? std::numeric_limits<double>::infinity()
                                   : -std::numeric_limits<double>::infinity();
    }
    ++out.checked_steps;
    if (excess > out.max_excess_sigma) {
      out.max_excess_sigma = excess;
      out.worst_step = k;
    }
  }
  return out;
}

}  // namespace sparsectl
