#include "sparsectl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "sparsectl/errors.hpp"

namespace sparsectl {
namespace {

constexpr double kBisectionTol = 1e-9;
constexpr double kGammaFloorSlack = 1e-12;
constexpr double kCertificateMargin = 1e-9;
constexpr double kSpectralSlack = 1e-9;

void require_probability(double p, const char* what) {
  if (!(p > 0.0) || !(p <= 1.0)) {
    std::ostringstream msg;
    msg << what << ": probability " << p << " outside (0, 1]";
    throw InvalidInput(msg.str());
  }
}

void require_options(const SynthOptions& options) {
  if (!(options.delta > 0.0) || !std::isfinite(options.delta)) {
    throw InvalidInput("delta must be positive");
  }
  if (!(options.p_floor > 0.0) || !(options.p_floor < 1.0)) {
    throw InvalidInput("p_floor must lie in (0, 1)");
  }
  if (!(options.eps_p >= 0.0) || !(options.eps_p < 1.0)) {
    throw InvalidInput("eps_p must lie in [0, 1)");
  }
}

double require_assumptions(const Plant& plant) {
  const AssumptionReport report = check_assumptions(plant);
  if (!report.rank_ok) {
    throw AssumptionViolated("Assumption 1 violated: rank(B) = " + std::to_string(plant.rank_B()) +
                             " < m = " + std::to_string(plant.m()));
  }
  if (!report.spectral_ok) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "Assumption 2 violated: a_n = " << *report.a_n << " is not below 1";
    throw AssumptionViolated(msg.str());
  }
  return *report.a_n;
}

Matrix second_moment_bound(const GainCertificate& cert, const Vector& diag) {
  Matrix M = cert.D.transpose() * cert.D;
  M.diagonal() += diag;
  return M;
}

std::string grid_diagnostic(double a_n, const std::vector<double>& grid,
                            const SynthOptions& options) {
  std::ostringstream msg;
  msg.precision(6);
  msg << "no feasible gamma: a_n = " << a_n << ", a_n^2 = " << a_n * a_n
      << ", delta = " << options.delta << ", grid = " << to_string(options.grid) << " with "
      << grid.size() << " point(s)";
  if (!grid.empty()) {
    msg << " in [" << grid.front() << ", " << grid.back() << "]";
  }
  return msg.str();
}

}  // namespace

Plant::Plant(Matrix A, Matrix B, std::string name)
    : A_(std::move(A)), B_(std::move(B)), name_(std::move(name)) {
  linops::require_finite(A_, "A");
  linops::require_finite(B_, "B");
  if (A_.rows() != A_.cols()) {
    throw InvalidInput("A must be square, got " + std::to_string(A_.rows()) + "x" +
                       std::to_string(A_.cols()));
  }
  if (B_.rows() != A_.rows()) {
    throw InvalidInput("B must have n = " + std::to_string(A_.rows()) + " rows, got " +
                       std::to_string(B_.rows()));
  }
  if (B_.cols() > B_.rows()) {
    throw InvalidInput("B must satisfy m <= n");
  }
  rank_B_ = linops::rank_of(B_);
  if (rank_B_ == B_.cols()) {
    try {
      a_n_ = linops::projected_dynamics(A_, B_).a_n;
    } catch (const RankDeficient&) {
      a_n_.reset();
    }
  }
}

AssumptionReport check_assumptions(const Plant& plant) {
  AssumptionReport report;
  report.rank_ok = plant.rank_B() == plant.m() && plant.a_n().has_value();
  report.a_n = plant.a_n();
  report.spectral_ok = report.a_n.has_value() && *report.a_n < 1.0 - kSpectralSlack;
  return report;
}

GainCertificate GainCertificate::from_gain(const Plant& plant, Matrix K, double gamma, double t) {
  if (K.rows() != plant.m() || K.cols() != plant.n()) {
    throw InvalidInput("gain K must be m x n");
  }
  GainCertificate cert;
  const Matrix L = plant.B() * K;
  cert.D = plant.A() + L;
  cert.K = std::move(K);
  cert.gamma = gamma;
  cert.t = t;
  const double norm = linops::spectral_norm(cert.D);
  cert.D_norm_sq = norm * norm;
  cert.s = L.colwise().squaredNorm().transpose();
  cert.s_max = cert.s.size() > 0 ? cert.s.maxCoeff() : 0.0;
  return cert;
}

std::string to_string(GammaGrid grid) {
  return grid == GammaGrid::kStandard ? "standard" : "extended";
}

GammaGrid parse_gamma_grid(const std::string& text) {
  if (text == "standard") return GammaGrid::kStandard;
  if (text == "extended") return GammaGrid::kExtended;
  throw InvalidInput("unknown gamma grid '" + text + "' (expected standard or extended)");
}

Vector SparsificationPlan::probabilities() const {
  if (mode == SparsificationMode::kAdaptive) {
    return p_vec;
  }
  return Vector::Constant(cert.D.cols(), p_star);
}

bool lmi_feasible(const Matrix& A, const Matrix& B, const Matrix& K, double gamma) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || K.rows() != B.cols() ||
      K.cols() != A.cols()) {
    throw InvalidInput("lmi_feasible: dimension mismatch between A, B and K");
  }
  if (!(gamma > 0.0)) {
    throw InvalidInput("lmi_feasible: gamma must be positive");
  }
  const Eigen::Index n = A.rows();
  const Matrix D = A + B * K;
  Matrix block(2 * n, 2 * n);
  block.topLeftCorner(n, n) = gamma * Matrix::Identity(n, n);
  block.topRightCorner(n, n) = D.transpose();
  block.bottomLeftCorner(n, n) = D;
  block.bottomRightCorner(n, n) = Matrix::Identity(n, n);
  return linops::is_positive_definite(block);
}

GainCertificate gain_for_gamma(const Plant& plant, double gamma) {
  const double a_n = require_assumptions(plant);
  const double floor = a_n * a_n;
  if (!std::isfinite(gamma) || gamma > 1.0) {
    throw InvalidInput("gamma must lie in (a_n^2, 1]");
  }
  if (!(gamma > floor + kGammaFloorSlack)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "gamma = " << gamma << " does not exceed a_n^2 = " << floor
        << "; no gain in the family attains the bound";
    throw Infeasible(msg.str());
  }

  const Matrix G = linops::pseudo_inverse_times(plant.B(), plant.A());
  const Matrix BG = plant.B() * G;
  const double margin = std::min(kCertificateMargin, 0.5 * (gamma - floor));
  auto closed_loop_norm_sq = [&](double t) {
    const double norm = linops::spectral_norm(plant.A() - t * BG);
    return norm * norm;
  };
  auto feasible = [&](double t) { return closed_loop_norm_sq(t) < gamma - margin; };

  double t = 0.0;
  if (!feasible(0.0)) {
    // ||A + B K(t)|| is nonincreasing in t and equals a_n at t = 1.
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > kBisectionTol) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? hi : lo) = mid;
    }
    t = hi;
    if (!feasible(t)) {
      throw Infeasible("bisection ended on an infeasible endpoint; gamma too close to a_n^2");
    }
  }
  return GainCertificate::from_gain(plant, -t * G, gamma, t);
}

double f_value(const GainCertificate& cert, double p) {
  require_probability(p, "f_value");
  const double scale = (1.0 - p) / p;
  return linops::spectral_norm(second_moment_bound(cert, scale * cert.s));
}

double g_value(const GainCertificate& cert, const Vector& p_vec) {
  if (p_vec.size() != cert.s.size()) {
    throw InvalidInput("g_value: probability vector has the wrong length");
  }
  Vector diag(p_vec.size());
  for (Eigen::Index i = 0; i < p_vec.size(); ++i) {
    require_probability(p_vec(i), "g_value");
    diag(i) = cert.s(i) * (1.0 / p_vec(i) - 1.0);
  }
  return linops::spectral_norm(second_moment_bound(cert, diag));
}

UniformThreshold p_threshold_uniform(const GainCertificate& cert, double p_floor) {
  if (!(cert.D_norm_sq < 1.0)) {
    throw InvalidCertificate("||A + BK||^2 >= 1: no sparsification threshold exists");
  }
  if (cert.s_max < kDegenerateInfluence) {
    return {p_floor, true};
  }
  const double alpha = (1.0 - cert.D_norm_sq) / cert.s_max;
  return {1.0 / (1.0 + alpha), false};
}

AdaptiveThreshold p_threshold_adaptive(const GainCertificate& cert, double p_floor) {
  if (!(cert.D_norm_sq < 1.0)) {
    throw InvalidCertificate("||A + BK||^2 >= 1: no sparsification threshold exists");
  }
  const Eigen::Index n = cert.s.size();
  AdaptiveThreshold out{Vector(n), std::vector<bool>(static_cast<std::size_t>(n), false)};
  const double slack = 1.0 - cert.D_norm_sq;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (cert.s(i) < kDegenerateInfluence) {
      out.p(i) = p_floor;
      out.degenerate[static_cast<std::size_t>(i)] = true;
    } else {
      out.p(i) = 1.0 / (1.0 + slack / cert.s(i));
    }
  }
  return out;
}

std::vector<double> gamma_grid(double a_n, const SynthOptions& options) {
  require_options(options);
  const double floor = a_n * a_n;
  const double start = options.grid == GammaGrid::kStandard ? a_n : floor + options.delta;
  std::vector<double> grid;
  // Index-based generation avoids drift from repeated addition.
  for (std::size_t j = 0;; ++j) {
    const double gamma = start + static_cast<double>(j) * options.delta;
    if (gamma > 1.0 + kGammaFloorSlack) break;
    if (gamma > floor + kGammaFloorSlack) grid.push_back(std::min(gamma, 1.0));
  }
  return grid;
}

SparsificationPlan algorithm1(const Plant& plant, const SynthOptions& options) {
  require_options(options);
  const double a_n = require_assumptions(plant);
  const std::vector<double> grid = gamma_grid(a_n, options);

  std::optional<GainCertificate> best;
  UniformThreshold best_threshold;
  std::size_t feasible = 0;
  for (const double gamma : grid) {
    GainCertificate cert;
    try {
      cert = gain_for_gamma(plant, gamma);
    } catch (const Infeasible&) {
      continue;
    }
    if (!(cert.D_norm_sq < 1.0)) continue;
    ++feasible;
    const UniformThreshold threshold = p_threshold_uniform(cert, options.p_floor);
    // Strict comparison: the smallest gamma wins ties.
    if (!best || threshold.p < best_threshold.p) {
      best = std::move(cert);
      best_threshold = threshold;
    }
  }
  if (!best) {
    throw Infeasible(grid_diagnostic(a_n, grid, options));
  }

  SparsificationPlan plan;
  plan.mode = SparsificationMode::kUniform;
  plan.options = options;
  plan.grid_points = grid.size();
  plan.feasible_points = feasible;
  plan.threshold = best_threshold.p;
  plan.degenerate_uniform = best_threshold.degenerate;
  plan.p_star = best_threshold.degenerate
                    ? options.p_floor
                    : std::min(1.0, best_threshold.p + options.eps_p);
  // Floating-point guard for the strict inequality f(p_star) < 1.
  double contraction = f_value(*best, plan.p_star);
  while (!(contraction < 1.0) && plan.p_star < 1.0) {
    plan.p_star = std::min(1.0, plan.p_star + std::max(options.eps_p, 1e-12));
    contraction = f_value(*best, plan.p_star);
  }
  plan.contraction = contraction;
  plan.degenerate = p_threshold_adaptive(*best, options.p_floor).degenerate;
  plan.cert = std::move(*best);
  const Eigen::Index n = plant.n();
  plan.weights = Vector::Ones(n);
  plan.p_vec = Vector::Constant(n, plan.p_star);
  plan.expected_sparsity = plan.p_star * static_cast<double>(n);
  return plan;
}

SparsificationPlan algorithm2(const Plant& plant, const Vector& weights,
                              const SynthOptions& options) {
  require_options(options);
  if (weights.size() != plant.n()) {
    throw InvalidInput("weights must have length n = " + std::to_string(plant.n()));
  }
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights(i) > 0.0) || !std::isfinite(weights(i))) {
      throw InvalidInput("weights must be positive and finite");
    }
  }
  const double a_n = require_assumptions(plant);
  const std::vector<double> grid = gamma_grid(a_n, options);

  std::optional<GainCertificate> best;
  AdaptiveThreshold best_threshold;
  double best_es = std::numeric_limits<double>::infinity();
  std::size_t feasible = 0;
  for (const double gamma : grid) {
    GainCertificate cert;
    try {
      cert = gain_for_gamma(plant, gamma);
    } catch (const Infeasible&) {
      continue;
    }
    if (!(cert.D_norm_sq < 1.0)) continue;
    ++feasible;
    AdaptiveThreshold threshold = p_threshold_adaptive(cert, options.p_floor);
    const double es = weights.dot(threshold.p);
    if (!best || es < best_es) {
      best = std::move(cert);
      best_threshold = std::move(threshold);
      best_es = es;
    }
  }
  if (!best) {
    throw Infeasible(grid_diagnostic(a_n, grid, options));
  }

  const Eigen::Index n = plant.n();
  SparsificationPlan plan;
  plan.mode = SparsificationMode::kAdaptive;
  plan.options = options;
  plan.grid_points = grid.size();
  plan.feasible_points = feasible;
  plan.weights = weights;
  plan.degenerate = best_threshold.degenerate;
  plan.p_vec.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    plan.p_vec(i) = best_threshold.degenerate[static_cast<std::size_t>(i)]
                        ? options.p_floor
                        : std::min(1.0, best_threshold.p(i) + options.eps_p);
  }
  auto raisable = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!plan.degenerate[static_cast<std::size_t>(i)] && plan.p_vec(i) < 1.0) return true;
    }
    return false;
  };
  double contraction = g_value(*best, plan.p_vec);
  while (!(contraction < 1.0) && raisable()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!plan.degenerate[static_cast<std::size_t>(i)]) {
        plan.p_vec(i) = std::min(1.0, plan.p_vec(i) + std::max(options.eps_p, 1e-12));
      }
    }
    contraction = g_value(*best, plan.p_vec);
  }
  plan.contraction = contraction;
  plan.threshold = p_threshold_uniform(*best, options.p_floor).p;
  plan.p_star = plan.p_vec.maxCoeff();
  plan.expected_sparsity = weights.dot(plan.p_vec);
  plan.cert = std::move(*best);
  return plan;
}

}  // namespace sparsectl
