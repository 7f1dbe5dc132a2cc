#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sparsectl/linops.hpp"

namespace sparsectl {

// Discrete-time plant x(k+1) = A x(k) + B u(k) with cached structural facts.
class Plant {
 public:
  // Validates shapes and finiteness; computes rank(B) and, when B has full
  // column rank, a_n = ||(I - B B^+) A||_2.
  Plant(Matrix A, Matrix B, std::string name = {});

  [[nodiscard]] const Matrix& A() const noexcept { return A_; }
  [[nodiscard]] const Matrix& B() const noexcept { return B_; }
  [[nodiscard]] Eigen::Index n() const noexcept { return A_.rows(); }
  [[nodiscard]] Eigen::Index m() const noexcept { return B_.cols(); }
  [[nodiscard]] Eigen::Index rank_B() const noexcept { return rank_B_; }
  // Empty when B is rank deficient (the projector is undefined).
  [[nodiscard]] std::optional<double> a_n() const noexcept { return a_n_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }

 private:
  Matrix A_;
  Matrix B_;
  Eigen::Index rank_B_ = 0;
  std::optional<double> a_n_;
  std::string name_;
};

struct AssumptionReport {
  bool rank_ok = false;
  std::optional<double> a_n;
  bool spectral_ok = false;

  [[nodiscard]] bool ok() const noexcept { return rank_ok && spectral_ok; }
};

[[nodiscard]] AssumptionReport check_assumptions(const Plant& plant);

// A gain K together with the closed-loop quantities that every threshold is
// computed from: D = A + B K, L = B K and the squared column norms s of L.
struct GainCertificate {
  Matrix K;
  Matrix D;
  double gamma = 1.0;
  double t = 0.0;
  double D_norm_sq = 0.0;
  Vector s;
  double s_max = 0.0;

  // Builds D, L, s, s_max from (A, B, K).
  static GainCertificate from_gain(const Plant& plant, Matrix K, double gamma, double t);
};

enum class GammaGrid {
  kStandard,     // {a_n, a_n + delta, ...} up to 1
  kExtended,  // {a_n^2 + delta, ...} up to 1; reaches the Schur-feasible band below a_n
};

[[nodiscard]] std::string to_string(GammaGrid grid);
[[nodiscard]] GammaGrid parse_gamma_grid(const std::string& text);

struct SynthOptions {
  double delta = 0.01;
  double p_floor = 1e-4;
  double eps_p = 1e-4;
  GammaGrid grid = GammaGrid::kStandard;
};

enum class SparsificationMode { kUniform, kAdaptive };

struct SparsificationPlan {
  GainCertificate cert;
  SparsificationMode mode = SparsificationMode::kUniform;
  double p_star = 1.0;        // uniform mode
  Vector p_vec;               // adaptive mode; uniform mode fills it with p_star
  Vector weights;
  std::vector<bool> degenerate;  // coordinates with s_i == 0 (p_floor substituted)
  bool degenerate_uniform = false;
  double expected_sparsity = 0.0;
  double contraction = 0.0;   // f(p_star) or g(p_vec)
  double threshold = 0.0;     // uniform: p_{K_gamma} before the safety margin
  std::size_t grid_points = 0;
  std::size_t feasible_points = 0;
  SynthOptions options;

  // Per-coordinate probabilities used for masking, in either mode.
  [[nodiscard]] Vector probabilities() const;
};

// Block LMI [gamma I, D^T; D, I] > 0 with D = A + B K.
[[nodiscard]] bool lmi_feasible(const Matrix& A, const Matrix& B, const Matrix& K, double gamma);

// Smallest t in [0, 1] for K(t) = -t (B^T B)^{-1} B^T A with ||A + B K(t)||^2 < gamma.
[[nodiscard]] GainCertificate gain_for_gamma(const Plant& plant, double gamma);

// ||D^T D + ((1 - p) / p) Diag(s)||
[[nodiscard]] double f_value(const GainCertificate& cert, double p);

// ||D^T D + Diag(s_i (1 / p_i - 1))||
[[nodiscard]] double g_value(const GainCertificate& cert, const Vector& p_vec);

struct UniformThreshold {
  double p = 1.0;
  bool degenerate = false;
};

struct AdaptiveThreshold {
  Vector p;
  std::vector<bool> degenerate;
};

inline constexpr double kDegenerateInfluence = 1e-14;

[[nodiscard]] UniformThreshold p_threshold_uniform(const GainCertificate& cert, double p_floor);
[[nodiscard]] AdaptiveThreshold p_threshold_adaptive(const GainCertificate& cert, double p_floor);

// The gamma values swept by both algorithms, in increasing order.
[[nodiscard]] std::vector<double> gamma_grid(double a_n, const SynthOptions& options);

[[nodiscard]] SparsificationPlan algorithm1(const Plant& plant, const SynthOptions& options = {});
[[nodiscard]] SparsificationPlan algorithm2(const Plant& plant, const Vector& weights,
                                            const SynthOptions& options = {});

}  // namespace sparsectl
