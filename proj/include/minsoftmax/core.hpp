#pragma once

// Domain types shared by the finite-space and linear-quadratic solvers.
//
// All types here are immutable once constructed; construction validates every
// invariant and throws `ValidationFailure` listing each violation otherwise.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "minsoftmax/error.hpp"

namespace minsoftmax {

// --------------------------------------------------------------------------
// Validation reports
// --------------------------------------------------------------------------

struct Violation {
  ErrorKind kind;
  std::string field;                 // e.g. "empirical", "transition", "Q"
  std::vector<std::int64_t> index;   // offending indices, outermost first
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::string summary() const;
};

/// Thrown by the `create` factories when validation fails.
class ValidationFailure : public Error {
 public:
  explicit ValidationFailure(ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

// --------------------------------------------------------------------------
// Penalties
// --------------------------------------------------------------------------

/// Temperatures below this are treated as exactly zero (max branch).
inline constexpr double kZeroTemperature = 1e-12;

/// The (γ_H, γ_E) pair: likelihood factor and temperature.
class Penalties {
 public:
  Penalties() = default;
  /// Throws InvalidArgument on negative or non-finite input.
  Penalties(double gamma_h, double gamma_e);

  double gamma_h() const noexcept { return gamma_h_; }
  double gamma_e() const noexcept { return gamma_e_; }
  bool zero_temperature() const noexcept { return gamma_e_ < kZeroTemperature; }

 private:
  double gamma_h_ = 0.0;
  double gamma_e_ = 0.0;
};

// --------------------------------------------------------------------------
// Finite systems
// --------------------------------------------------------------------------

/// How the empirical tables r(·|x,u) are indexed.
enum class EmpiricalLayout {
  Shared,    // one row for every (x, u) and stage
  PerPair,   // one row per (x, u), stage independent
  PerStage,  // one row per (k, x, u)
};

std::string_view to_string(EmpiricalLayout layout) noexcept;

/// Raw, unvalidated payload of a finite system. Tables are dense and
/// row-major: transition is (x, u, w), stage_cost is (x, u), empirical rows are
/// ordered by the layout's index tuple.
struct FiniteSystemSpec {
  int n_states = 0;
  int n_inputs = 0;
  int n_dist = 0;
  int horizon = 0;
  std::vector<std::int32_t> transition;
  std::vector<double> stage_cost;
  std::vector<double> terminal_cost;
  EmpiricalLayout layout = EmpiricalLayout::Shared;
  std::vector<double> empirical;

  std::size_t empirical_rows() const noexcept;
};

/// Lists every invariant violation of `spec`. Probability rows must be
/// nonnegative and sum to 1 within 1e-12.
ValidationReport validate_finite_system(const FiniteSystemSpec& spec);

class FiniteSystem {
 public:
  /// Validates, then renormalizes every empirical row to sum to exactly 1.
  static FiniteSystem create(FiniteSystemSpec spec);

  int n_states() const noexcept { return d_.n_states; }
  int n_inputs() const noexcept { return d_.n_inputs; }
  int n_dist() const noexcept { return d_.n_dist; }
  int horizon() const noexcept { return d_.horizon; }
  EmpiricalLayout layout() const noexcept { return d_.layout; }

  int next(int x, int u, int w) const noexcept {
    return d_.transition[(static_cast<std::size_t>(x) * d_.n_inputs + u) * d_.n_dist + w];
  }
  std::span<const std::int32_t> next_row(int x, int u) const noexcept {
    return {d_.transition.data() + (static_cast<std::size_t>(x) * d_.n_inputs + u) * d_.n_dist,
            static_cast<std::size_t>(d_.n_dist)};
  }
  double stage_cost(int x, int u) const noexcept {
    return d_.stage_cost[static_cast<std::size_t>(x) * d_.n_inputs + u];
  }
  double terminal_cost(int x) const noexcept { return d_.terminal_cost[x]; }

  std::span<const double> empirical(int k, int x, int u) const noexcept {
    return {d_.empirical.data() + row_offset(k, x, u), static_cast<std::size_t>(d_.n_dist)};
  }
  /// log r(w|x,u) with log 0 = −∞.
  std::span<const double> log_empirical(int k, int x, int u) const noexcept {
    return {log_r_.data() + row_offset(k, x, u), static_cast<std::size_t>(d_.n_dist)};
  }

  const FiniteSystemSpec& spec() const noexcept { return d_; }

  /// Same system with a different horizon. A per-stage empirical table only
  /// allows horizons up to the number of stored stages.
  FiniteSystem with_horizon(int horizon) const;

 private:
  explicit FiniteSystem(FiniteSystemSpec spec);
  std::size_t row_offset(int k, int x, int u) const noexcept;

  FiniteSystemSpec d_;
  std::vector<double> log_r_;
};

/// Output of the finite-space backward recursion.
///
/// Tables are stage-major then state-major. `adversary` holds p*_k(·|x, μ_k(x))
/// when γ_E > 0; otherwise `worst_case` holds the adversary's disturbance index.
struct SolveResult {
  int horizon = 0;
  int n_states = 0;
  int n_inputs = 0;
  int n_dist = 0;
  std::vector<double> values;             // (h+1) × n_states
  std::vector<std::int32_t> policy;       // h × n_states
  std::vector<double> adversary;          // h × n_states × n_dist, or empty
  std::vector<std::int32_t> worst_case;   // h × n_states, or empty
  std::vector<double> full_adversary;     // h × n_states × n_inputs × n_dist (debug), or empty

  double value(int k, int x) const noexcept {
    return values[static_cast<std::size_t>(k) * n_states + x];
  }
  std::span<const double> stage_values(int k) const noexcept {
    return {values.data() + static_cast<std::size_t>(k) * n_states,
            static_cast<std::size_t>(n_states)};
  }
  int action(int k, int x) const noexcept {
    return policy[static_cast<std::size_t>(k) * n_states + x];
  }
  bool has_distribution() const noexcept { return !adversary.empty(); }
  std::span<const double> adversary_row(int k, int x) const noexcept {
    return {adversary.data() + (static_cast<std::size_t>(k) * n_states + x) * n_dist,
            static_cast<std::size_t>(n_dist)};
  }
  int worst_index(int k, int x) const noexcept {
    return worst_case[static_cast<std::size_t>(k) * n_states + x];
  }
};

// --------------------------------------------------------------------------
// Linear-quadratic systems
// --------------------------------------------------------------------------

/// Unvalidated matrices of x⁺ = Ax + Bu + Dw with stage cost xᵀQx + uᵀRu and
/// terminal cost xᵀQ_h x. An empty horizon means infinite.
struct LqSystemSpec {
  Eigen::MatrixXd A, B, D, Q, R, Q_h;
  std::optional<int> horizon;
};

/// Symmetric PSD checks for Q and Q_h, PD for R, all within 1e-10.
ValidationReport validate_lq_system(const LqSystemSpec& spec);

class LqSystem {
 public:
  static LqSystem create(LqSystemSpec spec);

  const Eigen::MatrixXd& A() const noexcept { return d_.A; }
  const Eigen::MatrixXd& B() const noexcept { return d_.B; }
  const Eigen::MatrixXd& D() const noexcept { return d_.D; }
  const Eigen::MatrixXd& Q() const noexcept { return d_.Q; }
  const Eigen::MatrixXd& R() const noexcept { return d_.R; }
  const Eigen::MatrixXd& Q_h() const noexcept { return d_.Q_h; }
  std::optional<int> horizon() const noexcept { return d_.horizon; }
  bool infinite_horizon() const noexcept { return !d_.horizon.has_value(); }

  int n_x() const noexcept { return static_cast<int>(d_.A.rows()); }
  int n_u() const noexcept { return static_cast<int>(d_.B.cols()); }
  int n_w() const noexcept { return static_cast<int>(d_.D.cols()); }

  const LqSystemSpec& spec() const noexcept { return d_; }
  LqSystem with_horizon(std::optional<int> horizon) const;

 private:
  explicit LqSystem(LqSystemSpec spec) : d_(std::move(spec)) {}
  LqSystemSpec d_;
};

/// Finite-horizon solution of the LQ-Gaussian recursion. Stage k uses
/// quantities of stage k+1:
///   p_mats[k] = P_k,        k = 0..h
///   zetas[k]  = ζ_k,        k = 0..h
///   gains[k]  = G(P_{k+1}), k = 0..h-1, with u_k = −gains[k]·x_k
///   m_mats[k] = M_{k+1},    k = 0..h-1
///   adversary_mean_maps[k] maps x_k to the mean of p*_k
///   adversary_covs[k] = γ_E M_{k+1}^{-1}
struct LqSolution {
  std::vector<Eigen::MatrixXd> p_mats;
  std::vector<double> zetas;
  std::vector<Eigen::MatrixXd> gains;
  std::vector<Eigen::MatrixXd> m_mats;
  std::vector<Eigen::MatrixXd> adversary_mean_maps;
  std::vector<Eigen::MatrixXd> adversary_covs;

  int horizon() const noexcept { return static_cast<int>(gains.size()); }
  /// J_k(x) = xᵀP_k x + ζ_k.
  double value(int k, const Eigen::VectorXd& x) const;
};

}  // namespace minsoftmax
