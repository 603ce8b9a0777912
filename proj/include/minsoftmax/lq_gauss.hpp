#pragma once

// Linear-quadratic specialization with a standard Gaussian empirical
// disturbance. The adversary is Gaussian and the value stays quadratic:
//
//   M_{k+1} = γ_H I − 2DᵀP_{k+1}D                 (must be ≻ 0)
//   F_a(P)  = P + 2PD M⁻¹ DᵀP
//   F_c(P)  = Q + AᵀPA − AᵀPB(BᵀPB + R)⁻¹BᵀPA
//   P_k     = F_c(F_a(P_{k+1})),  P_h = Q_h
//   u_k     = −G x_k,  G = (R + BᵀF_aB)⁻¹BᵀF_aA
//
// P_k and G do not depend on γ_E; only the offsets ζ_k and the adversary
// covariance γ_E M⁻¹ do.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "minsoftmax/core.hpp"

namespace minsoftmax {

struct RiccatiConfig {
  double fixed_point_tol = 1e-10;  // spectral-norm change per iteration
  long long max_iters = 100000;
  double psd_tol = 1e-10;

  /// Throws InvalidArgument unless every field is positive.
  void validate() const;
};

/// Receives non-fatal numerical warnings (e.g. asymmetry drift). The default
/// sink discards them. Returns the previous sink.
using DiagnosticsSink = std::function<void(std::string_view)>;
DiagnosticsSink set_diagnostics_sink(DiagnosticsSink sink);

/// γ_H I − 2DᵀPD.
Eigen::MatrixXd m_matrix(const Eigen::MatrixXd& p, const LqSystem& lq, double gamma_h);

/// Throws MBelowCritical (stage unset) carrying min eig(M) when M is not
/// positive definite beyond `psd_tol`.
Eigen::MatrixXd f_a(const Eigen::MatrixXd& p, const LqSystem& lq, double gamma_h,
                    const RiccatiConfig& cfg = {});

Eigen::MatrixXd f_c(const Eigen::MatrixXd& p, const LqSystem& lq);

/// G(P) = (R + BᵀF_a(P)B)⁻¹BᵀF_a(P)A, the feedback applied as u = −Gx.
Eigen::MatrixXd gain(const Eigen::MatrixXd& p_next, const LqSystem& lq, double gamma_h,
                     const RiccatiConfig& cfg = {});

/// ζ_k − ζ_{k+1} for a given M_{k+1}. With γ_E = 0 the det-M term is dropped
/// (its γ_E → 0 limit).
double zeta_increment(const Eigen::MatrixXd& m, const Penalties& pen);

/// Q_k(x, u) = ξᵀF_a(P_{k+1})ξ + ζ_k, ξ = Ax + Bu, given P_{k+1} and ζ_{k+1}.
double closed_form_q(const LqSystem& lq, const Penalties& pen, const Eigen::MatrixXd& p_next,
                     double zeta_next, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     const RiccatiConfig& cfg = {});

/// Throws InvalidArgument for an infinite-horizon system and MBelowCritical
/// at the first stage k (counting back from h) whose M_{k+1} fails.
LqSolution solve_finite_horizon(const LqSystem& lq, const Penalties& pen,
                                const RiccatiConfig& cfg = {});

struct InfiniteHorizonSolution {
  Eigen::MatrixXd p;            // P̄
  Eigen::MatrixXd gain;         // G(P̄)
  Eigen::MatrixXd m;            // M at P̄
  Eigen::MatrixXd adversary_mean_map;
  Eigen::MatrixXd adversary_cov;
  double zeta_per_stage = 0.0;  // ζ increment per stage at the fixed point
  long long iterations = 0;
};

/// Iterates P ← F_c(F_a(P)) from Q_h until the spectral-norm change drops
/// below `fixed_point_tol`. Throws MBelowCritical or NoConvergence.
InfiniteHorizonSolution solve_infinite_horizon(const LqSystem& lq, const Penalties& pen,
                                               const RiccatiConfig& cfg = {});

struct CriticalGamma {
  double gamma_h = 0.0;  // upper end of the final bracket
  double lower = 0.0;    // lower end of the final bracket
  double gamma = 0.0;    // attenuation level sqrt(γ_H / 2)
  int bisections = 0;
};

/// Infimum γ_H for which every M_{k+1} ≻ 0 (finite horizon) or the fixed
/// point exists (empty horizon). Relative bracket width 1e-8.
/// Throws NoFiniteCritical if γ_H = 1e12 is still infeasible.
CriticalGamma critical_gamma_h(const LqSystem& lq, std::optional<int> horizon,
                               const RiccatiConfig& cfg = {});

/// Certainty-equivalent gains L_k with u_k = L_k x_k from the standard
/// Riccati recursion X_k = Q + AᵀXA − AᵀXB(R + BᵀXB)⁻¹BᵀXA, X_h = Q_h.
std::vector<Eigen::MatrixXd> lqr_gain(const LqSystem& lq, int horizon);

struct LqrInfinite {
  Eigen::MatrixXd x;  // DARE solution
  Eigen::MatrixXd l;  // u = Lx
  long long iterations = 0;
};

/// Infinite-horizon LQR by fixed-point iteration from Q_h.
LqrInfinite lqr_gain_infinite(const LqSystem& lq, const RiccatiConfig& cfg = {});

struct AttenuationSpec {
  int horizon = 400;          // closed-loop steps per rollout
  int random_rollouts = 64;   // random ℓ₂ sequences
  int random_support = 40;    // nonzero steps of each random sequence
  std::uint64_t seed = 0;
  /// Worst-case adversary feedback w_k = K x_k; each rollout starts with a unit
  /// kick w_0 = e_i along every disturbance axis, then follows K.
  std::optional<Eigen::MatrixXd> adversary_map;
  /// Replace every disturbance with zero (the ratio is then defined as 0).
  bool zero_disturbance = false;
};

struct AttenuationReport {
  double gamma = 0.0;
  double max_ratio = 0.0;
  double adversary_ratio = 0.0;  // max over the adversary rollouts, 0 if none
  double random_ratio = 0.0;     // max over the random rollouts
  double spectral_radius = 0.0;  // of A − BG
  int rollouts = 0;
  bool pass = false;             // max_ratio ≤ γ² + 1e-6
};

/// Simulates x⁺ = (A − BG)x + Dw from x_0 = 0 and records
/// Σ‖Q^{1/2}x_k‖² / Σ‖w_k‖². Throws UnstableClosedLoop when ρ(A − BG) ≥ 1.
AttenuationReport certify_attenuation(const LqSystem& lq, const Eigen::MatrixXd& gain, double gamma,
                                      const AttenuationSpec& spec = {});

}  // namespace minsoftmax
