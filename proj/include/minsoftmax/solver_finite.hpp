#pragma once

// Backward minsoftmax value iteration on finite spaces.
//
// At every stage k and state x the adversary's inner problem has a closed-form
// softmax solution, so each stage reduces to
//
//   α_w    = γ_H log r(w|x,u) + J_{k+1}(f(x,u,w))
//   Q(u)   = γ_E log Σ_w exp(α_w / γ_E)   (γ_E > 0)
//          = max_w α_w                    (γ_E = 0)
//   μ_k(x) = argmin_u g(x,u) + Q(u)
//
// Ties are broken towards the smallest index everywhere. Log-sum-exp is always
// evaluated with a max shift.

#include <span>
#include <vector>

#include "minsoftmax/core.hpp"

namespace minsoftmax {

/// α values for one (k, x, u). Entries may be −∞ where r(w|x,u) = 0 and γ_H > 0.
struct AlphaRow {
  std::vector<double> alphas;

  operator std::span<const double>() const noexcept { return alphas; }
};

/// Fills `out` (length n_dist) with α_w. With γ_H = 0 the likelihood term is
/// taken as 0 for every w, so zero-probability disturbances stay eligible.
void fill_alphas(const FiniteSystem& sys, const Penalties& pen,
                 std::span<const double> next_values, int k, int x, int u,
                 std::span<double> out);

AlphaRow make_alpha_row(const FiniteSystem& sys, const Penalties& pen,
                        std::span<const double> next_values, int k, int x, int u);

/// Soft maximum γ_E·logsumexp(α/γ_E), or max α when γ_E = 0.
/// Throws AllAlphasInfinite if no α is finite.
double q_value(std::span<const double> alphas, const Penalties& pen);

/// p*_w ∝ exp((α_w − max α)/γ_E). Throws TemperatureZero when γ_E = 0.
std::vector<double> softmax_adversary(std::span<const double> alphas, const Penalties& pen);
void softmax_adversary(std::span<const double> alphas, const Penalties& pen,
                       std::span<double> out);

/// Smallest index attaining max α.
int worst_case_index(std::span<const double> alphas);

struct SolveOptions {
  /// Also store the adversary at every input, not only at μ_k(x).
  bool full_adversary = false;
};

/// Data-parallel over states within each stage (OpenMP).
SolveResult solve_backward(const FiniteSystem& sys, const Penalties& pen,
                           const SolveOptions& options = {});

/// Single-threaded reference implementation of `solve_backward`. Produces
/// bitwise-identical tables; kept for testing and benchmarking.
SolveResult solve_backward_serial(const FiniteSystem& sys, const Penalties& pen,
                                  const SolveOptions& options = {});

/// Q(u) for every input at (k, x) given J_{k+1}.
std::vector<double> q_values(const FiniteSystem& sys, const Penalties& pen,
                             std::span<const double> next_values, int k, int x);

/// Continuation cost E_{p*}[J_{k+1}(f(x,u,w))] as judged by the optimal
/// adversary (the worst-case disturbance when γ_E = 0). Unlike Q it excludes
/// the likelihood and entropy penalties.
double judged_cost(const FiniteSystem& sys, const Penalties& pen,
                   std::span<const double> next_values, int k, int x, int u);

// --------------------------------------------------------------------------
// Limit regimes, implemented directly as ground-truth comparators.
// --------------------------------------------------------------------------

enum class RegimeKind { Minimax, MlCe, RiskSensitive, Sdp };

struct LimitRegime {
  RegimeKind kind = RegimeKind::Minimax;
  double gamma = 0.0;  // risk sensitivity, RiskSensitive only

  static LimitRegime minimax() { return {RegimeKind::Minimax, 0.0}; }
  static LimitRegime ml_ce() { return {RegimeKind::MlCe, 0.0}; }
  static LimitRegime risk_sensitive(double gamma) { return {RegimeKind::RiskSensitive, gamma}; }
  static LimitRegime sdp() { return {RegimeKind::Sdp, 0.0}; }
};

/// minimax:        min_u g + max_w J_{k+1}   (all w, regardless of r)
/// ml_ce:          min_u g + J_{k+1}(f(x,u,argmax_w r))
/// risk_sensitive: min_u g + (1/γ) log E_r exp(γ J_{k+1})
/// sdp:            min_u g + E_r J_{k+1}
SolveResult solve_limit(const FiniteSystem& sys, const LimitRegime& regime);

}  // namespace minsoftmax
