#pragma once

// Brute-force verifiers for the closed-form adversary results. These are
// deliberately independent of the solver code paths they check.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "minsoftmax/core.hpp"

namespace minsoftmax::oracle {

/// Σ_w p_w j_w − γ_H H_c(p, r) + γ_E H(p), with 0·log 0 = 0.
/// Throws SupportViolation if p_w > 0 where r_w = 0 and γ_H > 0.
double regularized_objective(std::span<const double> p, std::span<const double> r,
                             std::span<const double> j_vals, const Penalties& pen);

struct SimplexSearchResult {
  std::vector<double> best_p;
  double best_value = 0.0;
  long long evaluated = 0;
};

/// Maximizes `regularized_objective` over a uniform grid on the simplex
/// (boundary included) with spacing `grid_step`. Lengths up to 4.
SimplexSearchResult simplex_search(std::span<const double> r, std::span<const double> j_vals,
                                   const Penalties& pen, double grid_step);

/// Single-threaded reference for `simplex_search`; identical result.
SimplexSearchResult simplex_search_serial(std::span<const double> r,
                                          std::span<const double> j_vals, const Penalties& pen,
                                          double grid_step);

/// Standard deviation of the scalar adversarial Gaussian, sqrt(γ_E / M).
double adversary_sigma(const LqSystem& lq, const Eigen::MatrixXd& p_next, const Penalties& pen);

/// γ_E log ∫ exp(α(w)/γ_E) dw for a scalar disturbance by composite trapezoid,
/// with α(w) = γ_H log N(w; 0, 1) + (ξ + Dw)ᵀP(ξ + Dw) + ζ and ξ = Ax + Bu.
///
/// The window is [μ − half_width, μ + half_width] around the adversarial mean
/// μ; `half_width <= 0` selects 10 adversary standard deviations.
/// Throws DivergentIntegrand when γ_H − 2DᵀPD ≤ 0.
double gaussian_quadrature_q(const LqSystem& lq, const Eigen::MatrixXd& p_next, double zeta_next,
                             const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                             const Penalties& pen, double half_width = 0.0,
                             long long n_points = 100000);

}  // namespace minsoftmax::oracle
