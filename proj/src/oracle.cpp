#include "minsoftmax/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace minsoftmax::oracle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_distribution(std::span<const double> p, const char* name) {
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0)
      throw Error(ErrorKind::InvalidArgument, std::string(name) + " has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error(ErrorKind::InvalidArgument, std::string(name) + " does not sum to 1");
}

struct GridSetup {
  int n = 0;
  int steps = 0;                      // grid points per unit mass
  std::vector<double> coeff;          // j_w + γ_H log r_w, −∞ when excluded
  std::vector<double> neg_plogp;      // −(i/steps) log(i/steps)
};

GridSetup setup_grid(std::span<const double> r, std::span<const double> j_vals,
                     const Penalties& pen, double grid_step) {
  if (r.size() != j_vals.size())
    throw Error(ErrorKind::ShapeMismatch, "r and j_vals lengths differ");
  if (r.size() > 4)
    throw Error(ErrorKind::DimensionTooLarge,
                "simplex search supports at most 4 outcomes, got " + std::to_string(r.size()));
  if (r.empty()) throw Error(ErrorKind::InvalidArgument, "empty distribution");
  if (!(grid_step > 0.0 && grid_step <= 0.5))
    throw Error(ErrorKind::InvalidArgument, "grid_step must lie in (0, 0.5]");
  check_distribution(r, "r");

  GridSetup g;
  g.n = static_cast<int>(r.size());
  g.steps = static_cast<int>(std::lround(1.0 / grid_step));
  g.coeff.resize(r.size());
  for (std::size_t w = 0; w < r.size(); ++w) {
    if (pen.gamma_h() == 0.0)
      g.coeff[w] = j_vals[w];
    else
      g.coeff[w] = r[w] > 0.0 ? j_vals[w] + pen.gamma_h() * std::log(r[w]) : kNegInf;
  }
  g.neg_plogp.resize(static_cast<std::size_t>(g.steps) + 1);
  for (int i = 0; i <= g.steps; ++i) {
    const double p = static_cast<double>(i) / g.steps;
    g.neg_plogp[static_cast<std::size_t>(i)] = i == 0 ? 0.0 : -p * std::log(p);
  }
  return g;
}

struct Candidate {
  double value = kNegInf;
  std::array<int, 4> counts{};
  long long evaluated = 0;
};

// Best grid point whose first coordinate is fixed to `i0` grid units.
Candidate scan_slice(const GridSetup& g, const Penalties& pen, int i0) {
  Candidate best;
  std::array<int, 4> c{};
  c[0] = i0;
  const double ge = pen.gamma_e();
  auto eval = [&](const std::array<int, 4>& counts) {
    double v = 0.0;
    for (int w = 0; w < g.n; ++w) {
      const int k = counts[static_cast<std::size_t>(w)];
      if (k == 0) continue;
      if (g.coeff[static_cast<std::size_t>(w)] == kNegInf) return;  // outside support
      v += (static_cast<double>(k) / g.steps) * g.coeff[static_cast<std::size_t>(w)] +
           ge * g.neg_plogp[static_cast<std::size_t>(k)];
    }
    ++best.evaluated;
    if (v > best.value) {
      best.value = v;
      best.counts = counts;
    }
  };
  const int rest = g.steps - i0;
  switch (g.n) {
    case 1:
      if (i0 == g.steps) eval(c);
      break;
    case 2:
      c[1] = rest;
      eval(c);
      break;
    case 3:
      for (int i1 = 0; i1 <= rest; ++i1) {
        c[1] = i1;
        c[2] = rest - i1;
        eval(c);
      }
      break;
    case 4:
      for (int i1 = 0; i1 <= rest; ++i1)
        for (int i2 = 0; i2 <= rest - i1; ++i2) {
          c[1] = i1;
          c[2] = i2;
          c[3] = rest - i1 - i2;
          eval(c);
        }
      break;
  }
  return best;
}

SimplexSearchResult finish(const GridSetup& g, std::span<const double> r,
                           std::span<const double> j_vals, const Penalties& pen,
                           const std::vector<Candidate>& slices) {
  Candidate best;
  long long evaluated = 0;
  for (const auto& s : slices) {  // fixed order keeps ties deterministic
    evaluated += s.evaluated;
    if (s.value > best.value) best = s;
  }
  SimplexSearchResult out;
  out.evaluated = evaluated;
  if (best.value == kNegInf)
    throw Error(ErrorKind::SupportViolation, "no grid point lies in the support of r");
  out.best_p.resize(static_cast<std::size_t>(g.n));
  for (int w = 0; w < g.n; ++w)
    out.best_p[static_cast<std::size_t>(w)] =
        static_cast<double>(best.counts[static_cast<std::size_t>(w)]) / g.steps;
  out.best_value = regularized_objective(out.best_p, r, j_vals, pen);
  return out;
}

}  // namespace

double regularized_objective(std::span<const double> p, std::span<const double> r,
                             std::span<const double> j_vals, const Penalties& pen) {
  if (p.size() != r.size() || p.size() != j_vals.size())
    throw Error(ErrorKind::ShapeMismatch, "p, r and j_vals must have equal length");
  check_distribution(p, "p");
  check_distribution(r, "r");
  double expectation = 0.0, log_likelihood = 0.0, entropy = 0.0;
  for (std::size_t w = 0; w < p.size(); ++w) {
    if (p[w] == 0.0) continue;
    expectation += p[w] * j_vals[w];
    entropy -= p[w] * std::log(p[w]);
    if (pen.gamma_h() > 0.0) {
      if (r[w] == 0.0)
        throw Error(ErrorKind::SupportViolation,
                    "p puts mass on outcome " + std::to_string(w) + " where r is zero");
      log_likelihood += p[w] * std::log(r[w]);
    }
  }
  // −γ_H H_c(p, r) = γ_H Σ p log r
  return expectation + pen.gamma_h() * log_likelihood + pen.gamma_e() * entropy;
}

SimplexSearchResult simplex_search(std::span<const double> r, std::span<const double> j_vals,
                                   const Penalties& pen, double grid_step) {
  const GridSetup g = setup_grid(r, j_vals, pen, grid_step);
  std::vector<Candidate> slices(static_cast<std::size_t>(g.steps) + 1);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i0 = 0; i0 <= g.steps; ++i0) slices[static_cast<std::size_t>(i0)] = scan_slice(g, pen, i0);
  return finish(g, r, j_vals, pen, slices);
}

SimplexSearchResult simplex_search_serial(std::span<const double> r,
                                          std::span<const double> j_vals, const Penalties& pen,
                                          double grid_step) {
  const GridSetup g = setup_grid(r, j_vals, pen, grid_step);
  std::vector<Candidate> slices;
  for (int i0 = 0; i0 <= g.steps; ++i0) slices.push_back(scan_slice(g, pen, i0));
  return finish(g, r, j_vals, pen, slices);
}

namespace {

double scalar_m(const LqSystem& lq, const Eigen::MatrixXd& p_next, const Penalties& pen) {
  if (lq.n_w() != 1)
    throw Error(ErrorKind::InvalidArgument, "quadrature oracle needs a scalar disturbance");
  const Eigen::VectorXd d = lq.D().col(0);
  return pen.gamma_h() - 2.0 * d.dot(p_next * d);
}

}  // namespace

double adversary_sigma(const LqSystem& lq, const Eigen::MatrixXd& p_next, const Penalties& pen) {
  const double m = scalar_m(lq, p_next, pen);
  if (!(m > 0.0))
    throw Error(ErrorKind::DivergentIntegrand,
                "gamma_H - 2 D'PD = " + std::to_string(m) + " is not positive");
  return std::sqrt(pen.gamma_e() / m);
}

double gaussian_quadrature_q(const LqSystem& lq, const Eigen::MatrixXd& p_next, double zeta_next,
                             const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                             const Penalties& pen, double half_width, long long n_points) {
  if (pen.zero_temperature())
    throw Error(ErrorKind::InvalidArgument, "quadrature oracle needs gamma_E > 0");
  if (n_points < 3) throw Error(ErrorKind::InvalidArgument, "need at least 3 quadrature points");
  const double m = scalar_m(lq, p_next, pen);
  if (!(m > 0.0))
    throw Error(ErrorKind::DivergentIntegrand,
                "gamma_H - 2 D'PD = " + std::to_string(m) + " is not positive");

  const Eigen::VectorXd xi = lq.A() * x + lq.B() * u;
  const Eigen::VectorXd d = lq.D().col(0);
  const Eigen::VectorXd pd = p_next * d;
  const double center = 2.0 * xi.dot(pd) / m;
  if (half_width <= 0.0) half_width = 10.0 * std::sqrt(pen.gamma_e() / m);

  const double log_rho = -0.5 * std::log(2.0 * std::numbers::pi);
  const double gh = pen.gamma_h();
  const double ge = pen.gamma_e();
  auto alpha = [&](double w) {
    const Eigen::VectorXd y = xi + d * w;
    return gh * (log_rho - 0.5 * w * w) + y.dot(p_next * y) + zeta_next;
  };

  const double a = center - half_width;
  const double step = 2.0 * half_width / static_cast<double>(n_points - 1);
  std::vector<double> vals(static_cast<std::size_t>(n_points));
  double vmax = -std::numeric_limits<double>::infinity();
  for (long long i = 0; i < n_points; ++i) {
    vals[static_cast<std::size_t>(i)] = alpha(a + static_cast<double>(i) * step);
    vmax = std::max(vmax, vals[static_cast<std::size_t>(i)]);
  }
  double sum = 0.0;
  for (long long i = 0; i < n_points; ++i) {
    const double weight = (i == 0 || i == n_points - 1) ? 0.5 : 1.0;
    sum += weight * std::exp((vals[static_cast<std::size_t>(i)] - vmax) / ge);
  }
  return vmax + ge * std::log(sum * step);
}

}  // namespace minsoftmax::oracle
