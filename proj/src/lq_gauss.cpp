#include "minsoftmax/lq_gauss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

namespace minsoftmax {

namespace {

constexpr double kAsymmetryWarn = 1e-8;
constexpr double kCriticalRelWidth = 1e-8;
constexpr double kCriticalCeiling = 1e12;

std::mutex g_sink_mutex;
DiagnosticsSink g_sink;

void warn(const std::string& message) {
  std::lock_guard lock(g_sink_mutex);
  if (g_sink) g_sink(message);
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& x, const char* what) {
  const double asym = x.rows() == 0 ? 0.0 : (x - x.transpose()).cwiseAbs().maxCoeff();
  if (asym > kAsymmetryWarn) {
    std::ostringstream os;
    os << what << ": asymmetry " << asym << " before symmetrization";
    warn(os.str());
  }
  return 0.5 * (x + x.transpose());
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double spectral_norm_sym(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Cholesky factor of M after the positive-definiteness check; `stage` < 0
// means unknown.
Eigen::LLT<Eigen::MatrixXd> factor_m(const Eigen::MatrixXd& m, double psd_tol, int stage) {
  const double lo = min_eigenvalue(m);
  if (!(lo > psd_tol)) throw MBelowCriticalError(stage, lo);
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw MBelowCriticalError(stage, lo);
  return llt;
}

Eigen::MatrixXd f_a_impl(const Eigen::MatrixXd& p, const LqSystem& lq, double gamma_h,
                         double psd_tol, int stage) {
  const Eigen::MatrixXd m = m_matrix(p, lq, gamma_h);
  if (m.rows() == 0) return p;
  const auto llt = factor_m(m, psd_tol, stage);
  const Eigen::MatrixXd dtp = lq.D().transpose() * p;
  const Eigen::MatrixXd x = p + 2.0 * dtp.transpose() * llt.solve(dtp);
  return symmetrized(x, "F_a");
}

Eigen::MatrixXd gain_from_fa(const Eigen::MatrixXd& fa, const LqSystem& lq) {
  const Eigen::MatrixXd s = lq.R() + lq.B().transpose() * fa * lq.B();
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::NotPositiveDefinite, "R + B'F_a B is not positive definite");
  return llt.solve(lq.B().transpose() * fa * lq.A());
}

// Adversary mean map M⁻¹·2DᵀP(A − BG) and covariance γ_E M⁻¹.
void adversary_terms(const Eigen::MatrixXd& p_next, const Eigen::MatrixXd& m,
                     const Eigen::MatrixXd& g, const LqSystem& lq, const Penalties& pen,
                     Eigen::MatrixXd& mean_map, Eigen::MatrixXd& cov) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  const Eigen::MatrixXd a_cl = lq.A() - lq.B() * g;
  mean_map = llt.solve(2.0 * lq.D().transpose() * p_next * a_cl);
  const Eigen::MatrixXd m_inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  cov = pen.zero_temperature() ? Eigen::MatrixXd::Zero(m.rows(), m.cols())
                               : Eigen::MatrixXd(0.5 * pen.gamma_e() * (m_inv + m_inv.transpose()));
}

// Runs the P recursion only to test whether every M_{k+1} is positive definite.
bool finite_feasible(const LqSystem& lq, double gamma_h, int horizon, double psd_tol) {
  Eigen::MatrixXd p = lq.Q_h();
  try {
    for (int k = horizon - 1; k >= 0; --k) p = f_c(f_a_impl(p, lq, gamma_h, psd_tol, k + 1), lq);
  } catch (const MBelowCriticalError&) {
    return false;
  }
  return true;
}

bool infinite_feasible(const LqSystem& lq, double gamma_h, const RiccatiConfig& cfg) {
  try {
    solve_infinite_horizon(lq, Penalties(gamma_h, 0.0), cfg);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::MBelowCritical || e.kind() == ErrorKind::NoConvergence)
      return false;
    throw;
  }
  return true;
}

double spectral_radius(const Eigen::MatrixXd& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct RolloutSums {
  double state = 0.0;
  double dist = 0.0;
  double ratio() const { return dist > 0.0 ? state / dist : 0.0; }
};

}  // namespace

void RiccatiConfig::validate() const {
  if (!(fixed_point_tol > 0.0) || max_iters <= 0 || !(psd_tol > 0.0))
    throw Error(ErrorKind::InvalidArgument, "Riccati tolerances and max_iters must be positive");
}

DiagnosticsSink set_diagnostics_sink(DiagnosticsSink sink) {
  std::lock_guard lock(g_sink_mutex);
  std::swap(g_sink, sink);
  return sink;
}

Eigen::MatrixXd m_matrix(const Eigen::MatrixXd& p, const LqSystem& lq, double gamma_h) {
  const auto nw = lq.n_w();
  return gamma_h * Eigen::MatrixXd::Identity(nw, nw) - 2.0 * lq.D().transpose() * p * lq.D();
}

Eigen::MatrixXd f_a(const Eigen::MatrixXd& p, const LqSystem& lq, double gamma_h,
                    const RiccatiConfig& cfg) {
  return f_a_impl(p, lq, gamma_h, cfg.psd_tol, -1);
}

Eigen::MatrixXd f_c(const Eigen::MatrixXd& p, const LqSystem& lq) {
  const Eigen::MatrixXd& a = lq.A();
  const Eigen::MatrixXd& b = lq.B();
  const Eigen::MatrixXd s = lq.R() + b.transpose() * p * b;
  const Eigen::MatrixXd bpa = b.transpose() * p * a;
  const Eigen::MatrixXd x = lq.Q() + a.transpose() * p * a - bpa.transpose() * s.llt().solve(bpa);
  return symmetrized(x, "F_c");
}

Eigen::MatrixXd gain(const Eigen::MatrixXd& p_next, const LqSystem& lq, double gamma_h,
                     const RiccatiConfig& cfg) {
  return gain_from_fa(f_a(p_next, lq, gamma_h, cfg), lq);
}

double zeta_increment(const Eigen::MatrixXd& m, const Penalties& pen) {
  const double nw = static_cast<double>(m.rows());
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  if (pen.zero_temperature()) return -pen.gamma_h() * 0.5 * nw * log_2pi;
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double ge = pen.gamma_e();
  return (ge - pen.gamma_h()) * 0.5 * nw * log_2pi - 0.5 * ge * (log_det - nw * std::log(ge));
}

double closed_form_q(const LqSystem& lq, const Penalties& pen, const Eigen::MatrixXd& p_next,
                     double zeta_next, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     const RiccatiConfig& cfg) {
  const Eigen::MatrixXd m = m_matrix(p_next, lq, pen.gamma_h());
  const Eigen::MatrixXd fa = f_a(p_next, lq, pen.gamma_h(), cfg);
  const Eigen::VectorXd xi = lq.A() * x + lq.B() * u;
  return xi.dot(fa * xi) + zeta_increment(m, pen) + zeta_next;
}

LqSolution solve_finite_horizon(const LqSystem& lq, const Penalties& pen,
                                const RiccatiConfig& cfg) {
  cfg.validate();
  if (lq.infinite_horizon())
    throw Error(ErrorKind::InvalidArgument, "solve_finite_horizon needs a finite horizon");
  const int h = *lq.horizon();
  const auto hs = static_cast<std::size_t>(h);

  LqSolution sol;
  sol.p_mats.resize(hs + 1);
  sol.zetas.assign(hs + 1, 0.0);
  sol.gains.resize(hs);
  sol.m_mats.resize(hs);
  sol.adversary_mean_maps.resize(hs);
  sol.adversary_covs.resize(hs);
  sol.p_mats[hs] = lq.Q_h();

  for (int k = h - 1; k >= 0; --k) {
    const auto ks = static_cast<std::size_t>(k);
    const Eigen::MatrixXd& p_next = sol.p_mats[ks + 1];
    const Eigen::MatrixXd fa = f_a_impl(p_next, lq, pen.gamma_h(), cfg.psd_tol, k + 1);
    sol.m_mats[ks] = m_matrix(p_next, lq, pen.gamma_h());
    sol.gains[ks] = gain_from_fa(fa, lq);
    sol.p_mats[ks] = f_c(fa, lq);
    sol.zetas[ks] = zeta_increment(sol.m_mats[ks], pen) + sol.zetas[ks + 1];
    adversary_terms(p_next, sol.m_mats[ks], sol.gains[ks], lq, pen, sol.adversary_mean_maps[ks],
                    sol.adversary_covs[ks]);
  }
  return sol;
}

InfiniteHorizonSolution solve_infinite_horizon(const LqSystem& lq, const Penalties& pen,
                                               const RiccatiConfig& cfg) {
  cfg.validate();
  Eigen::MatrixXd p = lq.Q_h();
  for (long long it = 1; it <= cfg.max_iters; ++it) {
    Eigen::MatrixXd next = f_c(f_a_impl(p, lq, pen.gamma_h(), cfg.psd_tol, -1), lq);
    const double change = spectral_norm_sym(next - p);
    p = std::move(next);
    if (!std::isfinite(change))
      throw Error(ErrorKind::NoConvergence, "Riccati iteration produced non-finite values");
    if (change < cfg.fixed_point_tol) {
      InfiniteHorizonSolution out;
      out.p = p;
      out.m = m_matrix(p, lq, pen.gamma_h());
      const Eigen::MatrixXd fa = f_a_impl(p, lq, pen.gamma_h(), cfg.psd_tol, -1);
      out.gain = gain_from_fa(fa, lq);
      adversary_terms(p, out.m, out.gain, lq, pen, out.adversary_mean_map, out.adversary_cov);
      out.zeta_per_stage = zeta_increment(out.m, pen);
      out.iterations = it;
      return out;
    }
  }
  throw Error(ErrorKind::NoConvergence,
              "Riccati iteration did not converge in " + std::to_string(cfg.max_iters) +
                  " iterations");
}

CriticalGamma critical_gamma_h(const LqSystem& lq, std::optional<int> horizon,
                               const RiccatiConfig& cfg) {
  cfg.validate();
  if (horizon && *horizon <= 0) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
  CriticalGamma out;
  if (lq.D().rows() == 0 || lq.D().cols() == 0 || lq.D().cwiseAbs().maxCoeff() == 0.0) return out;

  auto feasible = [&](double gh) {
    return horizon ? finite_feasible(lq, gh, *horizon, cfg.psd_tol)
                   : infinite_feasible(lq, gh, cfg);
  };

  const Eigen::MatrixXd dqd = lq.D().transpose() * lq.Q_h() * lq.D();
  double lo = 0.0;
  double hi = 2.0 * (2.0 * spectral_norm_sym(0.5 * (dqd + dqd.transpose())) + 1.0);
  while (!feasible(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > kCriticalCeiling) {
      if (feasible(kCriticalCeiling)) {
        hi = kCriticalCeiling;
        break;
      }
      throw Error(ErrorKind::NoFiniteCritical, "no feasible gamma_H up to 1e12");
    }
  }
  int n = 0;
  while (hi - lo > kCriticalRelWidth * hi) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      hi = mid;
    else
      lo = mid;
    ++n;
  }
  out.gamma_h = hi;
  out.lower = lo;
  out.gamma = std::sqrt(hi / 2.0);
  out.bisections = n;
  return out;
}

std::vector<Eigen::MatrixXd> lqr_gain(const LqSystem& lq, int horizon) {
  if (horizon <= 0) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
  std::vector<Eigen::MatrixXd> gains(static_cast<std::size_t>(horizon));
  Eigen::MatrixXd x = lq.Q_h();
  for (int k = horizon - 1; k >= 0; --k) {
    const Eigen::MatrixXd s = lq.R() + lq.B().transpose() * x * lq.B();
    gains[static_cast<std::size_t>(k)] = -s.llt().solve(lq.B().transpose() * x * lq.A());
    x = f_c(x, lq);
  }
  return gains;
}

LqrInfinite lqr_gain_infinite(const LqSystem& lq, const RiccatiConfig& cfg) {
  cfg.validate();
  Eigen::MatrixXd x = lq.Q_h();
  for (long long it = 1; it <= cfg.max_iters; ++it) {
    Eigen::MatrixXd next = f_c(x, lq);
    const double change = spectral_norm_sym(next - x);
    x = std::move(next);
    if (!std::isfinite(change))
      throw Error(ErrorKind::NoConvergence, "LQR iteration produced non-finite values");
    if (change < cfg.fixed_point_tol) {
      const Eigen::MatrixXd s = lq.R() + lq.B().transpose() * x * lq.B();
      return {x, -s.llt().solve(lq.B().transpose() * x * lq.A()), it};
    }
  }
  throw Error(ErrorKind::NoConvergence, "LQR iteration did not converge");
}

AttenuationReport certify_attenuation(const LqSystem& lq, const Eigen::MatrixXd& gain, double gamma,
                                      const AttenuationSpec& spec) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw Error(ErrorKind::InvalidArgument, "gamma must be positive");
  if (gain.rows() != lq.n_u() || gain.cols() != lq.n_x())
    throw Error(ErrorKind::ShapeMismatch, "gain must be n_u x n_x");
  if (spec.horizon <= 0 || spec.random_rollouts < 0 || spec.random_support <= 0)
    throw Error(ErrorKind::InvalidArgument, "invalid attenuation rollout settings");
  const int nw = lq.n_w();
  if (spec.adversary_map && (spec.adversary_map->rows() != nw || spec.adversary_map->cols() != lq.n_x()))
    throw Error(ErrorKind::ShapeMismatch, "adversary map must be n_w x n_x");

  const Eigen::MatrixXd a_cl = lq.A() - lq.B() * gain;
  AttenuationReport rep;
  rep.gamma = gamma;
  rep.spectral_radius = spectral_radius(a_cl);
  if (!(rep.spectral_radius < 1.0))
    throw Error(ErrorKind::UnstableClosedLoop,
                "closed loop A - BG has spectral radius " + std::to_string(rep.spectral_radius));

  const int n_adv = spec.adversary_map && !spec.zero_disturbance ? nw : 0;
  const int n_rand = spec.zero_disturbance ? 1 : spec.random_rollouts;
  const int total = n_adv + n_rand;
  std::vector<double> ratios(static_cast<std::size_t>(total), 0.0);

#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < total; ++r) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(lq.n_x());
    Eigen::VectorXd w(nw);
    RolloutSums sums;
    if (spec.zero_disturbance) {
      ratios[static_cast<std::size_t>(r)] = 0.0;
      continue;
    }
    if (r < n_adv) {
      for (int k = 0; k < spec.horizon; ++k) {
        if (k == 0)
          w = Eigen::VectorXd::Unit(nw, r);
        else
          w = *spec.adversary_map * x;
        x = a_cl * x + lq.D() * w;
        sums.dist += w.squaredNorm();
        sums.state += x.dot(lq.Q() * x);
      }
    } else {
      std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                        static_cast<std::uint32_t>(spec.seed >> 32),
                        static_cast<std::uint32_t>(r - n_adv)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal;
      for (int k = 0; k < spec.horizon; ++k) {
        if (k < spec.random_support)
          for (int i = 0; i < nw; ++i) w[i] = normal(rng);
        else
          w.setZero();
        x = a_cl * x + lq.D() * w;
        sums.dist += w.squaredNorm();
        sums.state += x.dot(lq.Q() * x);
      }
    }
    ratios[static_cast<std::size_t>(r)] = sums.ratio();
  }

  for (int r = 0; r < total; ++r) {
    const double v = ratios[static_cast<std::size_t>(r)];
    if (r < n_adv)
      rep.adversary_ratio = std::max(rep.adversary_ratio, v);
    else
      rep.random_ratio = std::max(rep.random_ratio, v);
  }
  rep.max_ratio = std::max(rep.adversary_ratio, rep.random_ratio);
  rep.rollouts = total;
  rep.pass = rep.max_ratio <= gamma * gamma + 1e-6;
  return rep;
}

}  // namespace minsoftmax
