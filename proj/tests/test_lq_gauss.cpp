#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "generators.hpp"
#include "minsoftmax/lq_gauss.hpp"

using namespace minsoftmax;
using Eigen::MatrixXd;

namespace {

MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

const LqSystem kBenchmark = fixtures::scalar_lq(1, 1, 1, 1, 1, 1, 1);

}  // namespace

// Hand chain on the scalar benchmark A = B = D = Q = R = Q_h = 1, h = 1, γ_H = 4:
//   P_1 = Q_h = 1
//   M_1 = 4 − 2·1 = 2
//   F_a(1) = 1 + 2·1·(1/2)·1 = 2
//   P_0 = F_c(2) = 1 + 2 − 2²/(2 + 1) = 5/3
//   G = 2/(1 + 2) = 2/3
//   ζ_0 (γ_E = 1) = (1 − 4)·½·log 2π − ½·(log 2 − log 1)
TEST(LqChain, ScalarBenchmark) {
  const auto s = solve_finite_horizon(kBenchmark, Penalties(4, 1));
  ASSERT_EQ(s.horizon(), 1);
  EXPECT_EQ(s.p_mats[1](0, 0), 1.0);
  EXPECT_NEAR(s.m_mats[0](0, 0), 2.0, 1e-12);
  EXPECT_NEAR(s.p_mats[0](0, 0), 5.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.gains[0](0, 0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.adversary_covs[0](0, 0), 0.5, 1e-12);
  const double zeta0 = -3.0 * 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(2.0);
  EXPECT_NEAR(s.zetas[0], zeta0, 1e-12);
  EXPECT_NEAR(s.zetas[0], -3.1033891899, 1e-10);
  EXPECT_EQ(s.zetas[1], 0.0);
  // Adversary mean 2·D·P·(A − BG)/M = 2·(1/3)/2.
  EXPECT_NEAR(s.adversary_mean_maps[0](0, 0), 1.0 / 3.0, 1e-12);
}

TEST(FA, ScalarAndLimits) {
  EXPECT_NEAR(f_a(scalar(1), kBenchmark, 4)(0, 0), 2.0, 1e-15);
  const auto no_d = fixtures::scalar_lq(1, 1, 0, 1, 1, 1, 1);
  EXPECT_EQ(f_a(scalar(1.7), no_d, 3)(0, 0), 1.7);
  EXPECT_NEAR(f_a(scalar(1), kBenchmark, 1e12)(0, 0), 1.0 + 2e-12, 1e-15);
}

TEST(FA, BelowCriticalThrows) {
  try {
    f_a(scalar(1), kBenchmark, 2.0);
    FAIL();
  } catch (const MBelowCriticalError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MBelowCritical);
    EXPECT_FALSE(e.context().stage.has_value());
    EXPECT_NEAR(e.min_eigenvalue(), 0.0, 1e-15);
  }
}

TEST(FC, Examples) {
  EXPECT_NEAR(f_c(scalar(1.5), kBenchmark)(0, 0), 1.6, 1e-15);
  const auto no_b = LqSystem::create({scalar(2), scalar(0), scalar(1), scalar(1), scalar(1), scalar(1), 1});
  EXPECT_EQ(f_c(scalar(0.5), no_b)(0, 0), 1.0 + 4.0 * 0.5);
  EXPECT_EQ(f_c(scalar(0), kBenchmark)(0, 0), 1.0);
}

TEST(FAProperty, MatchesDirectCompletionOfSquares) {
  // sup_w −(γ_H/2)|w|² + (ξ + Dw)ᵀP(ξ + Dw) is attained at w* = M⁻¹2DᵀPξ
  // and equals ξᵀF_a(P)ξ.
  fixtures::Gen gen(41);
  for (int trial = 0; trial < 50; ++trial) {
    const int nx = 1 + gen.index(4), nw = 1 + gen.index(3);
    const auto lq = gen.lq(nx, 1, nw, 1);
    const MatrixXd p = gen.spd(nx);
    const double gh = 2.0 * (lq.D().transpose() * p * lq.D()).eigenvalues().real().maxCoeff() + gen.uniform(0.1, 3);
    const MatrixXd m = m_matrix(p, lq, gh);
    const Eigen::VectorXd xi = gen.matrix(nx, 1);
    const Eigen::VectorXd w = m.llt().solve(2.0 * lq.D().transpose() * p * xi);
    const Eigen::VectorXd y = xi + lq.D() * w;
    const double sup = -0.5 * gh * w.squaredNorm() + y.dot(p * y);
    EXPECT_NEAR(xi.dot(f_a(p, lq, gh) * xi), sup, 1e-9 * (1.0 + std::abs(sup)));
  }
}

TEST(FiniteHorizon, BelowCriticalReportsStage) {
  try {
    solve_finite_horizon(kBenchmark, Penalties(1.5, 1));
    FAIL();
  } catch (const MBelowCriticalError& e) {
    EXPECT_EQ(e.stage(), 1);
    EXPECT_EQ(e.context().stage, 1);
    EXPECT_NE(std::string(e.what()).find("P_1"), std::string::npos);
  }
  // Just above the one-step threshold the later, larger P_k fail first
  // (counting back from h).
  try {
    solve_finite_horizon(kBenchmark.with_horizon(5), Penalties(2.5, 1));
    FAIL();
  } catch (const MBelowCriticalError& e) {
    EXPECT_GE(e.stage(), 1);
    EXPECT_LT(e.stage(), 5);
  }
}

TEST(FiniteHorizon, RejectsInfiniteHorizon) {
  EXPECT_THROW(solve_finite_horizon(kBenchmark.with_horizon(std::nullopt), Penalties(4, 1)), Error);
}

TEST(FiniteHorizonProperty, GainsDoNotDependOnTemperature) {
  fixtures::Gen gen(42);
  for (int trial = 0; trial < 30; ++trial) {
    const auto lq = gen.lq(1 + gen.index(4), 1 + gen.index(3), 1 + gen.index(3), 1 + gen.index(8));
    const double gh = 2.0 * critical_gamma_h(lq, lq.horizon()).gamma_h;
    const auto base = solve_finite_horizon(lq, Penalties(gh, 0));
    for (double ge : {1.0, 10.0, 100.0}) {
      const auto s = solve_finite_horizon(lq, Penalties(gh, ge));
      for (std::size_t k = 0; k < s.gains.size(); ++k) {
        EXPECT_LE((s.gains[k] - base.gains[k]).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((s.p_mats[k] - base.p_mats[k]).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(FiniteHorizonProperty, StructuralInvariants) {
  fixtures::Gen gen(43);
  for (int trial = 0; trial < 30; ++trial) {
    const int nx = 1 + gen.index(4);
    const auto lq = gen.lq(nx, 1 + gen.index(3), 1 + gen.index(3), 1 + gen.index(8));
    const double gh = 1.5 * critical_gamma_h(lq, lq.horizon()).gamma_h + 0.1;
    const auto s1 = solve_finite_horizon(lq, Penalties(gh, 1));
    const auto s2 = solve_finite_horizon(lq, Penalties(gh, 2));
    const Eigen::VectorXd origin = Eigen::VectorXd::Zero(nx);
    for (std::size_t k = 0; k < s1.p_mats.size(); ++k) {
      const MatrixXd& p = s1.p_mats[k];
      EXPECT_LE((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(p).eigenvalues().minCoeff(), -1e-10);
      EXPECT_EQ(s1.value(static_cast<int>(k), origin), s1.zetas[k]);
    }
    for (std::size_t k = 0; k < s1.m_mats.size(); ++k) {
      EXPECT_GT(Eigen::SelfAdjointEigenSolver<MatrixXd>(s1.m_mats[k]).eigenvalues().minCoeff(), 0.0);
      EXPECT_TRUE((s1.adversary_covs[k] - s1.m_mats[k].inverse()).cwiseAbs().maxCoeff() < 1e-12);
      EXPECT_LE((s2.adversary_covs[k] - 2.0 * s1.adversary_covs[k]).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_TRUE((s1.adversary_mean_maps[k] * origin).isZero());
    }
  }
}

TEST(InfiniteHorizon, FixedPointResidual) {
  const auto lq = kBenchmark.with_horizon(std::nullopt);
  const auto s = solve_infinite_horizon(lq, Penalties(8, 1));
  const MatrixXd residual = f_c(f_a(s.p, lq, 8), lq) - s.p;
  EXPECT_LT(residual.norm(), 1e-10);
  EXPECT_NEAR(s.adversary_cov(0, 0), 1.0 / s.m(0, 0), 1e-15);
}

TEST(InfiniteHorizon, LargeLikelihoodFactorRecoversLqr) {
  fixtures::Gen gen(44);
  for (int trial = 0; trial < 20; ++trial) {
    const auto lq = gen.lq(1 + gen.index(4), 1 + gen.index(3), 1 + gen.index(3), std::nullopt);
    const auto s = solve_infinite_horizon(lq, Penalties(1e9, 0));
    const auto lqr = lqr_gain_infinite(lq);
    EXPECT_LE((s.gain + lqr.l).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(InfiniteHorizon, WorstCaseAmplificationBlowsUpNearCritical) {
  // P̄ itself stays bounded at the critical level of this benchmark; the
  // adversary's gain M⁻¹ and with it F_a(P̄) are what diverge.
  const auto lq = fixtures::scalar_lq(1, 1, 1, 1, 0.1, 1, std::nullopt);
  const double crit = critical_gamma_h(lq, std::nullopt).gamma_h;
  const auto near = solve_infinite_horizon(lq, Penalties(1.01 * crit, 0));
  const auto far = solve_infinite_horizon(lq, Penalties(2.0 * crit, 0));
  EXPECT_GT(near.m.inverse().norm(), 10.0 * far.m.inverse().norm());
  EXPECT_GT(f_a(near.p, lq, 1.01 * crit).norm(), 2.0 * f_a(far.p, lq, 2.0 * crit).norm());
}

TEST(InfiniteHorizon, BelowCriticalFails) {
  const auto lq = kBenchmark.with_horizon(std::nullopt);
  EXPECT_THROW(solve_infinite_horizon(lq, Penalties(1.0, 0)), Error);
}

TEST(CriticalGamma, OneStageBenchmarkIsTwo) {
  const auto c = critical_gamma_h(kBenchmark, 1);
  EXPECT_LE(c.lower, 2.0);
  EXPECT_GE(c.gamma_h, 2.0);
  EXPECT_LE(c.gamma_h - c.lower, 1e-6);
  EXPECT_NEAR(c.gamma, 1.0, 1e-6);
}

TEST(CriticalGamma, NoDisturbanceChannel) {
  EXPECT_EQ(critical_gamma_h(fixtures::scalar_lq(1, 1, 0, 1, 1, 1, 3), 3).gamma_h, 0.0);
}

TEST(CriticalGamma, MonotoneInDisturbanceScale) {
  double prev = 0.0;
  for (double d : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const auto lq = fixtures::scalar_lq(1, 1, d, 1, 1, 1, 4);
    const double c = critical_gamma_h(lq, 4).gamma_h;
    EXPECT_GT(c, prev);
    prev = c;
  }
}

TEST(CriticalGamma, LongerHorizonNeedsAtLeastAsMuch) {
  const double one = critical_gamma_h(kBenchmark, 1).gamma_h;
  const double five = critical_gamma_h(kBenchmark.with_horizon(5), 5).gamma_h;
  const double inf = critical_gamma_h(kBenchmark.with_horizon(std::nullopt), std::nullopt).gamma_h;
  EXPECT_GE(five, one);
  EXPECT_GE(inf, five - 1e-6);
  EXPECT_NO_THROW(solve_finite_horizon(kBenchmark.with_horizon(5), Penalties(five * (1 + 1e-7), 0)));
}

TEST(Lqr, HandExample) {
  const auto l = lqr_gain(kBenchmark, 1);
  ASSERT_EQ(l.size(), 1u);
  EXPECT_NEAR(l[0](0, 0), -0.5, 1e-15);
  const auto free_end = fixtures::scalar_lq(1, 1, 1, 1, 1, 0, 1);
  EXPECT_EQ(lqr_gain(free_end, 1)[0](0, 0), 0.0);
}

TEST(Lqr, InfiniteSolvesDare) {
  const auto lq = kBenchmark.with_horizon(std::nullopt);
  const auto s = lqr_gain_infinite(lq);
  const double x = s.x(0, 0);
  EXPECT_LT(std::abs(1.0 + x - x * x / (x + 1.0) - x), 1e-10);
  EXPECT_NEAR(x, (1.0 + std::sqrt(5.0)) / 2.0, 1e-9);
}

TEST(Attenuation, PassAboveCriticalAndFailBelow) {
  const auto lq = fixtures::scalar_lq(1, 1, 1, 1, 0.1, 1, std::nullopt);
  const double gh = 1.5 * critical_gamma_h(lq, std::nullopt).gamma_h;
  const auto s = solve_infinite_horizon(lq, Penalties(gh, 0));
  AttenuationSpec spec;
  spec.seed = 5;
  spec.adversary_map = s.adversary_mean_map;
  const auto pass = certify_attenuation(lq, s.gain, std::sqrt(gh / 2.0), spec);
  EXPECT_TRUE(pass.pass) << pass.max_ratio;
  EXPECT_LT(pass.spectral_radius, 1.0);
  EXPECT_EQ(pass.rollouts, 1 + spec.random_rollouts);
  const auto fail = certify_attenuation(lq, s.gain, std::sqrt(0.5 * gh / 2.0), spec);
  EXPECT_FALSE(fail.pass) << fail.max_ratio;
  EXPECT_GT(fail.adversary_ratio, 0.5 * gh / 2.0);
}

TEST(Attenuation, ZeroDisturbanceConvention) {
  const auto lq = fixtures::scalar_lq(1, 1, 1, 1, 0.1, 1, std::nullopt);
  AttenuationSpec spec;
  spec.zero_disturbance = true;
  const auto r = certify_attenuation(lq, scalar(0.9), 0.1, spec);
  EXPECT_EQ(r.max_ratio, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Attenuation, UnstableLoopIsRejected) {
  const auto lq = fixtures::scalar_lq(1, 1, 1, 1, 0.1, 1, std::nullopt);
  try {
    certify_attenuation(lq, scalar(-0.5), 10.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnstableClosedLoop);
  }
}

TEST(Diagnostics, SinkReceivesAsymmetryWarnings) {
  std::vector<std::string> messages;
  auto previous = set_diagnostics_sink([&](std::string_view m) { messages.emplace_back(m); });
  MatrixXd p = MatrixXd::Identity(2, 2);
  p(0, 1) = 1e-3;
  const auto lq = LqSystem::create({MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                                    MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), 1});
  const MatrixXd fc = f_c(p, lq);
  set_diagnostics_sink(std::move(previous));
  EXPECT_FALSE(messages.empty());
  EXPECT_EQ(fc, fc.transpose());
}

TEST(RiccatiConfig, RejectsNonPositive) {
  RiccatiConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.fixed_point_tol = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}
