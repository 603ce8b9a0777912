#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "generators.hpp"
#include "minsoftmax/lq_gauss.hpp"
#include "minsoftmax/oracle.hpp"
#include "minsoftmax/solver_finite.hpp"

using namespace minsoftmax;

namespace {

// α_w = γ_H log r_w + j_w, the closed-form side of the oracle comparison.
std::vector<double> alphas_of(const std::vector<double>& r, const std::vector<double>& j, const Penalties& pen) {
  std::vector<double> a(r.size());
  for (std::size_t w = 0; w < r.size(); ++w)
    a[w] = pen.gamma_h() == 0.0 ? j[w]
           : r[w] > 0.0         ? pen.gamma_h() * std::log(r[w]) + j[w]
                                : -std::numeric_limits<double>::infinity();
  return a;
}

}  // namespace

TEST(RegularizedObjective, KlVanishesAtEmpirical) {
  const std::vector<double> r{0.2, 0.3, 0.5}, j{1.0, -2.0, 4.0};
  const double expected = 0.2 * 1.0 + 0.3 * -2.0 + 0.5 * 4.0;
  // With γ_E = γ_H = γ the penalties collapse to −γ KL(p‖r).
  EXPECT_NEAR(oracle::regularized_objective(r, r, j, Penalties(2, 2)), expected, 1e-14);
}

TEST(RegularizedObjective, HandExamples) {
  const std::vector<double> r{0.5, 0.5}, j{0.0, 1.0};
  EXPECT_NEAR(oracle::regularized_objective(std::vector<double>{1, 0}, r, j, Penalties(1, 0)), std::log(0.5), 1e-15);
  EXPECT_NEAR(oracle::regularized_objective(std::vector<double>{0.5, 0.5}, r, j, Penalties(0, 1)),
              0.5 + std::log(2.0), 1e-15);
  EXPECT_NEAR(oracle::regularized_objective(std::vector<double>{0.5, 0.5}, r, j, Penalties(0, 1)), 1.193147, 1e-6);
}

TEST(RegularizedObjective, SupportViolation) {
  const std::vector<double> r{1.0, 0.0}, j{0.0, 1.0}, p{0.5, 0.5};
  try {
    oracle::regularized_objective(p, r, j, Penalties(1, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SupportViolation);
  }
  EXPECT_NO_THROW(oracle::regularized_objective(p, r, j, Penalties(0, 1)));
}

TEST(SimplexSearch, TwoPointExample) {
  const std::vector<double> r{0.5, 0.5}, j{0.0, 1.0};
  const auto res = oracle::simplex_search(r, j, Penalties(1, 1), 0.001);
  EXPECT_NEAR(res.best_value, 0.620115, 1e-6);
  EXPECT_NEAR(res.best_p[0], 0.269, 1e-3);
  EXPECT_NEAR(res.best_p[1], 0.731, 1e-3);
}

TEST(SimplexSearch, ZeroPenaltiesPickVertex) {
  const std::vector<double> r{0.2, 0.3, 0.5}, j{1.0, 3.0, 2.0};
  const auto res = oracle::simplex_search(r, j, Penalties(0, 0), 0.01);
  EXPECT_EQ(res.best_p, (std::vector<double>{0.0, 1.0, 0.0}));
  EXPECT_EQ(res.best_value, 3.0);
}

TEST(SimplexSearch, MaxEntropy) {
  const std::vector<double> r{0.9, 0.1}, j{0.0, 0.0};
  const auto res = oracle::simplex_search(r, j, Penalties(0, 1), 0.001);
  EXPECT_NEAR(res.best_p[0], 0.5, 1e-12);
  EXPECT_NEAR(res.best_value, std::log(2.0), 1e-12);
}

TEST(SimplexSearch, RejectsTooManyDisturbances) {
  const std::vector<double> r(5, 0.2), j(5, 0.0);
  try {
    oracle::simplex_search(r, j, Penalties(1, 1), 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionTooLarge);
  }
}

TEST(SimplexSearchProperty, BoundedByClosedForm) {
  fixtures::Gen gen(31);
  const double grid[] = {0.5, 1.0, 5.0};
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + gen.index(2);
    const auto r = gen.simplex(n);
    const auto j = gen.reals(n, -10, 10);
    const Penalties pen(grid[gen.index(3)], grid[gen.index(3)]);
    const double q = q_value(alphas_of(r, j, pen), pen);
    const auto res = oracle::simplex_search(r, j, pen, 0.001);
    EXPECT_LE(res.best_value, q + 1e-9);
    EXPECT_GE(res.best_value, q - 1e-3);
    // The softmax adversary itself attains the closed form.
    const auto p = softmax_adversary(alphas_of(r, j, pen), pen);
    EXPECT_NEAR(oracle::regularized_objective(p, r, j, pen), q, 1e-10);
  }
}

TEST(SimplexSearchProperty, ZeroTemperatureAndZeroProbabilities) {
  fixtures::Gen gen(32);
  for (int trial = 0; trial < 30; ++trial) {
    auto r = gen.simplex(3);
    r[static_cast<std::size_t>(gen.index(3))] = 0.0;
    double s = r[0] + r[1] + r[2];
    for (auto& v : r) v /= s;
    const auto j = gen.reals(3, -10, 10);
    const Penalties pen(gen.uniform(0.1, 5), 0.0);
    const double q = q_value(alphas_of(r, j, pen), pen);
    const auto res = oracle::simplex_search(r, j, pen, 0.01);
    EXPECT_NEAR(res.best_value, q, 1e-9);
  }
}

TEST(SimplexSearchProperty, ParallelMatchesSerial) {
  fixtures::Gen gen(33);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + gen.index(3);
    const auto r = gen.simplex(n);
    const auto j = gen.reals(n, -10, 10);
    const Penalties pen(gen.uniform(0, 3), gen.uniform(0, 3));
    const double step = n == 4 ? 0.02 : 0.005;
    const auto a = oracle::simplex_search(r, j, pen, step);
    const auto b = oracle::simplex_search_serial(r, j, pen, step);
    EXPECT_EQ(a.best_value, b.best_value);
    EXPECT_EQ(a.best_p, b.best_p);
    EXPECT_EQ(a.evaluated, b.evaluated);
  }
}

class Quadrature : public ::testing::Test {
 protected:
  LqSystem lq = fixtures::scalar_lq(1, 1, 1, 1, 1, 1, 1);
  Eigen::MatrixXd p_next = Eigen::MatrixXd::Ones(1, 1);
  Penalties pen{4, 1};
  Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
};

TEST_F(Quadrature, MatchesClosedFormOnBenchmark) {
  const double quad = oracle::gaussian_quadrature_q(lq, p_next, 0.0, one, zero, pen, 10.0, 100000);
  EXPECT_NEAR(quad, closed_form_q(lq, pen, p_next, 0.0, one, zero), 1e-6);
}

TEST_F(Quadrature, OriginGivesOffsetAlone) {
  const double quad = oracle::gaussian_quadrature_q(lq, p_next, 0.0, zero, zero, pen);
  const double increment = zeta_increment(m_matrix(p_next, lq, pen.gamma_h()), pen);
  EXPECT_NEAR(quad, increment, 1e-9);
  EXPECT_NEAR(oracle::gaussian_quadrature_q(lq, p_next, 2.5, zero, zero, pen), increment + 2.5, 1e-9);
}

TEST_F(Quadrature, BelowCriticalDiverges) {
  try {
    oracle::gaussian_quadrature_q(lq, p_next, 0.0, one, zero, Penalties(2, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DivergentIntegrand);
  }
}

TEST_F(Quadrature, AdversarySigma) {
  EXPECT_DOUBLE_EQ(oracle::adversary_sigma(lq, p_next, pen), std::sqrt(0.5));
}

TEST_F(Quadrature, SecondOrderConvergence) {
  // On a ±3σ window the exact truncated integral is the full one times
  // erf(3/√2), so the remaining error is the trapezoid rule's own.
  const double sigma = oracle::adversary_sigma(lq, p_next, pen);
  const double exact = closed_form_q(lq, pen, p_next, 0.0, one, zero) +
                       pen.gamma_e() * std::log(std::erf(3.0 / std::sqrt(2.0)));
  const double e1 = std::abs(oracle::gaussian_quadrature_q(lq, p_next, 0.0, one, zero, pen, 3 * sigma, 10000) - exact);
  const double e2 = std::abs(oracle::gaussian_quadrature_q(lq, p_next, 0.0, one, zero, pen, 3 * sigma, 20000) - exact);
  EXPECT_GT(e1, 1e-12);
  EXPECT_GE(e1 / e2, 3.0);
}

TEST(QuadratureProperty, RandomScalarSystems) {
  fixtures::Gen gen(34);
  for (int trial = 0; trial < 20; ++trial) {
    const auto lq = fixtures::scalar_lq(gen.uniform(-1.5, 1.5), gen.uniform(-2, 2), gen.uniform(0.2, 1.5),
                                        gen.uniform(0, 2), gen.uniform(0.1, 2), gen.uniform(0, 2), 1);
    const Eigen::MatrixXd p = Eigen::MatrixXd::Constant(1, 1, gen.uniform(0.1, 3));
    const double dpd = 2.0 * lq.D()(0, 0) * lq.D()(0, 0) * p(0, 0);
    const Penalties pen(dpd + gen.uniform(0.5, 5), gen.uniform(0.1, 5));
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, gen.uniform(-3, 3));
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, gen.uniform(-3, 3));
    const double zeta = gen.uniform(-2, 2);
    EXPECT_NEAR(oracle::gaussian_quadrature_q(lq, p, zeta, x, u, pen), closed_form_q(lq, pen, p, zeta, x, u), 1e-6);
  }
}
