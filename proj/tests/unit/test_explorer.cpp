#include "olrhc/explorer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace olrhc;

namespace {
Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

NullDirection make_nd(const Vector& up, double g) {
  NullDirection nd;
  nd.up = up;
  nd.up_zero = up.norm() < 1e-10;
  nd.g = g;
  nd.Wp = up;
  return nd;
}

double min_sigma(const Matrix& M) { return Eigen::JacobiSVD<Matrix>(M).singularValues().minCoeff(); }
}  // namespace

TEST(InputWindow, LayoutNewestColumnLast) {
  InputWindow w(1, 1);  // q = 2, keeps 3 inputs
  EXPECT_EQ(w.q(), 2);
  w.push(vec({1}));
  w.push(vec({2}));
  EXPECT_FALSE(w.ready());
  w.push(vec({3}));
  ASSERT_TRUE(w.ready());
  const Matrix M = w.matrix();
  // columns [u1;u2], [u2;u3]
  EXPECT_EQ(M, (Matrix(2, 2) << 1, 2, 2, 3).finished());
  EXPECT_EQ(w.partial_column(), vec({3}));
  w.push(vec({4}));
  EXPECT_EQ(w.matrix(), (Matrix(2, 2) << 2, 3, 3, 4).finished());
}

TEST(NullDirection, IdentityWindowNoState) {
  InputWindow w(0, 2);
  w.push(vec({1, 0}));
  w.push(vec({0, 1}));
  const auto nd = null_direction(w);
  EXPECT_NEAR(std::abs(nd.Wp(0)), 1.0, 1e-12);
  EXPECT_NEAR(nd.Wp(1), 0.0, 1e-12);
  EXPECT_NEAR((nd.up - nd.Wp).norm(), 0.0, 1e-12);
  EXPECT_FALSE(nd.up_zero);
  EXPECT_DOUBLE_EQ(nd.g, 0.0);
}

TEST(NullDirection, OrthogonalWindowGivesDroppedColumn) {
  Rng rng(4);
  std::normal_distribution<double> N;
  Matrix G(3, 3);
  for (int i = 0; i < 9; ++i) G(i / 3, i % 3) = N(rng);
  const Matrix Qm = Eigen::HouseholderQR<Matrix>(G).householderQ();
  InputWindow w(0, 3);
  for (int c = 0; c < 3; ++c) w.push(Qm.col(c));
  const auto nd = null_direction(w);
  EXPECT_NEAR(std::abs(nd.Wp.dot(Qm.col(0))), 1.0, 1e-10);
}

TEST(NullDirection, OrthogonalToKeptColumns) {
  Rng rng(8);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 3, m = 1 + trial % 2;
    InputWindow w(n, m);
    for (int k = 0; k < w.q() + n; ++k) {
      Vector u(m);
      for (int j = 0; j < m; ++j) u(j) = U(rng);
      w.push(u);
    }
    const auto nd = null_direction(w);
    const Matrix M = w.matrix();
    EXPECT_NEAR(nd.Wp.norm(), 1.0, 1e-10);
    EXPECT_LT((nd.Wp.transpose() * M.rightCols(w.q() - 1)).norm(), 1e-10);
    EXPECT_NEAR(nd.g, nd.Wp.head(n * m).dot(w.partial_column()), 1e-12);
  }
}

TEST(NullDirection, SingularWindowStrictThrows) {
  InputWindow w(1, 1);
  for (int k = 0; k < 3; ++k) w.push(vec({1}));
  EXPECT_THROW(null_direction(w), ContractError);
  EXPECT_NO_THROW(null_direction(w, false));
}

TEST(Perturb, OrthogonalHatUsesSignOfG) {
  const auto p = perturb(vec({0, 1}), make_nd(vec({1, 0}), 1.0), 0.25);
  EXPECT_EQ(p.which, PerturbCase::OrthogonalHat);
  EXPECT_NEAR(p.du(0), 0.5, 1e-15);
  EXPECT_NEAR(p.du(1), 0.0, 1e-15);
  const auto q = perturb(vec({0, 1}), make_nd(vec({1, 0}), -2.0), 0.25);
  EXPECT_NEAR(q.du(0), -0.5, 1e-15);
}

TEST(Perturb, NullFlagAlongHat) {
  const auto p = perturb(vec({3, 4}), make_nd(vec({0, 0}), 1.0), 0.25);
  EXPECT_EQ(p.which, PerturbCase::NullFlag);
  EXPECT_NEAR(p.du(0), 0.3, 1e-15);
  EXPECT_NEAR(p.du(1), 0.4, 1e-15);
}

TEST(Perturb, AlignedCase) {
  const auto p = perturb(vec({1, 1}), make_nd(vec({1, 0}), 0.5), 0.25);
  EXPECT_EQ(p.which, PerturbCase::Aligned);
  EXPECT_NEAR((p.du - 0.5 * vec({1, 1}) / std::sqrt(2.0)).norm(), 0.0, 1e-15);
}

TEST(Perturb, ReversedCases) {
  // g_perp = 3, g = -5: g_s < 0. ||u_hat|| = 3 >= 2 sqrt(c_p) = 1 gives the single step.
  auto p = perturb(vec({3}), make_nd(vec({1}), -5.0), 0.25);
  EXPECT_EQ(p.which, PerturbCase::Reversed);
  EXPECT_NEAR(p.du(0), -0.5, 1e-15);
  // ||u_hat|| = 0.6 < 1 gives the double step.
  p = perturb(vec({0.6}), make_nd(vec({1}), -5.0), 0.25);
  EXPECT_EQ(p.which, PerturbCase::ReversedDouble);
  EXPECT_NEAR(p.du(0), -1.0, 1e-15);
}

TEST(Perturb, RandomInstancesKeepColumnOffNullSpace) {
  Rng rng(17);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int trial = 0; trial < 5000; ++trial) {
    const int m = 1 + trial % 3;
    Vector uh(m), up(m);
    for (int j = 0; j < m; ++j) {
      uh(j) = U(rng);
      up(j) = U(rng);
    }
    const double g = U(rng), c_p = 0.05 + 0.5 * std::abs(U(rng));
    const auto p = perturb(uh, make_nd(up, g), c_p);
    const double s = std::sqrt(c_p);
    const double mag = p.du.norm();
    EXPECT_TRUE(std::abs(mag - s) < 1e-12 || std::abs(mag - 2 * s) < 1e-12) << mag;
    const double before = g + up.dot(uh);
    const double after = g + up.dot(uh + p.du);
    EXPECT_GT(std::abs(after), 0.0);
    if (std::abs(before) > 1e-9) EXPECT_GT(after * before, 0.0);
  }
}

TEST(Perturb, WindowStaysFullRankUnderTable) {
  Rng rng(23);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int n : {1, 2}) {
    for (int m : {1, 2}) {
      InputWindow w(n, m);
      const int q = w.q();
      const double c_p = 0.25;
      for (int t = 1; t <= q + n; ++t) w.push(periodic_excitation_input(t, n, m, std::sqrt(c_p)));
      ASSERT_GT(min_sigma(w.matrix()), 1e-10);
      for (int t = q + n + 1; t <= 400; ++t) {
        const auto nd = null_direction(w);
        Vector uh(m);
        for (int j = 0; j < m; ++j) uh(j) = U(rng);
        const auto p = perturb(uh, nd, c_p);
        w.push(uh + p.du);
        EXPECT_GT(min_sigma(w.matrix()), 1e-10) << "n=" << n << " m=" << m << " t=" << t;
      }
    }
  }
}

TEST(PeriodicInput, HandExamples) {
  EXPECT_EQ(periodic_excitation_input(1, 2, 2, 6), vec({0, 6}));
  EXPECT_EQ(periodic_excitation_input(2, 2, 2, 6), vec({0, 0}));
  EXPECT_EQ(periodic_excitation_input(3, 2, 2, 6), vec({0, 0}));
  EXPECT_EQ(periodic_excitation_input(4, 2, 2, 6), vec({6, 0}));
  EXPECT_EQ(periodic_excitation_input(7, 2, 2, 6), vec({0, 6}));
}

TEST(CheckPoe, IdenticalVectorsFail) {
  std::vector<Vector> z(10, vec({1, 2}));
  const auto r = check_poe(z, 0.5, 0.25, 10);
  EXPECT_NEAR(r.lambda_min, 0.0, 1e-10);
  EXPECT_FALSE(r.pass);
}

TEST(CheckPoe, CyclingBasis) {
  const double s = 0.7;
  std::vector<Vector> z;
  for (int k = 0; k < 12; ++k) {
    Vector e = Vector::Zero(3);
    e(k % 3) = s;
    z.push_back(e);
  }
  const auto r = check_poe(z, 1.0 / 3.0, 1.0, 12);
  EXPECT_NEAR(r.lambda_min, s * s * 4, 1e-12);
  EXPECT_DOUBLE_EQ(r.bound, 4.0);
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(check_poe(z, 0.1, 1.0, 12).pass);
}
