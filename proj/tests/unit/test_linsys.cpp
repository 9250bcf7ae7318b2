#include "olrhc/linsys.hpp"

#include <gtest/gtest.h>

using namespace olrhc;

namespace {
Matrix m1(double v) { return Matrix::Constant(1, 1, v); }
Vector v1(double v) { return Vector::Constant(1, v); }
}  // namespace

TEST(Step, ScalarArithmetic) {
  SystemParams s(m1(0.5), m1(1.0), 2.0);
  EXPECT_DOUBLE_EQ(step(s, v1(1.0), v1(1.0))(0), 1.5);
}

TEST(Step, ZeroInZeroOut) {
  Matrix A(2, 2), B(2, 1);
  A << 0.3, -0.2, 0.1, 0.4;
  B << 1, 2;
  SystemParams s(A, B, 5.0);
  EXPECT_EQ(step(s, Vector::Zero(2), Vector::Zero(1)), Vector::Zero(2));
}

TEST(Step, ShiftRegister) {
  Matrix A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  SystemParams s(A, B, 2.0);
  Vector x(2);
  x << 1, 2;
  const Vector out = step(s, x, v1(3.0));
  EXPECT_DOUBLE_EQ(out(0), 2.0);
  EXPECT_DOUBLE_EQ(out(1), 3.0);
}

TEST(Step, DimensionMismatchThrows) {
  SystemParams s(m1(0.5), m1(1.0), 2.0);
  EXPECT_THROW(step(s, Vector::Zero(2), v1(0.0)), ContractError);
  EXPECT_THROW(step(s, v1(0.0), Vector::Zero(3)), ContractError);
}

TEST(Step, Linearity) {
  Rng rng(7);
  std::normal_distribution<double> N;
  Matrix A(3, 3), B(3, 2);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = N(rng);
  for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = N(rng);
  SystemParams s(A, B, 100.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector x1(3), x2(3), u1(2), u2(2);
    for (auto* v : {&x1, &x2, &u1, &u2})
      for (Eigen::Index i = 0; i < v->size(); ++i) (*v)(i) = N(rng);
    const double a = N(rng), b = N(rng);
    const Vector lhs = step(s, a * x1 + b * x2, a * u1 + b * u2);
    const Vector rhs = a * step(s, x1, u1) + b * step(s, x2, u2);
    EXPECT_LE((lhs - rhs).norm(), 1e-12 * (1.0 + rhs.norm()));
  }
}

TEST(Observe, ZeroNoiseIsIdentity) {
  Rng rng(1);
  Vector x(2);
  x << 1, 2;
  EXPECT_EQ(observe(x, NoiseModel{0.0}, rng), x);
  NoiseModel z{0.5, NoiseModel::Kind::Zero};
  EXPECT_EQ(observe(x, z, rng), x);
}

TEST(Observe, BoundedByEpsC) {
  Rng rng(3);
  Vector x = Vector::Constant(3, 4.0);
  for (int k = 0; k < 10000; ++k) {
    EXPECT_LE((observe(x, NoiseModel{0.1}, rng) - x).norm(), 0.1);
  }
}

TEST(Observe, DeterministicForSeed) {
  Rng a(42), b(42);
  Vector x = Vector::Ones(2);
  EXPECT_EQ(observe(x, NoiseModel{0.1}, a), observe(x, NoiseModel{0.1}, b));
}

TEST(Observe, SampleMeanNearZero) {
  Rng rng(11);
  const double eps = 0.2;
  const int N = 100000;
  Vector sum = Vector::Zero(2);
  for (int k = 0; k < N; ++k) sum += observe(Vector::Zero(2), NoiseModel{eps}, rng);
  const Vector mean = sum / N;
  for (int j = 0; j < 2; ++j) EXPECT_LE(std::abs(mean(j)), 5.0 * eps / std::sqrt(N));
}

TEST(Admissibility, StableScalar) {
  const auto r = check_admissible(SystemParams(m1(0.5), m1(1.0), 2.0));
  EXPECT_DOUBLE_EQ(r.rho, 0.5);
  EXPECT_EQ(r.ctrb_rank, 1);
  EXPECT_TRUE(r.admissible());
}

TEST(Admissibility, UnstableFlagged) {
  const auto r = check_admissible(SystemParams(m1(1.1), m1(1.0), 2.0));
  EXPECT_FALSE(r.stable);
  EXPECT_FALSE(r.admissible());
}

TEST(Admissibility, UncontrollableFlagged) {
  Matrix A(2, 2), B(2, 1);
  A << 0.5, 0, 0, 0.5;
  B << 1, 0;
  const auto r = check_admissible(SystemParams(A, B, 2.0));
  EXPECT_EQ(r.ctrb_rank, 1);
  EXPECT_FALSE(r.controllable);
}

TEST(Admissibility, NormBound) {
  const auto r = check_admissible(SystemParams(m1(0.5), m1(1.0), 1.0));
  EXPECT_NEAR(r.fro_norm, std::sqrt(1.25), 1e-15);
  EXPECT_FALSE(r.within_bound);
}

TEST(PowerNormDecay, Scalar) {
  const auto d = power_norm_decay(m1(0.5));
  EXPECT_DOUBLE_EQ(d.gamma, 0.5);
  EXPECT_DOUBLE_EQ(d.c_rho, 1.0);
}

TEST(PowerNormDecay, Nilpotent) {
  Matrix A(2, 2);
  A << 0, 1, 0, 0;
  const auto d = power_norm_decay(A);
  EXPECT_GT(d.gamma, 0.0);
  EXPECT_LT(d.gamma, 1.0);
  EXPECT_TRUE(std::isfinite(d.c_rho));
  Matrix Ak = Matrix::Identity(2, 2);
  for (int k = 0; k <= 200; ++k) {
    EXPECT_LE(Eigen::JacobiSVD<Matrix>(Ak).singularValues()(0), d.c_rho * std::pow(d.gamma, k) + 1e-12);
    Ak = Ak * A;
  }
}

TEST(PowerNormDecay, RandomStableBoundHolds) {
  Rng rng(5);
  std::normal_distribution<double> N;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix A(3, 3);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = N(rng);
    A *= 0.95 / spectral_radius(A);
    const auto d = power_norm_decay(A);
    ASSERT_LT(d.gamma, 1.0);
    Matrix Ak = Matrix::Identity(3, 3);
    for (int k = 0; k <= 200; ++k) {
      const double spec = Eigen::JacobiSVD<Matrix>(Ak).singularValues()(0);
      EXPECT_LE(spec, d.c_rho * std::pow(d.gamma, k) * (1 + 1e-9) + 1e-300);
      Ak = Ak * A;
    }
  }
}

TEST(PowerNormDecay, UnstableThrows) { EXPECT_THROW(power_norm_decay(m1(1.0)), ContractError); }

TEST(Boundedness, StableSystemBoundedInputs) {
  Rng rng(9);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Matrix A(2, 2), B(2, 1);
  A << 0.9, 0.2, -0.1, 0.7;
  B << 1, 0.5;
  SystemParams s(A, B, 5.0);
  const auto d = power_norm_decay(A);
  // x_c from the geometric series of ||A^k|| ||B|| max|u|.
  const double x_c = d.c_rho * B.norm() / (1.0 - d.gamma) + 1.0;
  Vector x = Vector::Zero(2);
  for (int t = 0; t < 10000; ++t) {
    x = step(s, x, Vector::Constant(1, U(rng)));
    ASSERT_LE(x.norm(), x_c);
  }
}
