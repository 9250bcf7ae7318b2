#include "olrhc/rhc.hpp"

#include "../support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace olrhc;

namespace {
Matrix m1(double v) { return Matrix::Constant(1, 1, v); }
Vector v1(double v) { return Vector::Constant(1, v); }

Matrix random_matrix(int r, int c, Rng& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  Matrix M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = d(rng);
  return M;
}

Matrix random_spd(int k, Rng& rng, double floor) {
  const Matrix G = random_matrix(k, k, rng);
  return G * G.transpose() + floor * Matrix::Identity(k, k);
}
}  // namespace

TEST(Polytope, BoxProjection) {
  const auto U = PolytopeU::box(v1(-1), v1(1));
  EXPECT_DOUBLE_EQ(project_polytope(v1(2), U)(0), 1.0);
  EXPECT_DOUBLE_EQ(project_polytope(v1(-0.3), U)(0), -0.3);
}

TEST(Polytope, HalfSpaceInsideBox) {
  Matrix F(5, 2);
  F << 1, 0, 0, 1, -1, 0, 0, -1, 1, 1;
  Vector b = Vector::Ones(5);
  const PolytopeU U(F, b);
  Vector u(2);
  u << 1, 1;
  const Vector p = U.project(u);
  EXPECT_NEAR(p(0), 0.5, 1e-8);
  EXPECT_NEAR(p(1), 0.5, 1e-8);
}

TEST(Polytope, ProjectionIsNearestFeasiblePoint) {
  Matrix F(5, 2);
  F << 1, 0, 0, 1, -1, 0, 0, -1, 1, 1;
  const PolytopeU U(F, Vector::Ones(5));
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    const Vector u = random_matrix(2, 1, rng, 3.0);
    const Vector p = U.project(u);
    ASSERT_TRUE(U.contains(p));
    for (int j = 0; j < 20; ++j) {
      const Vector w = U.sample(rng);
      EXPECT_LE((p - u).norm(), (w - u).norm() + 1e-7);
    }
  }
}

TEST(Polytope, ViolationRows) {
  Matrix F(4, 2);
  F << 1, 0, 0, 1, -1, 0, 0, -1;
  const PolytopeU U(F, Vector::Ones(4));
  Vector u(2);
  u << 2, 2;
  EXPECT_DOUBLE_EQ(U.violation(u), 2.0);
  EXPECT_DOUBLE_EQ(PolytopeU::box(v1(-1), v1(1)).violation(v1(1.5)), 0.5);
}

TEST(Polytope, UnboundedRejected) {
  Matrix F(1, 1);
  F << 1;
  EXPECT_THROW(PolytopeU(F, v1(1)), ContractError);
}

TEST(SolveHorizon, OneStepHorizon) {
  const auto costs = StageCostSpec::quadratic(m1(1), m1(1));
  const auto U = PolytopeU::box(v1(-10), v1(10));
  HorizonProblem p{m1(0.5), m1(1.0), v1(1.0), 1, 1, &costs, nullptr, &U, std::nullopt};
  const auto seq = solve_horizon(p);
  ASSERT_EQ(seq.status, SolveStatus::Converged);
  EXPECT_NEAR(seq.w[0](0), 0.0, 1e-9);
  EXPECT_NEAR(seq.objective, 1.0, 1e-9);
  EXPECT_NEAR(first_input(seq)(0), 0.0, 1e-9);
}

TEST(SolveHorizon, ZeroProblem) {
  Matrix A(2, 2);
  A << 0.5, 0.1, 0.0, 0.3;
  const Matrix B = Matrix::Identity(2, 2);
  const auto costs = StageCostSpec::quadratic(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const TerminalCostSpec term(Matrix::Identity(2, 2), 2.0);
  const auto U = PolytopeU::box(-Vector::Ones(2), Vector::Ones(2));
  HorizonProblem p{A, B, Vector::Zero(2), 1, 4, &costs, &term, &U, std::nullopt};
  const auto seq = solve_horizon(p);
  ASSERT_EQ(seq.status, SolveStatus::Converged);
  for (const auto& w : seq.w) EXPECT_NEAR(w.norm(), 0.0, 1e-12);
  EXPECT_NEAR(seq.objective, 0.0, 1e-12);
  EXPECT_NEAR(first_input(seq).norm(), 0.0, 1e-12);
}

TEST(SolveHorizon, EmptyPolytopeIsInfeasible) {
  Matrix F(2, 1);
  F << 1, -1;
  Vector b(2);
  b << -1, -1;
  const PolytopeU U(F, b);
  EXPECT_TRUE(U.empty());
  const auto costs = StageCostSpec::quadratic(m1(1), m1(1));
  HorizonProblem p{m1(0.5), m1(1.0), v1(1.0), 1, 3, &costs, nullptr, &U, std::nullopt};
  const auto seq = solve_horizon(p);
  EXPECT_EQ(seq.status, SolveStatus::Infeasible);
  EXPECT_THROW(first_input(seq), SolverError);
}

TEST(SolveHorizon, ScalarLqrMatchesDp) {
  const auto costs = StageCostSpec::quadratic(m1(1), m1(1));
  const auto U = PolytopeU::box(v1(-1e6), v1(1e6));
  HorizonProblem p{m1(0.5), m1(1.0), v1(1.0), 1, 3, &costs, nullptr, &U, std::nullopt};
  const auto seq = solve_horizon(p);
  const auto ref = oracle::lqr_dp(m1(0.5), m1(1.0), m1(1), m1(1), m1(0), 3, v1(1.0));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(seq.w[k](0), ref[k](0), 1e-6);
}

TEST(Oracles, DpAgreesWithDenseNormalEquations) {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 3, m = 1 + trial % 2, M = 2 + trial % 5;
    const Matrix A = random_matrix(n, n, rng), B = random_matrix(n, m, rng);
    const Matrix Q = random_spd(n, rng, 0.1), R = random_spd(m, rng, 0.5);
    const Vector x0 = random_matrix(n, 1, rng);
    const auto a = oracle::lqr_dp(A, B, Q, R, Matrix::Zero(n, n), M, x0);
    const auto b = oracle::lqr_dense(A, B, Q, R, M, x0);
    for (int k = 0; k < M; ++k) EXPECT_LT((a[k] - b[k]).norm(), 1e-8);
  }
}

TEST(SolveHorizon, RandomLqrMatchesDp) {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 3, m = 1 + (trial / 3) % 2, M = 1 + trial % 7;
    Matrix A = random_matrix(n, n, rng);
    const double rho = spectral_radius(A);
    if (rho >= 0.95) A *= 0.9 / rho;
    const Matrix B = random_matrix(n, m, rng);
    const Matrix Q = random_spd(n, rng, 0.1), R = random_spd(m, rng, 0.5);
    const auto costs = StageCostSpec::quadratic(Q, R);
    const auto term = synth_terminal({A}, 1.5);
    const auto U = PolytopeU::box(Vector::Constant(m, -1e6), Vector::Constant(m, 1e6));
    const Vector x0 = random_matrix(n, 1, rng, 2.0);
    HorizonProblem p{A, B, x0, 1, M, &costs, &term, &U, std::nullopt};
    const auto seq = solve_horizon(p);
    ASSERT_EQ(seq.status, SolveStatus::Converged);
    const auto ref = oracle::lqr_dp(A, B, Q, R, term.Gamma * term.P, M, x0);
    for (int k = 0; k < M; ++k) worst = std::max(worst, (seq.w[k] - ref[k]).lpNorm<Eigen::Infinity>());
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(SolveHorizon, ConstrainedFeasibleAndNoWorseThanSamples) {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 2, m = 1 + trial % 2, M = 3 + trial % 4;
    Matrix A = random_matrix(n, n, rng);
    const double rho = spectral_radius(A);
    if (rho >= 0.95) A *= 0.9 / rho;
    const Matrix B = random_matrix(n, m, rng);
    const auto costs = StageCostSpec::quadratic(random_spd(n, rng, 0.1), random_spd(m, rng, 0.2));
    const auto U = PolytopeU::box(Vector::Constant(m, -0.2), Vector::Constant(m, 0.3));
    HorizonProblem p{A, B, random_matrix(n, 1, rng, 3.0), 1, M, &costs, nullptr, &U, std::nullopt};
    const auto seq = solve_horizon(p);
    ASSERT_EQ(seq.status, SolveStatus::Converged);
    for (const auto& w : seq.w) EXPECT_TRUE(U.contains(w, 1e-8));
    EXPECT_NEAR(HorizonSolver::objective(p, seq.w), seq.objective, 1e-9 * std::max(1.0, seq.objective));
    for (int s = 0; s < 50; ++s) {
      std::vector<Vector> w;
      for (int k = 0; k < M; ++k) w.push_back(U.sample(rng));
      EXPECT_LE(seq.objective, HorizonSolver::objective(p, w) + 1e-9);
    }
  }
}

TEST(SolveHorizon, GeneralPathAgreesWithQuadratic) {
  Matrix A(2, 2);
  A << 0.6, 0.2, -0.1, 0.5;
  Matrix B(2, 1);
  B << 0.0, 1.0;
  const auto quad = StageCostSpec::quadratic(Matrix::Identity(2, 2), m1(1.0));
  const auto pow2 = StageCostSpec::power(2.0, 2, 1);
  const auto U = PolytopeU::box(v1(-0.5), v1(0.5));
  Vector x0(2);
  x0 << 2.0, -1.0;
  HorizonProblem pq{A, B, x0, 1, 5, &quad, nullptr, &U, std::nullopt};
  HorizonProblem pp{A, B, x0, 1, 5, &pow2, nullptr, &U, std::nullopt};
  const auto a = solve_horizon(pq), b = solve_horizon(pp);
  ASSERT_EQ(b.status, SolveStatus::Converged);
  EXPECT_NEAR(a.objective, b.objective, 1e-6);
}

TEST(SolveHorizon, CostIndexClampsToPreview) {
  const auto costs = StageCostSpec::quadratic(m1(1), m1(1));
  HorizonProblem p{m1(0.5), m1(1.0), v1(1.0), 5, 4, &costs, nullptr, nullptr, 6};
  EXPECT_EQ(p.cost_index(0), 5);
  EXPECT_EQ(p.cost_index(1), 6);
  EXPECT_EQ(p.cost_index(3), 6);
}

TEST(HorizonSolver, WarmStartDoesNotChangeOptimum) {
  const auto costs = StageCostSpec::quadratic(m1(1), m1(0.1));
  const auto U = PolytopeU::box(v1(-0.3), v1(0.3));
  HorizonSolver warm;
  Vector x = v1(3.0);
  for (int t = 1; t <= 10; ++t) {
    HorizonProblem p{m1(0.9), m1(1.0), x, t, 6, &costs, nullptr, &U, std::nullopt};
    const auto a = warm.solve(p);
    const auto b = solve_horizon(p);
    EXPECT_NEAR(a.objective, b.objective, 1e-8);
    x = m1(0.9) * x + a.w[0];
  }
}
