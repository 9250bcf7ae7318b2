#include "olrhc/estimator.hpp"

#include "../support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace olrhc;

namespace {
Matrix m1(double v) { return Matrix::Constant(1, 1, v); }
Vector v1(double v) { return Vector::Constant(1, v); }

DataLog scalar_log(double a, double b, const std::vector<double>& u, double x1, double eps, Rng& rng) {
  DataLog log(1, 1);
  double x = x1;
  NoiseModel noise{eps};
  for (double uk : u) {
    log.push_observation(observe(v1(x), noise, rng));
    log.push_input(v1(uk));
    x = a * x + b * uk;
  }
  log.push_observation(observe(v1(x), noise, rng));
  return log;
}
}  // namespace

TEST(DataLog, OrderingEnforced) {
  DataLog log(1, 1);
  EXPECT_THROW(log.push_input(v1(1)), ContractError);
  log.push_observation(v1(2));
  log.push_input(v1(3));
  const Vector z = log.regressor(1);
  EXPECT_DOUBLE_EQ(z(0), 2.0);
  EXPECT_DOUBLE_EQ(z(1), 3.0);
  EXPECT_THROW(log.y(0), ContractError);
}

TEST(RidgeFit, NoiselessRecovery) {
  Rng rng(1);
  const auto log = scalar_log(0.5, 1.0, {1, 0, 1, 0, 1, 0}, 0.0, 0.0, rng);
  const Matrix th = ridge_fit(log, 6, 0.0);
  EXPECT_NEAR(th(0, 0), 0.5, 1e-10);
  EXPECT_NEAR(th(0, 1), 1.0, 1e-10);
}

TEST(RidgeFit, ZeroData) {
  Rng rng(1);
  const auto log = scalar_log(0.5, 1.0, {0, 0, 0, 0}, 0.0, 0.0, rng);
  EXPECT_EQ(ridge_fit(log, 4, 1.0).norm(), 0.0);
}

TEST(RidgeFit, SingularWithoutRegularisationThrows) {
  Rng rng(1);
  const auto log = scalar_log(0.5, 1.0, {0, 0, 0, 0}, 0.0, 0.0, rng);
  EXPECT_THROW(ridge_fit(log, 4, 0.0), NumericalError);
}

TEST(RidgeFit, ShrinksMonotonicallyInLambda) {
  Rng rng(5);
  const auto log = scalar_log(0.7, 0.8, {1, -0.5, 0.3, 0.9, -1, 0.2, 0.4, -0.7}, 1.0, 0.05, rng);
  double prev = ridge_fit(log, 8, 0.0).norm();
  for (double lambda : {0.01, 0.1, 1.0, 10.0, 100.0, 1e4, 1e6}) {
    const double cur = ridge_fit(log, 8, lambda).norm();
    EXPECT_LT(cur, prev);
    prev = cur;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(RidgeFit, MatchesGridSearch) {
  Rng rng(11);
  std::vector<double> u{0.9, -0.4, 0.3, 1.0, -0.8, 0.1, 0.6, -0.2, 0.5, -1.0};
  const auto log = scalar_log(0.6, 1.2, u, 0.5, 0.1, rng);
  std::vector<double> ys, us;
  for (int k = 1; k <= 11; ++k) ys.push_back(log.y(k)(0));
  for (int k = 1; k <= 10; ++k) us.push_back(log.u(k)(0));
  for (double lambda : {0.0, 0.5, 3.0}) {
    const auto [a, b] = oracle::ridge_grid(ys, us, lambda, -2.0, 2.0, 800);
    const Matrix th = ridge_fit(log, 10, lambda);
    EXPECT_NEAR(th(0, 0), a, 0.006);
    EXPECT_NEAR(th(0, 1), b, 0.006);
  }
}

TEST(RidgeFit, ExcludedIndicesMatchManualFit) {
  Rng rng(13);
  std::vector<double> u{0.9, -0.4, 0.3, 1.0, -0.8, 0.1, 0.6, -0.2};
  const auto log = scalar_log(0.6, 1.2, u, 0.5, 0.1, rng);
  const std::vector<int> drop{1, 4};
  const Matrix th = ridge_fit(log, 8, 0.2, drop);
  Matrix G = 0.2 * Matrix::Identity(2, 2);
  Vector r = Vector::Zero(2);
  for (int k = 1; k <= 8; ++k) {
    if (k == 1 || k == 4) continue;
    const Vector z = log.regressor(k);
    G += z * z.transpose();
    r += z * log.y(k + 1)(0);
  }
  const Vector ref = G.ldlt().solve(r);
  EXPECT_NEAR(th(0, 0), ref(0), 1e-12);
  EXPECT_NEAR(th(0, 1), ref(1), 1e-12);
}

TEST(ConfidenceRadius, FrozenValues) {
  RadiusInputs in;
  in.n = 1;
  in.m = 1;
  in.S = 1.0;
  in.R = 0.1;
  in.delta_tilde = 0.05;
  in.gamma = 0.5;
  in.c_p = 0.25;
  in.t = 16;
  in.lambda = 0.01;
  in.gamma_y = 0.2283796968518761;
  const auto r = confidence_radius(in);
  EXPECT_NEAR(r.R_tilde, 0.7682582330559367, 1e-12);
  EXPECT_NEAR(r.beta, 0.5870273357553287, 1e-12);
}

TEST(ConfidenceRadius, NoRegularisationTerm) {
  RadiusInputs in;
  in.n = 2;
  in.m = 1;
  in.S = 3.0;
  in.R = 0.05;
  in.gamma = 1.0 / 3.0;
  in.c_p = 0.5;
  in.t = 48;
  in.lambda = 0.0;
  in.gamma_y = 0.2;
  const auto r = confidence_radius(in);
  EXPECT_DOUBLE_EQ(r.beta, r.R_tilde / std::sqrt(in.gamma * in.c_p * in.t));
}

TEST(ConfidenceRadius, NonPositiveGammaYThrows) {
  RadiusInputs in;
  in.gamma_y = 0.0;
  EXPECT_THROW(confidence_radius(in), ContractError);
}

TEST(GammaY, FrozenValue) {
  const auto g = gamma_y_formula(0.5, 1, 1, 0.1, 16, 0.05);
  EXPECT_NEAR(g.value, 0.2283796968518761, 1e-12);
  EXPECT_FALSE(g.clamped);
}

TEST(GammaY, NoiselessEqualsGamma) { EXPECT_DOUBLE_EQ(gamma_y_formula(0.25, 2, 1, 0.0, 16, 0.01).value, 0.25); }

TEST(GammaY, IncreasesTowardGammaWithH) {
  double prev = -1.0;
  for (double H : {16.0, 64.0, 256.0, 1024.0, 1e5, 1e8}) {
    const double g = gamma_y_formula(0.5, 1, 1, 0.1, H, 0.05).value;
    EXPECT_GT(g, prev);
    EXPECT_LT(g, 0.5);
    prev = g;
  }
  EXPECT_NEAR(prev, 0.5, 1e-2);
}

TEST(GammaY, ClampsWhenNonPositive) {
  const auto g = gamma_y_formula(0.5, 2, 1, 1.0, 1, 0.01);
  EXPECT_TRUE(g.clamped);
  EXPECT_DOUBLE_EQ(g.value, 1e-6);
}

TEST(ProjectToTheta, LandsInTheta) {
  Rng rng(21);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (int k = 0; k < 200; ++k) {
    Matrix th(2, 3);
    for (int i = 0; i < 6; ++i) th(i / 3, i % 3) = nd(rng);
    const Matrix p = project_to_theta(th, 2, 1.5);
    EXPECT_TRUE(in_theta_set(p, 2, 1.5));
    if (in_theta_set(th, 2, 1.5)) EXPECT_EQ(p, th);
  }
}

namespace {
struct SelectionFixture {
  StageCostSpec costs = StageCostSpec::quadratic(m1(1), m1(1));
  PolytopeU U = PolytopeU::box(v1(-1), v1(1));
  TerminalCostSpec term = synth_terminal({m1(0.8)});
  ConfidenceSet conf;
  SelectionProblem problem(double radius, double eps_c, int K, int L) {
    conf.center = Matrix(1, 2);
    conf.center << 0.8, 1.0;
    conf.radius = radius;
    conf.S = 1.5;
    conf.n = 1;
    SelectionProblem p;
    p.confidence = &conf;
    p.y_t = v1(1.0);
    p.eps_c = eps_c;
    p.t_start = 17;
    p.t_end = 48;
    p.costs = &costs;
    p.terminal = &term;
    p.U = &U;
    p.M = 5;
    p.K = K;
    p.L = L;
    return p;
  }
};
}  // namespace

TEST(SelectEstimate, ZeroRadiusReturnsCentre) {
  SelectionFixture f;
  const auto p = f.problem(0.0, 0.0, 8, 4);
  Rng rng(3);
  const auto r = select_estimate(p, rng);
  EXPECT_EQ(r.theta_hat, f.conf.center);
  EXPECT_EQ(r.x_hat, p.y_t);
}

TEST(SelectEstimate, NoiselessStateIsObservation) {
  SelectionFixture f;
  const auto p = f.problem(0.3, 0.0, 8, 4);
  Rng rng(3);
  const auto r = select_estimate(p, rng);
  EXPECT_EQ(r.x_hat, p.y_t);
  EXPECT_TRUE(in_theta_set(r.theta_hat, 1, 1.5));
  EXPECT_LE((r.theta_hat - f.conf.center).norm(), 0.3 + 1e-12);
}

TEST(SelectEstimate, LargerBudgetNeverWorse) {
  SelectionFixture f;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng r1(seed), r2(seed);
    const auto small = select_estimate(f.problem(0.3, 0.05, 1, 1), r1);
    const auto big = select_estimate(f.problem(0.3, 0.05, 8, 4), r2);
    EXPECT_LE(big.best_cost, small.best_cost + 1e-12);
    EXPECT_NEAR(small.best_cost, simulate_interval_cost(small.theta_hat, small.x_hat, f.problem(0.3, 0.05, 1, 1)),
                1e-9 * std::max(1.0, small.best_cost));
  }
}

TEST(SelectEstimate, SelectedCostIsMinimumOverOwnCandidate) {
  SelectionFixture f;
  const auto p = f.problem(0.3, 0.05, 8, 4);
  Rng rng(9);
  const auto r = select_estimate(p, rng);
  const double centre_cost = simulate_interval_cost(f.conf.center, p.y_t, p);
  EXPECT_LE(r.best_cost, centre_cost + 1e-12);
  EXPECT_LE((r.x_hat - p.y_t).norm(), p.eps_c + 1e-12);
}

TEST(SimulateIntervalCost, AbortStopsAboveThreshold) {
  SelectionFixture f;
  const auto p = f.problem(0.0, 0.0, 1, 1);
  const double full = simulate_interval_cost(f.conf.center, p.y_t, p);
  const double cut = simulate_interval_cost(f.conf.center, p.y_t, p, full * 0.5);
  EXPECT_GT(cut, full * 0.5);
  EXPECT_LE(cut, full);
}
