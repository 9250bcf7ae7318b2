#pragma once

#include "olrhc/costs.hpp"
#include "olrhc/linsys.hpp"
#include "olrhc/polytope.hpp"
#include "olrhc/rhc.hpp"

#include <limits>
#include <span>
#include <vector>

namespace olrhc {

/// Append-only record of observations y_1, y_2, ... and inputs u_1, u_2, ...
class DataLog {
 public:
  DataLog(int n, int m);

  void push_observation(const Vector& y);
  void push_input(const Vector& u);

  int n() const { return n_; }
  int m() const { return m_; }
  int observations() const { return static_cast<int>(ys_.size()); }
  int inputs() const { return static_cast<int>(us_.size()); }
  const Vector& y(int k) const;
  const Vector& u(int k) const;
  /// z^y_k = [y_k; u_k]
  Vector regressor(int k) const;

 private:
  int n_;
  int m_;
  std::vector<Vector> ys_;
  std::vector<Vector> us_;
};

/**
 * Ridge estimate of theta from the pairs (z^y_k, y_{k+1}), k = 1..t_end,
 * skipping indices listed in `excluded`. Solved as a stacked least-squares
 * problem [Z; sqrt(lambda) I] with Householder QR. With lambda = 0 the Gram
 * matrix must have smallest eigenvalue above 1e-10.
 */
Matrix ridge_fit(const DataLog& log, int t_end, double lambda, std::span<const int> excluded = {});

struct RadiusInputs {
  int n = 1;
  int m = 1;
  double S = 1.0;
  double R = 0.0;
  double gamma = 1.0;
  double c_p = 1.0;
  double t = 1.0;
  double lambda = 0.0;
  double gamma_y = 1.0;
  double delta_tilde = 0.05;
};

struct RadiusResult {
  double R_tilde = 0.0;
  double beta = 0.0;
};

/// R~ = 2n(n+1) max{1,S} R sqrt((n+m) log sqrt2 - log delta~),
/// beta = R~ / sqrt(gamma c_p t) + lambda S / gamma_y.
RadiusResult confidence_radius(const RadiusInputs& in);

struct GammaY {
  double value = 0.0;
  bool clamped = false;
};

/// gamma_y = gamma (1 - 2nR / sqrt(gamma H^(1/2)) * sqrt(4((n+m) log sqrt2 - log delta~))),
/// floored at 1e-6 (clamped = true) when the expression is not positive.
GammaY gamma_y_formula(double gamma, int n, int m, double R, double H, double delta_tilde);

/// Frobenius ball around a ridge centre, intersected with Theta.
struct ConfidenceSet {
  Matrix center;
  double radius = 0.0;
  double S = 1.0;
  int n = 1;
  double R_tilde = 0.0;
  double gamma_y = 1.0;

  bool contains(const Matrix& theta) const;
};

/// Radial shrink of theta into {||theta||_F <= S, rho(A) < 1}.
Matrix project_to_theta(const Matrix& theta, int n, double S);

struct SelectionProblem {
  const ConfidenceSet* confidence = nullptr;
  Vector y_t;
  double eps_c = 0.0;
  int t_start = 1;  // first step of the interval being planned
  int t_end = 1;    // last step of that interval (preview limit)
  const StageCostSpec* costs = nullptr;
  const TerminalCostSpec* terminal = nullptr;
  const PolytopeU* U = nullptr;
  int M = 1;
  SolverOptions solver;
  int K = 8;  // parameter candidates
  int L = 4;  // state candidates
};

struct EstimateResult {
  Matrix theta_hat;
  Vector x_hat;
  int candidates_tried = 0;
  int candidates_discarded = 0;
  double best_cost = 0.0;
};

/**
 * Joint choice of (x_hat, theta_hat) minimising the simulated closed-loop
 * interval cost under RHC with the candidate model. Candidates: the projected
 * centre plus K-1 uniform draws from the confidence ball (kept only if in
 * Theta), crossed with y_t plus L-1 draws from the eps_c ball around y_t.
 * Candidate 0 is always (projected centre, y_t).
 */
EstimateResult select_estimate(const SelectionProblem& problem, Rng& rng);

/// Closed-loop cost of RHC on the model theta from x over [t_start, t_end].
/// Stops early once the running sum exceeds abort_above (stage costs are >= 0).
double simulate_interval_cost(const Matrix& theta, const Vector& x, const SelectionProblem& problem,
                              double abort_above = std::numeric_limits<double>::infinity());

}  // namespace olrhc
