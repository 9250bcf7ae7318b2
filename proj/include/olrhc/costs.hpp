#pragma once

#include "olrhc/linsys.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace olrhc {

class PolytopeU;

enum class CostFamily { Quadratic, Power, Tracking };

/// How a stage-cost parameter list maps onto time indices t = 1, 2, ...
enum class Schedule { Constant, Periodic, PerStep };

/// Parameters of one stage cost. Only the fields of the active family are used.
struct StageParams {
  Matrix Q;  // quadratic: x'Qx
  Matrix R;  // quadratic: u'Ru
  double a = 2.0;  // power / tracking exponent
  Vector b;  // tracking reference
};

/**
 * Time-indexed stage costs c_t(x, u).
 *
 *   quadratic: x'Q_t x + u'R_t u,       sigma(x) = ||x||^2
 *   power:     ||x||^a + ||u||^a,       sigma(x) = ||x||^a
 *   tracking:  ||x - b||^a,             sigma(x) = ||x - b||^a
 *
 * Time indices start at 1.
 */
class StageCostSpec {
 public:
  static StageCostSpec quadratic(const Matrix& Q, const Matrix& R);
  static StageCostSpec quadratic_schedule(std::vector<Matrix> Q, std::vector<Matrix> R, Schedule schedule);
  static StageCostSpec power(double a, int n, int m);
  static StageCostSpec tracking(const Vector& b, double a, int m, double beta_ref = 0.0);
  static StageCostSpec with_schedule(CostFamily family, std::vector<StageParams> params, Schedule schedule,
                                     int n, int m);

  CostFamily family() const { return family_; }
  Schedule schedule() const { return schedule_; }
  int n() const { return n_; }
  int m() const { return m_; }
  bool time_invariant() const { return params_.size() == 1 || schedule_ == Schedule::Constant; }
  /// Last valid index for PerStep schedules, unbounded otherwise.
  std::optional<int> horizon() const;
  /// Reference dynamics coefficient of the tracking example x+ = beta x + u (0 if unused).
  double beta_ref() const { return beta_ref_; }

  const StageParams& at(int t) const;
  double eval(int t, const Vector& x, const Vector& u) const;
  double sigma(const Vector& x) const;
  void gradient(int t, const Vector& x, const Vector& u, Vector& gx, Vector& gu) const;

  /// Declared alpha of c_t >= alpha * sigma (1 for power/tracking, min eig of Q for quadratic).
  double declared_alpha() const;

 private:
  CostFamily family_ = CostFamily::Quadratic;
  Schedule schedule_ = Schedule::Constant;
  std::vector<StageParams> params_;
  int n_ = 0;
  int m_ = 0;
  double beta_ref_ = 0.0;
};

double eval_stage(const StageCostSpec& spec, int t, const Vector& x, const Vector& u);
double eval_sigma(const StageCostSpec& spec, const Vector& x);

/// Terminal penalty Gamma * d(x) with d(x) = (x - offset)' P (x - offset).
struct TerminalCostSpec {
  Matrix P;
  double Gamma = 1.0;
  Vector offset;

  TerminalCostSpec() = default;
  TerminalCostSpec(Matrix p, double gamma, Vector off = {});

  double d(const Vector& x) const;
  Vector grad_d(const Vector& x) const;
  /// alpha_d lower bound d(x) >= alpha_d * ||x - offset||^2.
  double alpha_d() const;
};

/**
 * P > 0 with A'PA - P <= -I at every corner. Solves A'PA - P = -2I at the
 * corner with the largest spectral radius; if that P does not certify the other
 * corners, iterates P <- 2I + sum_i A_i'PA_i. Throws NumericalError when neither
 * succeeds (use d = 0 with a longer horizon instead).
 */
TerminalCostSpec synth_terminal(const std::vector<Matrix>& corners, double Gamma = 1.0, int max_iter = 10000);

/// Solution of A'PA - P = -Q.
Matrix discrete_lyapunov(const Matrix& A, const Matrix& Q);

/// Gamma >= max{1, alpha_bar * alpha_c / (alpha * alpha_d)}.
double terminal_weight_lower_bound(double alpha_bar, double alpha_c, double alpha, double alpha_d);

struct Assumption3Report {
  double alpha_hat = 0.0;     // empirical min of c/sigma
  double declared_alpha = 0.0;
  int samples_used = 0;
  bool flagged = false;       // alpha_hat < declared_alpha
};

/// Samples x in the ball of radius x_radius and u in U over t in [1, t_max].
Assumption3Report verify_assumption3(const StageCostSpec& spec, double x_radius, const PolytopeU& U, int t_max,
                                     int samples, Rng& rng);

/// Empirical Lipschitz constant of c_t on {||x|| <= x_radius} x U from random pairs.
double estimate_lipschitz(const StageCostSpec& spec, double x_radius, const PolytopeU& U, int t_max, int samples,
                          Rng& rng);

}  // namespace olrhc
