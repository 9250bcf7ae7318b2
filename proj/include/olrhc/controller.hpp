#pragma once

#include "olrhc/costs.hpp"
#include "olrhc/estimator.hpp"
#include "olrhc/explorer.hpp"
#include "olrhc/linsys.hpp"
#include "olrhc/polytope.hpp"
#include "olrhc/rhc.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace olrhc {

/// Doubling intervals: H_i = 2^{i-1} H, t_i = (2^i - 1) H, c_{p,i} = H_i^{-1/2}.
class IntervalSchedule {
 public:
  IntervalSchedule(int H, int T);

  int H() const { return H_; }
  int T() const { return T_; }
  /// Number of intervals that intersect [1, T].
  int count() const { return count_; }
  long long length(int i) const;  // H_i
  long long end(int i) const;     // t_i; end(0) = 0
  long long start(int i) const { return end(i - 1) + 1; }
  double c_p(int i) const;
  /// Interval containing step t (1-based).
  int interval_of(long long t) const;

 private:
  int H_;
  int T_;
  int count_;
};

/// Everything about the environment that a run needs; referenced, never copied.
struct Scenario {
  SystemParams sys;
  NoiseModel noise;
  StageCostSpec costs;
  std::optional<TerminalCostSpec> terminal;
  PolytopeU U;
  Vector x1;

  const TerminalCostSpec* terminal_ptr() const { return terminal ? &*terminal : nullptr; }
};

struct RunConfig {
  int T = 256;
  int H = 16;
  int M = 5;
  double delta = 0.1;
  std::optional<double> lambda;  // defaults to 1/T
  std::uint64_t seed = 1;
  int K = 8;
  int L = 4;
  std::optional<double> gamma_poe;  // defaults to 1/((n+1)m)
  bool perturb = true;
  bool pin_theta = false;          // theta_hat := theta, x_hat := y_t (skips estimation)
  bool drop_interval_start = false;  // omit each interval's first sample from the fit
  std::optional<int> etc_N;        // ETC split; defaults to ceil(T^{2/3})
  SolverOptions solver;

  double delta_tilde() const;
  double lambda_value() const { return lambda.value_or(1.0 / T); }
};

struct StepRecord {
  int t = 0;
  int interval = 0;
  Vector x, y, xbar, uhat, du, u;
  double cost = 0.0;
  double violation = 0.0;
  double uhat_violation = 0.0;
  int solver_iterations = 0;
};

struct IntervalRecord {
  int i = 0;
  long long t_i = 0;
  double c_p = 0.0;
  double beta = 0.0;
  double theta_err_fro = 0.0;  // selected estimate
  double ridge_err_fro = 0.0;  // ridge centre
  double lambda_min_V = 0.0;
  double poe_bound = 0.0;
  bool poe_pass = false;
  bool covered = false;
  bool gamma_y_clamped = false;
  Matrix theta_hat;
};

struct WindowStats {
  double min_sigma = 0.0;        // smallest singular value of M_t after warm-up
  double min_column_margin = 0.0;  // min over completed columns of ||W|| - sqrt(c_p)
  int checked_steps = 0;
  int rank_fallbacks = 0;        // steps where the previous window was already singular
};

struct TrajectoryLog {
  int n = 0;
  int m = 0;
  std::vector<StepRecord> steps;
  std::vector<IntervalRecord> intervals;
  WindowStats window;
  std::optional<int> etc_N;

  double total_cost() const;
  double total_violation() const;
  double max_uhat_violation() const;
  std::vector<double> step_costs() const;
};

/// Online RHC with interval-wise re-estimation and directional perturbation.
TrajectoryLog run_online_rhc(const Scenario& sc, const RunConfig& cfg);

/// Periodic excitation for t <= N, one fit, then certainty-equivalent RHC.
TrajectoryLog run_etc(const Scenario& sc, const RunConfig& cfg);

/// RHC on the true state with the true parameters and full preview.
TrajectoryLog run_oracle_baseline(const Scenario& sc, const RunConfig& cfg);

/// One optimisation over all T inputs from x1, true parameters, no terminal cost.
ControlSequence run_hindsight(const Scenario& sc, int T, const SolverOptions& options = {});

/// Cost of an open-loop input sequence applied from x1 with the true parameters.
double open_loop_cost(const Scenario& sc, const std::vector<Vector>& u);

struct TheoryConstants {
  int q = 0;
  double n_c = 0.0;
  double n_c_tilde = 0.0;
  long long j_star = 0;
  double H = 0.0;
  long long H_ceil = 0;
  double delta_tilde = 0.0;
  bool H_exceeds_T = false;
  bool n_c_below_one = false;
};

TheoryConstants theory_constants(int n, int m, double R, double gamma, int T, double delta);

/// Smallest admissible ETC split q + ceil(16 n^2 R^2 / c~_p * log(sqrt2^{n+m} / delta~)) + 1,
/// with c~_p from a noiseless dry run of the excitation sequence.
int etc_min_split(const Scenario& sc, double delta);

/// Per-step constraint violation sum_k max{(F u - b)_k, 0}.
double step_violation(const PolytopeU& U, const Vector& u);

}  // namespace olrhc
