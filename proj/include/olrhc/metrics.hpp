#pragma once

#include "olrhc/controller.hpp"
#include "olrhc/polytope.hpp"

#include <span>
#include <utility>
#include <vector>

namespace olrhc {

/// sum of per-step costs minus the reference total.
double regret(std::span<const double> step_costs, double reference);
double regret(const TrajectoryLog& traj, double reference);
/// Pointwise comparison; the two logs must have equal length.
double regret(const TrajectoryLog& traj, const TrajectoryLog& reference);

/// sum over steps and rows of max{(F u_t - b)_k, 0}.
double violation(const TrajectoryLog& traj, const PolytopeU& U);
double violation(std::span<const Vector> inputs, const PolytopeU& U);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
  bool dropped_first = false;
};

/// OLS of log(value) on log(T). Needs >= 3 points with positive values.
SlopeFit slope_fit(std::span<const std::pair<double, double>> points);

/// slope_fit, refitted without the smallest T when r^2 < 0.9 and >= 4 points remain available.
struct RobustSlope {
  SlopeFit all;
  SlopeFit reported;
};
RobustSlope slope_fit_robust(std::vector<std::pair<double, double>> points);

struct RegretReport {
  double L_policy = 0.0;
  double L_hindsight = 0.0;
  double L_oracle = 0.0;
  double R_T = 0.0;
  double R_T_base = 0.0;
  double V = 0.0;
  std::vector<double> interval_regret;  // per-interval partial sums of c(policy) - c(oracle)
};

RegretReport regret_report(const TrajectoryLog& policy, const TrajectoryLog& oracle, double hindsight_cost,
                           const PolytopeU& U);

/// sum_i sqrt(c_{p,i}) * |interval i within [1, T]|.
double perturbation_budget(int H, int T);

}  // namespace olrhc
