#include "olrhc/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace olrhc {

double regret(std::span<const double> step_costs, double reference) {
  double s = 0.0;
  for (double c : step_costs) s += c;
  return s - reference;
}

double regret(const TrajectoryLog& traj, double reference) {
  const auto c = traj.step_costs();
  return regret(c, reference);
}

double regret(const TrajectoryLog& traj, const TrajectoryLog& reference) {
  if (traj.steps.size() != reference.steps.size()) {
    throw ContractError("regret: trajectories differ in length");
  }
  return traj.total_cost() - reference.total_cost();
}

double violation(std::span<const Vector> inputs, const PolytopeU& U) {
  double v = 0.0;
  for (const auto& u : inputs) v += U.violation(u);
  return v;
}

double violation(const TrajectoryLog& traj, const PolytopeU& U) {
  double v = 0.0;
  for (const auto& r : traj.steps) v += U.violation(r.u);
  return v;
}

SlopeFit slope_fit(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) {
    throw ContractError("slope_fit: need at least 3 points");
  }
  const auto k = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [T, v] : points) {
    if (!(T > 0.0) || !(v > 0.0)) {
      throw ContractError("slope_fit: T and values must be positive");
    }
    sx += std::log(T);
    sy += std::log(v);
  }
  const double mx = sx / k;
  const double my = sy / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [T, v] : points) {
    const double dx = std::log(T) - mx;
    const double dy = std::log(v) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) {
    throw ContractError("slope_fit: all T values coincide");
  }
  SlopeFit f;
  f.points = static_cast<int>(points.size());
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

RobustSlope slope_fit_robust(std::vector<std::pair<double, double>> points) {
  std::sort(points.begin(), points.end());
  RobustSlope r;
  r.all = slope_fit(points);
  r.reported = r.all;
  if (r.all.r2 < 0.9 && points.size() >= 4) {
    r.reported = slope_fit(std::span(points).subspan(1));
    r.reported.dropped_first = true;
  }
  return r;
}

RegretReport regret_report(const TrajectoryLog& policy, const TrajectoryLog& oracle, double hindsight_cost,
                           const PolytopeU& U) {
  if (policy.steps.size() != oracle.steps.size()) {
    throw ContractError("regret_report: trajectories differ in length");
  }
  RegretReport rep;
  rep.L_policy = policy.total_cost();
  rep.L_oracle = oracle.total_cost();
  rep.L_hindsight = hindsight_cost;
  rep.R_T = rep.L_policy - hindsight_cost;
  rep.R_T_base = rep.L_policy - rep.L_oracle;
  rep.V = violation(policy, U);
  for (std::size_t k = 0; k < policy.steps.size(); ++k) {
    const int i = policy.steps[k].interval;
    if (rep.interval_regret.size() < static_cast<std::size_t>(i + 1)) {
      rep.interval_regret.resize(static_cast<std::size_t>(i + 1), 0.0);
    }
    rep.interval_regret[static_cast<std::size_t>(i)] += policy.steps[k].cost - oracle.steps[k].cost;
  }
  return rep;
}

double perturbation_budget(int H, int T) {
  const IntervalSchedule sched(H, T);
  double total = 0.0;
  for (int i = 1; i <= sched.count(); ++i) {
    const long long len = std::min<long long>(sched.end(i), T) - sched.start(i) + 1;
    total += std::sqrt(sched.c_p(i)) * static_cast<double>(len);
  }
  return total;
}

}  // namespace olrhc
