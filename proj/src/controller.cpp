#include "olrhc/controller.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace olrhc {

IntervalSchedule::IntervalSchedule(int H, int T) : H_(H), T_(T), count_(0) {
  if (H < 1 || T < 1) {
    throw ContractError("IntervalSchedule: H and T must be positive");
  }
  while (end(count_) < T_) {
    ++count_;
  }
}

long long IntervalSchedule::length(int i) const {
  if (i < 1 || i > 40) {
    throw ContractError("IntervalSchedule: interval index out of range");
  }
  return (1LL << (i - 1)) * H_;
}

long long IntervalSchedule::end(int i) const {
  if (i < 0 || i > 40) {
    throw ContractError("IntervalSchedule: interval index out of range");
  }
  return ((1LL << i) - 1) * H_;
}

double IntervalSchedule::c_p(int i) const { return 1.0 / std::sqrt(static_cast<double>(length(i))); }

int IntervalSchedule::interval_of(long long t) const {
  if (t < 1) {
    throw ContractError("IntervalSchedule: t must be >= 1");
  }
  int i = 1;
  while (end(i) < t) {
    ++i;
  }
  return i;
}

double RunConfig::delta_tilde() const { return delta / (2.0 * std::log(2.0 * T)); }

double TrajectoryLog::total_cost() const {
  double s = 0.0;
  for (const auto& r : steps) s += r.cost;
  return s;
}

double TrajectoryLog::total_violation() const {
  double s = 0.0;
  for (const auto& r : steps) s += r.violation;
  return s;
}

double TrajectoryLog::max_uhat_violation() const {
  double s = 0.0;
  for (const auto& r : steps) s = std::max(s, r.uhat_violation);
  return s;
}

std::vector<double> TrajectoryLog::step_costs() const {
  std::vector<double> c;
  c.reserve(steps.size());
  for (const auto& r : steps) c.push_back(r.cost);
  return c;
}

double step_violation(const PolytopeU& U, const Vector& u) { return U.violation(u); }

namespace {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

void validate(const Scenario& sc, const RunConfig& cfg) {
  if (cfg.T < 1 || cfg.M < 1 || cfg.H < 1) {
    throw ContractError("run config: T, H and M must be positive");
  }
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw ContractError("run config: delta must lie in (0, 1)");
  }
  if (sc.x1.size() != sc.sys.n() || sc.U.dim() != sc.sys.m() || sc.costs.n() != sc.sys.n() ||
      sc.costs.m() != sc.sys.m()) {
    throw ContractError("scenario: dimension mismatch between system, costs, constraint set and x1");
  }
  if (const auto h = sc.costs.horizon(); h && *h < cfg.T) {
    throw ContractError("scenario: cost schedule shorter than T");
  }
}

Vector rhc_input(HorizonSolver& solver, const HorizonProblem& hp, int t, int* iterations) {
  const ControlSequence seq = solver.solve(hp);
  if (iterations != nullptr) {
    *iterations = seq.iterations;
  }
  if (seq.status != SolveStatus::Converged) {
    throw SolverError("step " + std::to_string(t) + ": RHC solve " + to_string(seq.status), seq.status);
  }
  return seq.w.front();
}

Vector stack(const Vector& a, const Vector& b) {
  Vector z(a.size() + b.size());
  z << a, b;
  return z;
}

double lambda_min(const Matrix& V) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(V, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

TrajectoryLog run_online_rhc(const Scenario& sc, const RunConfig& cfg) {
  validate(sc, cfg);
  if (sc.U.empty()) {
    throw SolverError("step 1: constraint set is empty", SolveStatus::Infeasible);
  }
  const int n = sc.sys.n();
  const int m = sc.sys.m();
  const int q = (n + 1) * m;
  const int warm = q + n;
  const double gamma = cfg.gamma_poe.value_or(1.0 / q);
  const double delta_tilde = cfg.delta_tilde();
  const double lambda = cfg.lambda_value();
  const Matrix theta_true = sc.sys.theta();
  const IntervalSchedule sched(cfg.H, cfg.T);

  Rng noise_rng = make_rng(cfg.seed, 1);
  Rng est_rng = make_rng(cfg.seed, 2);
  DataLog data(n, m);
  InputWindow window(n, m);
  HorizonSolver solver(cfg.solver);

  TrajectoryLog out;
  out.n = n;
  out.m = m;
  out.steps.reserve(static_cast<std::size_t>(cfg.T));
  out.window.min_sigma = std::numeric_limits<double>::infinity();
  out.window.min_column_margin = std::numeric_limits<double>::infinity();

  Matrix V = Matrix::Zero(n + m, n + m);
  Matrix theta_hat;
  Vector xbar;
  Vector x = sc.x1;
  int i = 1;

  auto estimate = [&](int done, int t, const Vector& y) {
    const long long window_end = std::min<long long>(sched.end(done + 1), cfg.T);
    IntervalRecord rec;
    rec.i = done;
    rec.t_i = sched.end(done);
    if (done > 0) {
      const ExcitationReport poe = check_poe(V, gamma, sched.c_p(done), static_cast<double>(rec.t_i), done);
      rec.c_p = sched.c_p(done);
      rec.lambda_min_V = poe.lambda_min;
      rec.poe_bound = poe.bound;
      rec.poe_pass = poe.pass;
    }
    if (cfg.pin_theta) {
      theta_hat = theta_true;
      xbar = y;
      rec.covered = true;
      rec.theta_hat = theta_hat;
      if (done > 0) out.intervals.push_back(rec);
      return;
    }
    ConfidenceSet conf;
    conf.n = n;
    conf.S = sc.sys.S;
    if (done == 0) {
      conf.center = Matrix::Zero(n, n + m);
      conf.radius = sc.sys.S;
    } else {
      std::vector<int> excluded;
      if (cfg.drop_interval_start) {
        for (int j = 1; j <= done; ++j) excluded.push_back(static_cast<int>(sched.start(j)));
      }
      const Matrix theta_l = ridge_fit(data, static_cast<int>(rec.t_i), lambda, excluded);
      const GammaY gy = gamma_y_formula(gamma, n, m, sc.noise.R(), cfg.H, delta_tilde);
      RadiusInputs ri;
      ri.n = n;
      ri.m = m;
      ri.S = sc.sys.S;
      ri.R = sc.noise.R();
      ri.gamma = gamma;
      ri.c_p = sched.c_p(done);
      ri.t = static_cast<double>(rec.t_i);
      ri.lambda = lambda;
      ri.gamma_y = gy.value;
      ri.delta_tilde = delta_tilde;
      const RadiusResult rr = confidence_radius(ri);
      conf.center = theta_l;
      conf.radius = rr.beta;
      conf.R_tilde = rr.R_tilde;
      conf.gamma_y = gy.value;
      rec.beta = rr.beta;
      rec.gamma_y_clamped = gy.clamped;
      rec.ridge_err_fro = (theta_l - theta_true).norm();
      rec.covered = (theta_true - theta_l).norm() <= rr.beta;
    }
    SelectionProblem sp;
    sp.confidence = &conf;
    sp.y_t = y;
    sp.eps_c = sc.noise.kind == NoiseModel::Kind::Zero ? 0.0 : sc.noise.eps_c;
    sp.t_start = t;
    sp.t_end = static_cast<int>(window_end);
    sp.costs = &sc.costs;
    sp.terminal = sc.terminal_ptr();
    sp.U = &sc.U;
    sp.M = cfg.M;
    sp.solver = cfg.solver;
    sp.K = cfg.K;
    sp.L = cfg.L;
    const EstimateResult est = select_estimate(sp, est_rng);
    theta_hat = est.theta_hat;
    xbar = est.x_hat;
    rec.theta_hat = theta_hat;
    rec.theta_err_fro = (theta_hat - theta_true).norm();
    if (done > 0) out.intervals.push_back(rec);
  };

  for (int t = 1; t <= cfg.T; ++t) {
    const Vector y = observe(x, sc.noise, noise_rng);
    data.push_observation(y);
    if (t == 1) {
      estimate(0, t, y);
    } else if (t == sched.end(i) + 1) {
      estimate(i, t, y);
      ++i;
    }

    HorizonProblem hp;
    hp.A = theta_hat.leftCols(n);
    hp.B = theta_hat.rightCols(m);
    hp.x0 = xbar;
    hp.t0 = t;
    hp.M = cfg.M;
    hp.costs = &sc.costs;
    hp.terminal = sc.terminal_ptr();
    hp.U = &sc.U;
    hp.preview_end = static_cast<int>(std::min<long long>(sched.end(i), cfg.T));

    StepRecord rec;
    const Vector uhat = rhc_input(solver, hp, t, &rec.solver_iterations);
    const double c_p = sched.c_p(i);
    Vector du = Vector::Zero(m);
    if (cfg.perturb) {
      if (t <= warm) {
        const Vector p = periodic_excitation_input(t, n, m, std::sqrt(c_p));
        for (int j = 0; j < m; ++j) {
          du(j) = uhat(j) < 0.0 ? -p(j) : p(j);
        }
      } else {
        const NullDirection nd = null_direction(window, false);
        const Matrix Mprev = window.matrix();
        if (!(nd.sigma_min_prev > 1e-10 * std::max(1.0, Mprev.norm()))) {
          ++out.window.rank_fallbacks;
        }
        du = perturb(uhat, nd, c_p).du;
      }
    }
    const Vector u = uhat + du;
    window.push(u);
    if (cfg.perturb && window.ready()) {
      const Matrix Mt = window.matrix();
      Eigen::JacobiSVD<Matrix> svd(Mt);
      out.window.min_sigma = std::min(out.window.min_sigma, svd.singularValues()(q - 1));
      out.window.min_column_margin = std::min(out.window.min_column_margin, Mt.col(q - 1).norm() - std::sqrt(c_p));
      ++out.window.checked_steps;
    }

    rec.t = t;
    rec.interval = i;
    rec.x = x;
    rec.y = y;
    rec.xbar = xbar;
    rec.uhat = uhat;
    rec.du = du;
    rec.u = u;
    rec.cost = sc.costs.eval(t, x, u);
    rec.violation = sc.U.violation(u);
    rec.uhat_violation = sc.U.violation(uhat);

    const Vector z = stack(x, u);
    V.noalias() += z * z.transpose();
    data.push_input(u);
    xbar = hp.A * xbar + hp.B * uhat;
    x = step(sc.sys, x, u);
    out.steps.push_back(std::move(rec));
  }
  return out;
}

TrajectoryLog run_etc(const Scenario& sc, const RunConfig& cfg) {
  validate(sc, cfg);
  if (sc.U.empty()) {
    throw SolverError("step 1: constraint set is empty", SolveStatus::Infeasible);
  }
  const int n = sc.sys.n();
  const int m = sc.sys.m();
  const int q = (n + 1) * m;
  const int N = cfg.etc_N.value_or(static_cast<int>(std::ceil(std::pow(static_cast<double>(cfg.T), 2.0 / 3.0))));
  if (N < 1) {
    throw ContractError("run_etc: N must be >= 1");
  }
  const Matrix theta_true = sc.sys.theta();
  Rng noise_rng = make_rng(cfg.seed, 1);
  DataLog data(n, m);
  HorizonSolver solver(cfg.solver);

  TrajectoryLog out;
  out.n = n;
  out.m = m;
  out.etc_N = N;
  out.steps.reserve(static_cast<std::size_t>(cfg.T));
  Matrix V = Matrix::Zero(n + m, n + m);
  Matrix theta_hat;
  Vector xbar;
  Vector x = sc.x1;

  for (int t = 1; t <= cfg.T; ++t) {
    const Vector y = observe(x, sc.noise, noise_rng);
    data.push_observation(y);
    StepRecord rec;
    Vector uhat = Vector::Zero(m);
    Vector du = Vector::Zero(m);
    if (t <= N) {
      du = periodic_excitation_input(t, n, m, static_cast<double>(q));
      xbar = y;
    } else {
      if (t == N + 1) {
        const Matrix theta_l = ridge_fit(data, N, 0.0);
        theta_hat = project_to_theta(theta_l, n, sc.sys.S);
        xbar = y;
        const double delta_tilde = cfg.delta / (n * (n + 2.0));
        IntervalRecord ir;
        ir.i = 1;
        ir.t_i = N;
        ir.c_p = 1.0;
        if (delta_tilde < 1.0) {
          RadiusInputs ri;
          ri.n = n;
          ri.m = m;
          ri.S = sc.sys.S;
          ri.R = sc.noise.R();
          ri.gamma = 1.0;
          ri.c_p = 1.0;
          ri.t = N;
          ri.lambda = 0.0;
          ri.delta_tilde = delta_tilde;
          ir.beta = confidence_radius(ri).beta;
        }
        ir.ridge_err_fro = (theta_l - theta_true).norm();
        ir.theta_err_fro = (theta_hat - theta_true).norm();
        ir.covered = ir.ridge_err_fro <= ir.beta;
        ir.lambda_min_V = lambda_min(V);
        ir.poe_bound = 0.0;
        ir.poe_pass = ir.lambda_min_V > 0.0;
        ir.theta_hat = theta_hat;
        out.intervals.push_back(ir);
      }
      HorizonProblem hp;
      hp.A = theta_hat.leftCols(n);
      hp.B = theta_hat.rightCols(m);
      hp.x0 = xbar;
      hp.t0 = t;
      hp.M = cfg.M;
      hp.costs = &sc.costs;
      hp.terminal = sc.terminal_ptr();
      hp.U = &sc.U;
      hp.preview_end = cfg.T;
      uhat = rhc_input(solver, hp, t, &rec.solver_iterations);
    }
    const Vector u = uhat + du;
    rec.t = t;
    rec.interval = t <= N ? 1 : 2;
    rec.x = x;
    rec.y = y;
    rec.xbar = xbar;
    rec.uhat = uhat;
    rec.du = du;
    rec.u = u;
    rec.cost = sc.costs.eval(t, x, u);
    rec.violation = sc.U.violation(u);
    rec.uhat_violation = sc.U.violation(uhat);
    const Vector z = stack(x, u);
    V.noalias() += z * z.transpose();
    data.push_input(u);
    if (t > N) {
      xbar = theta_hat.leftCols(n) * xbar + theta_hat.rightCols(m) * uhat;
    }
    x = step(sc.sys, x, u);
    out.steps.push_back(std::move(rec));
  }
  return out;
}

TrajectoryLog run_oracle_baseline(const Scenario& sc, const RunConfig& cfg) {
  validate(sc, cfg);
  if (sc.U.empty()) {
    throw SolverError("step 1: constraint set is empty", SolveStatus::Infeasible);
  }
  HorizonSolver solver(cfg.solver);
  TrajectoryLog out;
  out.n = sc.sys.n();
  out.m = sc.sys.m();
  out.steps.reserve(static_cast<std::size_t>(cfg.T));
  Vector x = sc.x1;
  HorizonProblem hp;
  hp.A = sc.sys.A;
  hp.B = sc.sys.B;
  hp.M = cfg.M;
  hp.costs = &sc.costs;
  hp.terminal = sc.terminal_ptr();
  hp.U = &sc.U;
  hp.preview_end = cfg.T;
  for (int t = 1; t <= cfg.T; ++t) {
    hp.x0 = x;
    hp.t0 = t;
    StepRecord rec;
    const Vector u = rhc_input(solver, hp, t, &rec.solver_iterations);
    rec.t = t;
    rec.interval = 0;
    rec.x = x;
    rec.y = x;
    rec.xbar = x;
    rec.uhat = u;
    rec.du = Vector::Zero(u.size());
    rec.u = u;
    rec.cost = sc.costs.eval(t, x, u);
    rec.violation = sc.U.violation(u);
    rec.uhat_violation = rec.violation;
    x = step(sc.sys, x, u);
    out.steps.push_back(std::move(rec));
  }
  return out;
}

ControlSequence run_hindsight(const Scenario& sc, int T, const SolverOptions& options) {
  if (T < 1) {
    throw ContractError("run_hindsight: T must be >= 1");
  }
  HorizonProblem hp;
  hp.A = sc.sys.A;
  hp.B = sc.sys.B;
  hp.x0 = sc.x1;
  hp.t0 = 1;
  hp.M = T;
  hp.costs = &sc.costs;
  hp.terminal = nullptr;
  hp.U = &sc.U;
  hp.preview_end = T;
  SolverOptions opt = options;
  opt.warm_start = false;
  ControlSequence seq = solve_horizon(hp, opt);
  if (seq.status == SolveStatus::Infeasible) {
    throw SolverError("hindsight: step 1: constraint set is empty, no feasible input", seq.status);
  }
  seq.objective = open_loop_cost(sc, seq.w);
  return seq;
}

double open_loop_cost(const Scenario& sc, const std::vector<Vector>& u) {
  Vector x = sc.x1;
  double total = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    total += sc.costs.eval(static_cast<int>(k) + 1, x, u[k]);
    x = step(sc.sys, x, u[k]);
  }
  return total;
}

TheoryConstants theory_constants(int n, int m, double R, double gamma, int T, double delta) {
  if (n < 1 || m < 1 || !(R > 0.0) || !(gamma > 0.0) || T < 1 || !(delta > 0.0 && delta < 1.0)) {
    throw ContractError("theory_constants: arguments must be positive");
  }
  TheoryConstants c;
  c.q = (n + 1) * m;
  c.n_c = std::pow(16.0 * n * n * R * R / gamma, 2);
  c.n_c_tilde = std::pow(std::sqrt(2.0), n + m + 2);
  c.delta_tilde = delta / (2.0 * std::log(2.0 * T));
  const double inner = std::log(c.n_c_tilde * (std::log(2.0 * T) / delta));
  const double num = std::max(2.0 * c.q, c.n_c * inner * inner);
  c.j_star = static_cast<long long>(std::ceil(num / c.q));
  c.H = static_cast<double>(c.j_star) * c.n_c + n;
  c.H_ceil = static_cast<long long>(std::ceil(c.H));
  c.H_exceeds_T = c.H > T;
  c.n_c_below_one = c.n_c < 1.0;
  return c;
}

int etc_min_split(const Scenario& sc, double delta) {
  const int n = sc.sys.n();
  const int m = sc.sys.m();
  const int q = (n + 1) * m;
  int lcm = 1;
  for (int j = 1; j <= m; ++j) lcm = std::lcm(lcm, j);
  const int period = (n + 1) * lcm;
  Vector x = Vector::Zero(n);
  Matrix V = Matrix::Zero(n + m, n + m);
  const int burn = 20 * period;
  for (int t = 1; t <= burn + period; ++t) {
    const Vector u = periodic_excitation_input(t, n, m, static_cast<double>(q));
    if (t > burn) {
      const Vector z = stack(x, u);
      V.noalias() += z * z.transpose();
    }
    x = step(sc.sys, x, u);
  }
  const double c_tilde = lambda_min(V) / period;
  if (!(c_tilde > 0.0)) {
    throw NumericalError("etc_min_split: excitation sequence is not persistently exciting for this system");
  }
  const double delta_tilde = delta / (n * (n + 2.0));
  const double R = sc.noise.R();
  const double extra = 16.0 * n * n * R * R / c_tilde * std::log(std::pow(std::sqrt(2.0), n + m) / delta_tilde);
  return q + static_cast<int>(std::ceil(std::max(0.0, extra))) + 1;
}

}  // namespace olrhc
