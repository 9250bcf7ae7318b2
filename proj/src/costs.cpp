#include "olrhc/costs.hpp"

#include "olrhc/polytope.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace olrhc {

namespace {

double min_eig_sym(const Matrix& M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ||v||^a with gradient a ||v||^(a-2) v; the gradient is set to 0 at v = 0.
double norm_pow(const Vector& v, double a) {
  const double r = v.norm();
  return r == 0.0 ? 0.0 : std::pow(r, a);
}

Vector norm_pow_grad(const Vector& v, double a) {
  const double r = v.norm();
  if (r == 0.0) {
    return Vector::Zero(v.size());
  }
  return (a * std::pow(r, a - 2.0)) * v;
}

void check_quadratic(const StageParams& p, int n, int m) {
  if (p.Q.rows() != n || p.Q.cols() != n || p.R.rows() != m || p.R.cols() != m) {
    throw ContractError("quadratic cost: Q must be n x n and R m x m");
  }
  if (!p.Q.isApprox(p.Q.transpose()) || !p.R.isApprox(p.R.transpose())) {
    throw ContractError("quadratic cost: Q and R must be symmetric");
  }
  if (min_eig_sym(p.Q) < -1e-12) {
    throw ContractError("quadratic cost: Q must be positive semidefinite");
  }
  if (min_eig_sym(p.R) <= 0.0) {
    throw ContractError("quadratic cost: R must be positive definite");
  }
}

}  // namespace

StageCostSpec StageCostSpec::quadratic(const Matrix& Q, const Matrix& R) {
  return quadratic_schedule({Q}, {R}, Schedule::Constant);
}

StageCostSpec StageCostSpec::quadratic_schedule(std::vector<Matrix> Q, std::vector<Matrix> R, Schedule schedule) {
  if (Q.empty() || Q.size() != R.size()) {
    throw ContractError("quadratic_schedule: Q and R lists must be nonempty and equally long");
  }
  std::vector<StageParams> params(Q.size());
  for (std::size_t i = 0; i < Q.size(); ++i) {
    params[i].Q = std::move(Q[i]);
    params[i].R = std::move(R[i]);
  }
  const int n = static_cast<int>(params.front().Q.rows());
  const int m = static_cast<int>(params.front().R.rows());
  return with_schedule(CostFamily::Quadratic, std::move(params), schedule, n, m);
}

StageCostSpec StageCostSpec::power(double a, int n, int m) {
  StageParams p;
  p.a = a;
  return with_schedule(CostFamily::Power, {p}, Schedule::Constant, n, m);
}

StageCostSpec StageCostSpec::tracking(const Vector& b, double a, int m, double beta_ref) {
  StageParams p;
  p.a = a;
  p.b = b;
  auto spec = with_schedule(CostFamily::Tracking, {p}, Schedule::Constant, static_cast<int>(b.size()), m);
  spec.beta_ref_ = beta_ref;
  return spec;
}

StageCostSpec StageCostSpec::with_schedule(CostFamily family, std::vector<StageParams> params, Schedule schedule,
                                           int n, int m) {
  if (params.empty()) {
    throw ContractError("StageCostSpec: empty parameter schedule");
  }
  if (n <= 0 || m <= 0) {
    throw ContractError("StageCostSpec: dimensions must be positive");
  }
  for (const auto& p : params) {
    switch (family) {
      case CostFamily::Quadratic:
        check_quadratic(p, n, m);
        break;
      case CostFamily::Power:
        if (!(p.a > 0.0)) {
          throw ContractError("power cost: exponent a must be positive");
        }
        break;
      case CostFamily::Tracking:
        if (!(p.a > 0.0)) {
          throw ContractError("tracking cost: exponent a must be positive");
        }
        if (p.b.size() != n) {
          throw ContractError("tracking cost: reference b must have dimension n");
        }
        break;
    }
  }
  StageCostSpec s;
  s.family_ = family;
  s.schedule_ = schedule;
  s.params_ = std::move(params);
  s.n_ = n;
  s.m_ = m;
  return s;
}

std::optional<int> StageCostSpec::horizon() const {
  if (schedule_ == Schedule::PerStep) {
    return static_cast<int>(params_.size());
  }
  return std::nullopt;
}

const StageParams& StageCostSpec::at(int t) const {
  if (t < 1) {
    throw ContractError("stage cost: time index must be >= 1");
  }
  const auto idx = static_cast<std::size_t>(t - 1);
  switch (schedule_) {
    case Schedule::Constant:
      return params_.front();
    case Schedule::Periodic:
      return params_[idx % params_.size()];
    case Schedule::PerStep:
      if (idx >= params_.size()) {
        std::ostringstream os;
        os << "stage cost: t=" << t << " beyond per-step schedule of length " << params_.size();
        throw ContractError(os.str());
      }
      return params_[idx];
  }
  return params_.front();
}

double StageCostSpec::eval(int t, const Vector& x, const Vector& u) const {
  if (x.size() != n_ || u.size() != m_) {
    throw ContractError("stage cost: dimension mismatch");
  }
  const auto& p = at(t);
  switch (family_) {
    case CostFamily::Quadratic:
      return x.dot(p.Q * x) + u.dot(p.R * u);
    case CostFamily::Power:
      return norm_pow(x, p.a) + norm_pow(u, p.a);
    case CostFamily::Tracking:
      return norm_pow(x - p.b, p.a);
  }
  return 0.0;
}

double StageCostSpec::sigma(const Vector& x) const {
  const auto& p = params_.front();
  switch (family_) {
    case CostFamily::Quadratic:
      return x.squaredNorm();
    case CostFamily::Power:
      return norm_pow(x, p.a);
    case CostFamily::Tracking:
      return norm_pow(x - p.b, p.a);
  }
  return 0.0;
}

void StageCostSpec::gradient(int t, const Vector& x, const Vector& u, Vector& gx, Vector& gu) const {
  const auto& p = at(t);
  switch (family_) {
    case CostFamily::Quadratic:
      gx = (p.Q + p.Q.transpose()) * x;
      gu = (p.R + p.R.transpose()) * u;
      return;
    case CostFamily::Power:
      gx = norm_pow_grad(x, p.a);
      gu = norm_pow_grad(u, p.a);
      return;
    case CostFamily::Tracking:
      gx = norm_pow_grad(x - p.b, p.a);
      gu = Vector::Zero(u.size());
      return;
  }
}

double StageCostSpec::declared_alpha() const {
  if (family_ != CostFamily::Quadratic) {
    return 1.0;
  }
  double alpha = std::numeric_limits<double>::infinity();
  for (const auto& p : params_) {
    alpha = std::min(alpha, min_eig_sym(p.Q));
  }
  return alpha;
}

double eval_stage(const StageCostSpec& spec, int t, const Vector& x, const Vector& u) { return spec.eval(t, x, u); }

double eval_sigma(const StageCostSpec& spec, const Vector& x) { return spec.sigma(x); }

TerminalCostSpec::TerminalCostSpec(Matrix p, double gamma, Vector off)
    : P(std::move(p)), Gamma(gamma), offset(std::move(off)) {
  if (P.rows() != P.cols()) {
    throw ContractError("terminal cost: P must be square");
  }
  if (offset.size() == 0) {
    offset = Vector::Zero(P.rows());
  }
  if (offset.size() != P.rows()) {
    throw ContractError("terminal cost: offset dimension mismatch");
  }
  if (!(Gamma >= 1.0)) {
    throw ContractError("terminal cost: Gamma must be >= 1");
  }
  if (min_eig_sym(P) <= 0.0) {
    throw ContractError("terminal cost: P must be positive definite");
  }
}

double TerminalCostSpec::d(const Vector& x) const {
  const Vector e = x - offset;
  return e.dot(P * e);
}

Vector TerminalCostSpec::grad_d(const Vector& x) const { return (P + P.transpose()) * (x - offset); }

double TerminalCostSpec::alpha_d() const { return min_eig_sym(P); }

Matrix discrete_lyapunov(const Matrix& A, const Matrix& Q) {
  const auto n = A.rows();
  // vec(A'PA) = (A' kron A') vec(P)
  Matrix K(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) = A(j, i) * A.transpose();
    }
  }
  const Matrix lhs = Matrix::Identity(n * n, n * n) - K;
  const Vector q = Eigen::Map<const Vector>(Q.data(), n * n);
  const Vector p = lhs.fullPivLu().solve(q);
  Matrix P = Eigen::Map<const Matrix>(p.data(), n, n);
  return 0.5 * (P + P.transpose());
}

namespace {

bool certifies(const Matrix& P, const std::vector<Matrix>& corners) {
  if (min_eig_sym(P) <= 0.0) {
    return false;
  }
  for (const auto& A : corners) {
    if (min_eig_sym(P - A.transpose() * P * A) < 1.0 - 1e-8) {
      return false;
    }
  }
  return true;
}

}  // namespace

TerminalCostSpec synth_terminal(const std::vector<Matrix>& corners, double Gamma, int max_iter) {
  if (corners.empty()) {
    throw ContractError("synth_terminal: empty corner list");
  }
  const auto n = corners.front().rows();
  std::size_t dominant = 0;
  double worst = -1.0;
  for (std::size_t i = 0; i < corners.size(); ++i) {
    if (corners[i].rows() != n || corners[i].cols() != n) {
      throw ContractError("synth_terminal: corner dimension mismatch");
    }
    const double rho = spectral_radius(corners[i]);
    if (!(rho < 1.0)) {
      throw ContractError("synth_terminal: every corner must be stable");
    }
    if (rho > worst) {
      worst = rho;
      dominant = i;
    }
  }

  const Matrix two_I = 2.0 * Matrix::Identity(n, n);
  Matrix P = discrete_lyapunov(corners[dominant], two_I);
  if (certifies(P, corners)) {
    return TerminalCostSpec(P, Gamma);
  }

  // Common P for all corners: fixed point of P = 2I + sum_i A_i' P A_i.
  P = two_I;
  for (int it = 0; it < max_iter; ++it) {
    Matrix next = two_I;
    for (const auto& A : corners) {
      next += A.transpose() * P * A;
    }
    const double change = (next - P).norm();
    P = 0.5 * (next + next.transpose());
    if (!P.allFinite()) {
      break;
    }
    if (change <= 1e-12 * (1.0 + P.norm()) && certifies(P, corners)) {
      return TerminalCostSpec(P, Gamma);
    }
  }
  if (P.allFinite() && certifies(P, corners)) {
    return TerminalCostSpec(P, Gamma);
  }
  throw NumericalError(
      "synth_terminal: no common Lyapunov matrix found within the iteration budget; "
      "use d = 0 with a horizon M > alpha_bar^2/alpha^2 + 1");
}

double terminal_weight_lower_bound(double alpha_bar, double alpha_c, double alpha, double alpha_d) {
  if (!(alpha > 0.0) || !(alpha_d > 0.0)) {
    throw ContractError("terminal_weight_lower_bound: alpha and alpha_d must be positive");
  }
  return std::max(1.0, alpha_bar * alpha_c / (alpha * alpha_d));
}

Assumption3Report verify_assumption3(const StageCostSpec& spec, double x_radius, const PolytopeU& U, int t_max,
                                     int samples, Rng& rng) {
  Assumption3Report rep;
  rep.declared_alpha = spec.declared_alpha();
  rep.alpha_hat = std::numeric_limits<double>::infinity();
  std::uniform_int_distribution<int> tdist(1, std::max(1, t_max));
  const Vector origin = Vector::Zero(spec.n());
  for (int s = 0; s < samples; ++s) {
    const Vector x = sample_ball(origin, x_radius, rng);
    const double sig = spec.sigma(x);
    if (sig <= 1e-14) {
      continue;
    }
    const Vector u = U.sample(rng);
    const double ratio = spec.eval(tdist(rng), x, u) / sig;
    rep.alpha_hat = std::min(rep.alpha_hat, ratio);
    ++rep.samples_used;
  }
  rep.flagged = rep.samples_used > 0 && rep.alpha_hat < rep.declared_alpha * (1.0 - 1e-12);
  return rep;
}

double estimate_lipschitz(const StageCostSpec& spec, double x_radius, const PolytopeU& U, int t_max, int samples,
                          Rng& rng) {
  std::uniform_int_distribution<int> tdist(1, std::max(1, t_max));
  const Vector origin = Vector::Zero(spec.n());
  double L = 0.0;
  for (int s = 0; s < samples; ++s) {
    const int t = tdist(rng);
    const Vector x1 = sample_ball(origin, x_radius, rng);
    const Vector x2 = sample_ball(origin, x_radius, rng);
    const Vector u1 = U.sample(rng);
    const Vector u2 = U.sample(rng);
    const double dist = (x1 - x2).norm() + (u1 - u2).norm();
    if (dist < 1e-12) {
      continue;
    }
    L = std::max(L, std::abs(spec.eval(t, x1, u1) - spec.eval(t, x2, u2)) / dist);
  }
  return L;
}

}  // namespace olrhc
