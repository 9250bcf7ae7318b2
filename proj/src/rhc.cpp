#include "olrhc/rhc.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace olrhc {

int HorizonProblem::cost_index(int k) const {
  const int t = t0 + k;
  if (preview_end && t > *preview_end) {
    return std::max(*preview_end, t0);
  }
  return t;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::MaxIter:
      return "max-iter";
    case SolveStatus::Infeasible:
      return "infeasible";
  }
  return "unknown";
}

namespace {

using Projector = std::function<Vector(const Vector&)>;

// Objective and gradient over the stacked input vector U = [w_0; ...; w_{M-1}].
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual double value(const Vector& U) const = 0;
  virtual double value_grad(const Vector& U, Vector& g) const = 0;
};

// Forward simulation plus adjoint recursion; works for every cost family.
class AdjointEvaluator final : public Evaluator {
 public:
  AdjointEvaluator(const HorizonProblem& p, double reg, bool finite_differences, bool zero_x0 = false)
      : p_(p), reg_(reg), fd_(finite_differences), zero_x0_(zero_x0) {}

  double value(const Vector& U) const override {
    const int m = static_cast<int>(p_.B.cols());
    Vector x = zero_x0_ ? Vector::Zero(p_.x0.size()) : p_.x0;
    double J = 0.0;
    for (int k = 0; k < p_.M; ++k) {
      const auto w = U.segment(static_cast<Eigen::Index>(k) * m, m);
      J += p_.costs->eval(p_.cost_index(k), x, w);
      x = p_.A * x + p_.B * w;
    }
    if (p_.terminal != nullptr) {
      J += p_.terminal->Gamma * p_.terminal->d(x);
    }
    return J + reg_ * U.squaredNorm();
  }

  double value_grad(const Vector& U, Vector& g) const override {
    if (fd_) {
      return fd_grad(U, g);
    }
    const int n = static_cast<int>(p_.A.rows());
    const int m = static_cast<int>(p_.B.cols());
    std::vector<Vector> xs(static_cast<std::size_t>(p_.M) + 1);
    xs[0] = zero_x0_ ? Vector::Zero(n) : p_.x0;
    double J = 0.0;
    for (int k = 0; k < p_.M; ++k) {
      const auto w = U.segment(static_cast<Eigen::Index>(k) * m, m);
      const auto& x = xs[static_cast<std::size_t>(k)];
      J += p_.costs->eval(p_.cost_index(k), x, w);
      xs[static_cast<std::size_t>(k) + 1] = p_.A * x + p_.B * w;
    }
    Vector lambda = Vector::Zero(n);
    if (p_.terminal != nullptr) {
      const auto& xM = xs.back();
      J += p_.terminal->Gamma * p_.terminal->d(xM);
      lambda = p_.terminal->Gamma * p_.terminal->grad_d(xM);
    }
    g.resize(U.size());
    Vector gx;
    Vector gu;
    for (int k = p_.M - 1; k >= 0; --k) {
      const auto w = U.segment(static_cast<Eigen::Index>(k) * m, m);
      p_.costs->gradient(p_.cost_index(k), xs[static_cast<std::size_t>(k)], w, gx, gu);
      g.segment(static_cast<Eigen::Index>(k) * m, m) = gu + p_.B.transpose() * lambda;
      lambda = gx + p_.A.transpose() * lambda;
    }
    g += 2.0 * reg_ * U;
    return J + reg_ * U.squaredNorm();
  }

 private:
  double fd_grad(const Vector& U, Vector& g) const {
    const double h = 1e-6 * (1.0 + U.norm());
    g.resize(U.size());
    Vector probe = U;
    for (Eigen::Index i = 0; i < U.size(); ++i) {
      probe(i) = U(i) + h;
      const double up = value(probe);
      probe(i) = U(i) - h;
      const double down = value(probe);
      probe(i) = U(i);
      g(i) = (up - down) / (2.0 * h);
    }
    return value(U);
  }

  const HorizonProblem& p_;
  double reg_;
  bool fd_;
  bool zero_x0_;
};

// J(U) = 0.5 U'HU + f'U + c
class CondensedEvaluator final : public Evaluator {
 public:
  CondensedEvaluator(const Matrix& H, Vector f, double c) : H_(H), f_(std::move(f)), c_(c) {}

  double value(const Vector& U) const override { return 0.5 * U.dot(H_ * U) + f_.dot(U) + c_; }

  double value_grad(const Vector& U, Vector& g) const override {
    const Vector HU = H_ * U;
    g = HU + f_;
    return 0.5 * U.dot(HU) + f_.dot(U) + c_;
  }

 private:
  const Matrix& H_;
  Vector f_;
  double c_;
};

struct PgResult {
  Vector U;
  double J = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Monotone accelerated projected gradient with function-value restart and
// optional backtracking on the Lipschitz estimate L.
PgResult accelerated_pg(const Evaluator& ev, const Projector& proj, const Vector& start, double L, bool fixed_L,
                        double tol, int max_iter) {
  PgResult res;
  Vector x = proj(start);
  Vector gx;
  double Jx = ev.value_grad(x, gx);
  Vector x_prev = x;
  Vector y = x;
  Vector gy = gx;
  double Jy = Jx;
  double t = 1.0;
  int stalled = 0;

  auto residual_at = [&](const Vector& pt, const Vector& g) { return L * (pt - proj(pt - g / L)).norm(); };

  res.residual = residual_at(x, gx);
  if (res.residual <= tol) {
    res.U = x;
    res.J = Jx;
    res.converged = true;
    return res;
  }

  for (int it = 1; it <= max_iter; ++it) {
    res.iterations = it;
    Vector z;
    double Jz = 0.0;
    bool backtracked = false;
    for (int bt = 0; bt < 60; ++bt) {
      z = proj(y - gy / L);
      Jz = ev.value(z);
      const Vector d = z - y;
      if (fixed_L || Jz <= Jy + gy.dot(d) + 0.5 * L * d.squaredNorm() + 1e-14 * (1.0 + std::abs(Jy))) {
        break;
      }
      L *= 2.0;
      backtracked = true;
    }

    const double before = Jx;
    if (Jz <= Jx) {
      x_prev = x;
      x = z;
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x + ((t - 1.0) / t_next) * (x - x_prev);
      t = t_next;
      Jx = ev.value_grad(x, gx);
    } else {
      // Momentum overshot: restart from the incumbent.
      t = 1.0;
      y = x;
    }

    res.residual = residual_at(x, gx);
    if (res.residual <= tol) {
      res.converged = true;
      break;
    }
    // No representable descent left: the incumbent is stationary to machine precision.
    stalled = (before - Jx <= 1e-15 * (1.0 + std::abs(Jx))) ? stalled + 1 : 0;
    if (stalled >= 50) {
      res.converged = true;
      break;
    }

    if (y.isApprox(x, 0.0)) {
      gy = gx;
      Jy = Jx;
    } else {
      Jy = ev.value_grad(y, gy);
    }
    if (!fixed_L && !backtracked) {
      L *= 0.9;
    }
  }
  res.U = x;
  res.J = Jx;
  return res;
}

Vector stack(const std::vector<Vector>& w) {
  if (w.empty()) {
    return {};
  }
  const auto m = w.front().size();
  Vector U(static_cast<Eigen::Index>(w.size()) * m);
  for (std::size_t k = 0; k < w.size(); ++k) {
    U.segment(static_cast<Eigen::Index>(k) * m, m) = w[k];
  }
  return U;
}

std::vector<Vector> unstack(const Vector& U, int m) {
  std::vector<Vector> w(static_cast<std::size_t>(U.size() / m));
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = U.segment(static_cast<Eigen::Index>(k) * m, m);
  }
  return w;
}

Projector block_projector(const PolytopeU& U, int m) {
  return [&U, m](const Vector& v) {
    Vector out(v.size());
    for (Eigen::Index k = 0; k < v.size() / m; ++k) {
      out.segment(k * m, m) = U.project(v.segment(k * m, m));
    }
    return out;
  };
}

bool blocks_feasible(const Vector& v, const PolytopeU& U, int m) {
  for (Eigen::Index k = 0; k < v.size() / m; ++k) {
    if (!U.contains(v.segment(k * m, m), 0.0)) {
      return false;
    }
  }
  return true;
}

void validate(const HorizonProblem& p) {
  if (p.costs == nullptr || p.U == nullptr) {
    throw ContractError("HorizonProblem: costs and constraint set are required");
  }
  if (p.M < 1) {
    throw ContractError("HorizonProblem: horizon M must be >= 1");
  }
  const auto n = p.A.rows();
  if (p.A.cols() != n || p.B.rows() != n || p.x0.size() != n) {
    throw ContractError("HorizonProblem: inconsistent A, B, x0 dimensions");
  }
  if (p.B.cols() != p.U->dim() || p.costs->n() != n || p.costs->m() != p.B.cols()) {
    throw ContractError("HorizonProblem: cost / constraint dimensions do not match the model");
  }
  if (p.terminal != nullptr && p.terminal->P.rows() != n) {
    throw ContractError("HorizonProblem: terminal cost dimension mismatch");
  }
}

}  // namespace

struct HorizonSolver::CondensedCache {
  Matrix A;
  Matrix B;
  int M = 0;
  std::vector<Matrix> Qs;
  std::vector<Matrix> Rs;
  Matrix Pterm;
  double reg = 0.0;

  Matrix H;
  Matrix F;  // linear term f = F x0
  Matrix G;  // constant term c = x0' G x0
  Eigen::LLT<Matrix> llt;
  double L = 1.0;

  bool matches(const HorizonProblem& p, const std::vector<Matrix>& qs, const std::vector<Matrix>& rs,
               const Matrix& pterm, double r) const {
    return M == p.M && reg == r && A == p.A && B == p.B && Qs == qs && Rs == rs && Pterm == pterm;
  }
};

HorizonSolver::HorizonSolver(SolverOptions options) : options_(options) {}
HorizonSolver::~HorizonSolver() = default;
HorizonSolver::HorizonSolver(HorizonSolver&&) noexcept = default;
HorizonSolver& HorizonSolver::operator=(HorizonSolver&&) noexcept = default;

double HorizonSolver::objective(const HorizonProblem& problem, const std::vector<Vector>& w) {
  validate(problem);
  if (static_cast<int>(w.size()) != problem.M) {
    throw ContractError("objective: sequence length differs from M");
  }
  AdjointEvaluator ev(problem, 0.0, false);
  return ev.value(stack(w));
}

Vector HorizonSolver::shifted_warm_start(const HorizonProblem& p) const {
  const int m = static_cast<int>(p.B.cols());
  if (!options_.warm_start || static_cast<int>(warm_.size()) != p.M || warm_.front().size() != m) {
    return Vector::Zero(static_cast<Eigen::Index>(p.M) * m);
  }
  std::vector<Vector> shifted(warm_.begin() + 1, warm_.end());
  shifted.push_back(warm_.back());
  return stack(shifted);
}

ControlSequence HorizonSolver::solve(const HorizonProblem& problem) {
  validate(problem);
  if (problem.U->empty()) {
    ControlSequence out;
    out.status = SolveStatus::Infeasible;
    return out;
  }
  const Vector warm = shifted_warm_start(problem);
  const bool quadratic = problem.costs->family() == CostFamily::Quadratic &&
                         (problem.terminal == nullptr || problem.terminal->offset.isZero(0.0));
  ControlSequence out = quadratic ? solve_quadratic(problem, warm) : solve_general(problem, warm);
  if (options_.warm_start && out.status != SolveStatus::Infeasible) {
    warm_ = out.w;
  }
  return out;
}

ControlSequence HorizonSolver::solve_quadratic(const HorizonProblem& p, const Vector& start) {
  const int n = static_cast<int>(p.A.rows());
  const int m = static_cast<int>(p.B.cols());
  const int dim = p.M * m;
  const double reg = options_.tie_regularization;
  const Projector proj = block_projector(*p.U, m);
  ControlSequence out;

  auto finish = [&](const Vector& U, int iters, double residual, bool converged) {
    out.w = unstack(U, m);
    out.objective = objective(p, out.w);
    out.iterations = iters;
    out.residual = residual;
    out.status = converged ? SolveStatus::Converged : SolveStatus::MaxIter;
    return out;
  };

  if (dim > options_.condensed_limit) {
    // Matrix-free: Hessian products come from the adjoint with x0 = 0.
    AdjointEvaluator ev(p, reg, false);
    AdjointEvaluator hess(p, reg, false, true);
    const Vector zero = Vector::Zero(dim);
    Vector f;
    ev.value_grad(zero, f);
    auto Hv = [&](const Vector& v) {
      Vector g;
      hess.value_grad(v, g);
      return g;
    };

    // Unconstrained minimiser by conjugate gradients.
    Vector U = Vector::Zero(dim);
    Vector r = -f;
    Vector d = r;
    double rr = r.squaredNorm();
    const double stop = 1e-28 * std::max(1.0, f.squaredNorm());
    for (int it = 0; it < 4 * dim && rr > stop; ++it) {
      const Vector Hd = Hv(d);
      const double alpha = rr / d.dot(Hd);
      U += alpha * d;
      r -= alpha * Hd;
      const double rr_next = r.squaredNorm();
      d = r + (rr_next / rr) * d;
      rr = rr_next;
    }
    if (blocks_feasible(U, *p.U, m)) {
      return finish(U, 0, 0.0, true);
    }

    // Largest Hessian eigenvalue by power iteration.
    Vector v = Vector::Ones(dim) / std::sqrt(static_cast<double>(dim));
    double lmax = 1.0;
    for (int it = 0; it < 100; ++it) {
      Vector w = Hv(v);
      const double norm = w.norm();
      if (norm == 0.0) {
        break;
      }
      lmax = norm;
      v = w / norm;
    }
    const double tol = options_.grad_tol * (1.0 + f.norm());
    const auto pg = accelerated_pg(ev, proj, start, 1.05 * lmax, false, tol, options_.max_iter);
    return finish(pg.U, pg.iterations, pg.residual, pg.converged);
  }

  std::vector<Matrix> qs;
  std::vector<Matrix> rs;
  qs.reserve(static_cast<std::size_t>(p.M));
  rs.reserve(static_cast<std::size_t>(p.M));
  for (int k = 0; k < p.M; ++k) {
    const auto& sp = p.costs->at(p.cost_index(k));
    qs.push_back(sp.Q);
    rs.push_back(sp.R);
  }
  const Matrix pterm = p.terminal != nullptr ? Matrix(p.terminal->Gamma * p.terminal->P) : Matrix::Zero(n, n);

  if (!cache_ || !cache_->matches(p, qs, rs, pterm, reg)) {
    auto c = std::make_unique<CondensedCache>();
    c->A = p.A;
    c->B = p.B;
    c->M = p.M;
    c->Qs = qs;
    c->Rs = rs;
    c->Pterm = pterm;
    c->reg = reg;

    const int rows = (p.M + 1) * n;
    Matrix Sx(rows, n);
    Matrix Su = Matrix::Zero(rows, dim);
    Matrix Ak = Matrix::Identity(n, n);
    std::vector<Matrix> AkB;  // A^j B
    AkB.reserve(static_cast<std::size_t>(p.M));
    for (int k = 0; k <= p.M; ++k) {
      Sx.middleRows(k * n, n) = Ak;
      if (k < p.M) {
        AkB.push_back(Ak * p.B);
      }
      Ak = Ak * p.A;
    }
    for (int k = 1; k <= p.M; ++k) {
      for (int j = 0; j < k; ++j) {
        Su.block(k * n, j * m, n, m) = AkB[static_cast<std::size_t>(k - 1 - j)];
      }
    }
    Matrix QSu(rows, dim);
    Matrix QSx(rows, n);
    for (int k = 0; k <= p.M; ++k) {
      const Matrix& Qk = k < p.M ? qs[static_cast<std::size_t>(k)] : pterm;
      QSu.middleRows(k * n, n) = Qk * Su.middleRows(k * n, n);
      QSx.middleRows(k * n, n) = Qk * Sx.middleRows(k * n, n);
    }
    c->H = 2.0 * (Su.transpose() * QSu);
    for (int k = 0; k < p.M; ++k) {
      c->H.block(k * m, k * m, m, m) += 2.0 * rs[static_cast<std::size_t>(k)];
    }
    c->H.diagonal().array() += 2.0 * reg;
    c->H = 0.5 * (c->H + c->H.transpose());
    c->F = 2.0 * (Su.transpose() * QSx);
    c->G = Sx.transpose() * QSx;
    c->G = 0.5 * (c->G + c->G.transpose());
    c->llt.compute(c->H);
    Eigen::SelfAdjointEigenSolver<Matrix> es(c->H, Eigen::EigenvaluesOnly);
    c->L = es.eigenvalues().maxCoeff();
    cache_ = std::move(c);
  }

  const Vector f = cache_->F * p.x0;
  const double c0 = p.x0.dot(cache_->G * p.x0);
  const Vector unconstrained = cache_->llt.solve(-f);
  if (blocks_feasible(unconstrained, *p.U, m)) {
    return finish(unconstrained, 0, 0.0, true);
  }
  CondensedEvaluator ev(cache_->H, f, c0);
  const double tol = options_.grad_tol * (1.0 + f.norm());
  const auto pg = accelerated_pg(ev, proj, start, cache_->L, true, tol, options_.max_iter);
  return finish(pg.U, pg.iterations, pg.residual, pg.converged);
}

ControlSequence HorizonSolver::solve_general(const HorizonProblem& p, const Vector& warm) {
  const int m = static_cast<int>(p.B.cols());
  const int dim = p.M * m;
  const Projector proj = block_projector(*p.U, m);
  const Projector identity = [](const Vector& v) { return v; };
  AdjointEvaluator ev(p, options_.tie_regularization, options_.finite_differences);

  std::vector<Vector> starts;
  const bool have_warm = options_.warm_start && !warm.isZero(0.0);
  if (have_warm) {
    starts.push_back(warm);
  }
  starts.push_back(Vector::Zero(dim));
  if (static_cast<int>(starts.size()) < options_.starts) {
    const auto free = accelerated_pg(ev, identity, Vector::Zero(dim), 1.0, false, options_.grad_tol, 500);
    starts.push_back(free.U);
  }
  if (static_cast<int>(starts.size()) > std::max(1, options_.starts)) {
    starts.resize(static_cast<std::size_t>(std::max(1, options_.starts)));
  }

  Vector g0;
  ev.value_grad(proj(starts.front()), g0);
  const double tol = options_.grad_tol * (1.0 + g0.norm());

  PgResult best;
  bool have_best = false;
  int total_iters = 0;
  for (const auto& s : starts) {
    auto pg = accelerated_pg(ev, proj, s, 1.0, false, tol, options_.max_iter);
    total_iters += pg.iterations;
    if (!have_best) {
      best = std::move(pg);
      have_best = true;
      continue;
    }
    const double tie = 1e-12 * (1.0 + std::abs(best.J));
    const bool better = pg.J < best.J - tie || (std::abs(pg.J - best.J) <= tie && pg.U.norm() < best.U.norm());
    if (better) {
      best = std::move(pg);
    }
  }

  ControlSequence out;
  out.w = unstack(best.U, m);
  out.objective = objective(p, out.w);
  out.iterations = total_iters;
  out.residual = best.residual;
  out.status = best.converged ? SolveStatus::Converged : SolveStatus::MaxIter;
  return out;
}

ControlSequence solve_horizon(const HorizonProblem& problem, const SolverOptions& options) {
  SolverOptions opts = options;
  opts.warm_start = false;
  HorizonSolver solver(opts);
  return solver.solve(problem);
}

Vector first_input(const ControlSequence& seq) {
  if (seq.status != SolveStatus::Converged || seq.w.empty()) {
    throw SolverError("first_input: solver status " + to_string(seq.status), seq.status);
  }
  return seq.w.front();
}

}  // namespace olrhc
