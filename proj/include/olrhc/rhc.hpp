#pragma once

#include "olrhc/costs.hpp"
#include "olrhc/linsys.hpp"
#include "olrhc/polytope.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace olrhc {

/**
 * One finite-horizon instance
 *
 *   min_W  sum_{k=0}^{M-1} c_{t0+k}(x_k, w_k) + Gamma d(x_M)
 *   s.t.   x_{k+1} = A x_k + B w_k,  w_k in U,  x_0 = x0.
 *
 * Holds non-owning references; the referenced objects must outlive the call.
 * Stage costs for indices past preview_end reuse c_{preview_end}.
 */
struct HorizonProblem {
  Matrix A;
  Matrix B;
  Vector x0;
  int t0 = 1;
  int M = 1;
  const StageCostSpec* costs = nullptr;
  const TerminalCostSpec* terminal = nullptr;  // nullptr means d = 0
  const PolytopeU* U = nullptr;
  std::optional<int> preview_end;

  int cost_index(int k) const;
};

enum class SolveStatus { Converged, MaxIter, Infeasible };

std::string to_string(SolveStatus s);

struct ControlSequence {
  std::vector<Vector> w;
  double objective = 0.0;
  SolveStatus status = SolveStatus::Converged;
  int iterations = 0;
  double residual = 0.0;  // projected-gradient (gradient mapping) norm at exit
};

struct SolverOptions {
  double grad_tol = 1e-8;
  int max_iter = 10000;
  bool warm_start = true;
  bool finite_differences = false;  // central differences instead of adjoint gradients
  int starts = 3;                   // multi-start count for non-quadratic costs
  double tie_regularization = 1e-12;
  int condensed_limit = 256;        // above M*m, quadratic problems run matrix-free
};

/// Raised by first_input and the controllers when a solve does not converge.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, SolveStatus status) : std::runtime_error(what), status_(status) {}
  SolveStatus status() const { return status_; }

 private:
  SolveStatus status_;
};

/**
 * Projected-gradient solver for HorizonProblem.
 *
 * Quadratic costs are condensed into a QP in the stacked inputs (or handled
 * matrix-free for long horizons) and solved by monotone accelerated projected
 * gradient; an unconstrained minimiser that already lies in U is returned
 * directly. Other cost families use the same iteration with adjoint gradients,
 * backtracking, and several starting points. Keeps the previous solution for
 * warm starts, so one instance belongs to one sequential run.
 */
class HorizonSolver {
 public:
  explicit HorizonSolver(SolverOptions options = {});
  ~HorizonSolver();
  HorizonSolver(HorizonSolver&&) noexcept;
  HorizonSolver& operator=(HorizonSolver&&) noexcept;

  ControlSequence solve(const HorizonProblem& problem);
  void reset_warm_start() { warm_.clear(); }
  const SolverOptions& options() const { return options_; }

  /// Objective of a given input sequence (no tie-break regularisation).
  static double objective(const HorizonProblem& problem, const std::vector<Vector>& w);

 private:
  struct CondensedCache;

  ControlSequence solve_quadratic(const HorizonProblem& p, const Vector& start);
  ControlSequence solve_general(const HorizonProblem& p, const Vector& warm);
  Vector shifted_warm_start(const HorizonProblem& p) const;

  SolverOptions options_;
  std::vector<Vector> warm_;
  std::unique_ptr<CondensedCache> cache_;
};

/// One-shot convenience wrapper (no warm start).
ControlSequence solve_horizon(const HorizonProblem& problem, const SolverOptions& options = {});

/// Element 0 of a converged sequence; throws SolverError otherwise.
Vector first_input(const ControlSequence& seq);

}  // namespace olrhc
