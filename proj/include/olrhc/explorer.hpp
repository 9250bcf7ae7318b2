#pragma once

#include "olrhc/linsys.hpp"

#include <deque>
#include <span>
#include <string>

namespace olrhc {

/**
 * Sliding record of the last q + n applied inputs, q = (n+1)m.
 *
 * W_k = [u_k; ...; u_{k+n}] in R^q. With t the number of inputs pushed so far,
 * matrix() = [W_{t-n-q+1}, ..., W_{t-n}]; the newest column is the last one.
 */
class InputWindow {
 public:
  InputWindow(int n, int m);

  int n() const { return n_; }
  int m() const { return m_; }
  int q() const { return (n_ + 1) * m_; }
  int pushed() const { return pushed_; }
  /// True once q + n inputs are available, i.e. matrix() is defined.
  bool ready() const { return static_cast<int>(buf_.size()) == q() + n_; }

  void push(const Vector& u);
  Matrix matrix() const;
  /// The n most recent inputs stacked oldest first (the known head of the next column).
  Vector partial_column() const;

 private:
  int n_;
  int m_;
  int pushed_ = 0;
  std::deque<Vector> buf_;
};

struct NullDirection {
  Vector Wp;             // unit, orthogonal to the q-1 newest columns of the window
  Vector up;             // final m-block of Wp
  bool up_zero = false;  // ||up|| < 1e-10
  double g = 0.0;        // sum_j (Wp block j)^T u_{t-n+j}, j < n
  double sigma_min_prev = 0.0;  // smallest singular value of the window before the drop
};

/**
 * Null direction for the next step. Drops the oldest column of the current
 * window and returns the unit vector orthogonal to the remaining q-1 columns.
 * A window whose relative smallest singular value is below 1e-10 is an
 * invariant breach: ContractError when strict, otherwise the direction is
 * still returned (any unit vector orthogonal to the kept columns).
 */
NullDirection null_direction(const InputWindow& window, bool strict = true);

enum class PerturbCase { NullFlag, OrthogonalHat, Aligned, Reversed, ReversedDouble };

std::string to_string(PerturbCase c);

struct Perturbation {
  Vector du;
  PerturbCase which = PerturbCase::Aligned;
};

/// Sign/magnitude table applied to u_hat given the null direction.
Perturbation perturb(const Vector& u_hat, const NullDirection& nd, double c_p);

struct ExcitationReport {
  int interval = 0;
  double lambda_min = 0.0;
  double bound = 0.0;
  bool pass = false;
};

/// lambda_min(V) against gamma * c_p * t_i.
ExcitationReport check_poe(const Matrix& gram, double gamma, double c_p, double t_i, int interval = 0);
ExcitationReport check_poe(std::span<const Vector> z, double gamma, double c_p, double t_i, int interval = 0);

/// scale * e_j with j the largest index in 1..m such that (t-1) mod ((n+1) j) == 0; zero if none.
Vector periodic_excitation_input(int t, int n, int m, double scale);

}  // namespace olrhc
