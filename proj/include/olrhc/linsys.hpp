#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace olrhc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Raised when a caller breaks a documented precondition (dimensions, ranges).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot deliver its postcondition.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Parameters theta = [A, B] of x_{t+1} = A x_t + B u_t, together with the
 * Frobenius bound S that defines the admissible set.
 */
struct SystemParams {
  Matrix A;
  Matrix B;
  double S = 1.0;

  SystemParams() = default;
  SystemParams(Matrix a, Matrix b, double s);

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  /// The stacked n x (n+m) parameter matrix [A, B].
  Matrix theta() const;
  static SystemParams from_theta(const Matrix& theta, int n, double S);
};

/// Bounded i.i.d. observation noise: uniform on the Euclidean ball of radius eps_c.
struct NoiseModel {
  enum class Kind { UniformBall, Zero };

  double eps_c = 0.0;
  Kind kind = Kind::UniformBall;

  /// Per-component sub-Gaussian constant. Bounded noise gives R = eps_c.
  double R() const { return kind == Kind::Zero ? 0.0 : eps_c; }
};

/// Exact noiseless transition A x + B u.
Vector step(const SystemParams& theta, const Vector& x, const Vector& u);

/// y = x + eps with ||eps||_2 <= eps_c.
Vector observe(const Vector& x, const NoiseModel& noise, Rng& rng);

/// Uniform sample from the ball {v : ||v - center||_2 <= radius}.
Vector sample_ball(const Vector& center, double radius, Rng& rng);

double spectral_radius(const Matrix& A);
int controllability_rank(const Matrix& A, const Matrix& B, double rel_tol = 1e-10);

struct AdmissibilityReport {
  double rho = 0.0;
  int ctrb_rank = 0;
  double fro_norm = 0.0;
  bool stable = false;
  bool controllable = false;
  bool within_bound = false;

  bool admissible() const { return stable && controllable && within_bound; }
  std::string describe() const;
};

AdmissibilityReport check_admissible(const SystemParams& theta);

/// Membership in Theta = {||theta||_F <= S, rho(A) < 1}.
bool in_theta_set(const Matrix& theta, int n, double S);

struct DecayConstants {
  double c_rho = 1.0;
  double gamma = 0.0;
};

/// Constants with ||A^k||_2 <= c_rho * gamma^k, checked for k <= horizon.
DecayConstants power_norm_decay(const Matrix& A, int horizon = 200);

}  // namespace olrhc
