#include "olrhc/linsys.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace olrhc {

SystemParams::SystemParams(Matrix a, Matrix b, double s) : A(std::move(a)), B(std::move(b)), S(s) {
  if (A.rows() != A.cols()) {
    throw ContractError("SystemParams: A must be square");
  }
  if (B.rows() != A.rows()) {
    throw ContractError("SystemParams: B must have as many rows as A");
  }
  if (!(S > 0.0)) {
    throw ContractError("SystemParams: S must be positive");
  }
}

Matrix SystemParams::theta() const {
  Matrix t(n(), n() + m());
  t << A, B;
  return t;
}

SystemParams SystemParams::from_theta(const Matrix& theta, int n, double S) {
  if (theta.rows() != n || theta.cols() <= n) {
    throw ContractError("from_theta: theta must be n x (n+m) with m >= 1");
  }
  return SystemParams(theta.leftCols(n), theta.rightCols(theta.cols() - n), S);
}

Vector step(const SystemParams& theta, const Vector& x, const Vector& u) {
  if (x.size() != theta.n() || u.size() != theta.m()) {
    std::ostringstream os;
    os << "step: expected x in R^" << theta.n() << " and u in R^" << theta.m() << ", got " << x.size()
       << " and " << u.size();
    throw ContractError(os.str());
  }
  return theta.A * x + theta.B * u;
}

Vector sample_ball(const Vector& center, double radius, Rng& rng) {
  const auto dim = center.size();
  if (radius <= 0.0 || dim == 0) {
    return center;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector dir(dim);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < dim; ++i) {
      dir(i) = normal(rng);
    }
    norm = dir.norm();
  } while (norm < 1e-300);
  const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
  // r can round to a hair above radius; keep the bound exact.
  return center + std::min(r, radius) * (dir / norm);
}

Vector observe(const Vector& x, const NoiseModel& noise, Rng& rng) {
  if (noise.kind == NoiseModel::Kind::Zero || noise.eps_c <= 0.0) {
    return x;
  }
  Vector y = sample_ball(x, noise.eps_c, rng);
  const double excess = (y - x).norm();
  if (excess > noise.eps_c) {
    y = x + (y - x) * (noise.eps_c / excess);
  }
  return y;
}

double spectral_radius(const Matrix& A) {
  if (A.size() == 0) {
    return 0.0;
  }
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

int controllability_rank(const Matrix& A, const Matrix& B, double rel_tol) {
  const auto n = A.rows();
  const auto m = B.cols();
  Matrix C(n, n * m);
  Matrix block = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    C.middleCols(k * m, m) = block;
    block = A * block;
  }
  Eigen::JacobiSVD<Matrix> svd(C);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) {
    return 0;
  }
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * s(0)) {
      ++rank;
    }
  }
  return rank;
}

std::string AdmissibilityReport::describe() const {
  std::ostringstream os;
  os << "rho=" << rho << (stable ? "" : " (unstable)") << ", ctrb_rank=" << ctrb_rank
     << (controllable ? "" : " (uncontrollable)") << ", ||theta||_F=" << fro_norm
     << (within_bound ? "" : " (exceeds S)");
  return os.str();
}

AdmissibilityReport check_admissible(const SystemParams& theta) {
  AdmissibilityReport r;
  r.rho = spectral_radius(theta.A);
  r.ctrb_rank = controllability_rank(theta.A, theta.B);
  r.fro_norm = theta.theta().norm();
  r.stable = r.rho < 1.0;
  r.controllable = r.ctrb_rank == theta.n();
  r.within_bound = r.fro_norm <= theta.S;
  return r;
}

bool in_theta_set(const Matrix& theta, int n, double S) {
  return theta.norm() <= S && spectral_radius(theta.leftCols(n)) < 1.0;
}

DecayConstants power_norm_decay(const Matrix& A, int horizon) {
  const double rho = spectral_radius(A);
  if (!(rho < 1.0)) {
    throw ContractError("power_norm_decay: requires spectral radius < 1");
  }
  auto fit = [&](double gamma, int& argmax) {
    double c = 0.0;
    Matrix P = Matrix::Identity(A.rows(), A.cols());
    double g = 1.0;
    argmax = 0;
    for (int k = 0; k <= horizon; ++k) {
      const double norm = P.operatorNorm();
      const double ratio = norm / g;
      if (ratio > c) {
        c = ratio;
        argmax = k;
      }
      P = P * A;
      g *= gamma;
      if (g < 1e-280) {
        break;
      }
    }
    return c;
  };

  int argmax = 0;
  if (rho > 1e-12) {
    const double c = fit(rho, argmax);
    // A ratio still peaking near the end of the window means a Jordan block
    // makes rho itself too tight a rate.
    if (argmax <= (3 * horizon) / 4) {
      return {std::max(1.0, c), rho};
    }
  }
  const double gamma = 0.5 * (1.0 + rho);
  const double c = fit(gamma, argmax);
  return {std::max(1.0, c), gamma};
}

}  // namespace olrhc
