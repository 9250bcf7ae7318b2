#include "olrhc/explorer.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace olrhc {

InputWindow::InputWindow(int n, int m) : n_(n), m_(m) {
  if (n < 0 || m <= 0) {
    throw ContractError("InputWindow: need n >= 0 and m >= 1");
  }
}

void InputWindow::push(const Vector& u) {
  if (u.size() != m_) {
    throw ContractError("InputWindow: input dimension mismatch");
  }
  buf_.push_back(u);
  if (static_cast<int>(buf_.size()) > q() + n_) {
    buf_.pop_front();
  }
  ++pushed_;
}

Matrix InputWindow::matrix() const {
  if (!ready()) {
    throw ContractError("InputWindow: fewer than q + n inputs recorded");
  }
  const int qq = q();
  Matrix M(qq, qq);
  for (int c = 0; c < qq; ++c) {
    for (int b = 0; b <= n_; ++b) {
      M.block(b * m_, c, m_, 1) = buf_[static_cast<std::size_t>(c + b)];
    }
  }
  return M;
}

Vector InputWindow::partial_column() const {
  if (static_cast<int>(buf_.size()) < n_) {
    throw ContractError("InputWindow: fewer than n inputs recorded");
  }
  Vector p(n_ * m_);
  const std::size_t first = buf_.size() - static_cast<std::size_t>(n_);
  for (int b = 0; b < n_; ++b) {
    p.segment(b * m_, m_) = buf_[first + static_cast<std::size_t>(b)];
  }
  return p;
}

NullDirection null_direction(const InputWindow& window, bool strict) {
  const Matrix M = window.matrix();
  const int q = window.q();
  const int n = window.n();
  const int m = window.m();

  NullDirection nd;
  Eigen::JacobiSVD<Matrix> full(M);
  const auto& s = full.singularValues();
  nd.sigma_min_prev = s(q - 1);
  if (strict && !(s(q - 1) > 1e-10 * std::max(1.0, s(0)))) {
    throw ContractError("null_direction: previous window matrix is rank deficient");
  }
  if (q == 1) {
    nd.Wp = Vector::Ones(1);
  } else {
    const Matrix kept = M.rightCols(q - 1);
    Eigen::JacobiSVD<Matrix> svd(kept, Eigen::ComputeFullU);
    nd.Wp = svd.matrixU().col(q - 1);
  }
  nd.up = nd.Wp.tail(m);
  nd.up_zero = nd.up.norm() < 1e-10;
  if (n > 0) {
    nd.g = nd.Wp.head(n * m).dot(window.partial_column());
  }
  return nd;
}

std::string to_string(PerturbCase c) {
  switch (c) {
    case PerturbCase::NullFlag: return "null-flag";
    case PerturbCase::OrthogonalHat: return "orthogonal";
    case PerturbCase::Aligned: return "aligned";
    case PerturbCase::Reversed: return "reversed";
    case PerturbCase::ReversedDouble: return "reversed-double";
  }
  return "unknown";
}

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Perturbation perturb(const Vector& u_hat, const NullDirection& nd, double c_p) {
  if (!(c_p > 0.0)) {
    throw ContractError("perturb: c_p must be positive");
  }
  const double s = std::sqrt(c_p);
  const double uh_norm = u_hat.norm();
  const bool uh_zero = uh_norm < 1e-12;
  Vector e;
  if (!uh_zero) {
    e = u_hat / uh_norm;
  } else if (!nd.up_zero) {
    e = nd.up / nd.up.norm();
  } else {
    e = Vector::Unit(u_hat.size(), 0);
  }

  if (nd.up_zero) {
    return {s * e, PerturbCase::NullFlag};
  }
  const double g_perp = nd.up.dot(u_hat);
  if (uh_zero || std::abs(g_perp) <= 1e-12 * uh_norm) {
    const double sign_g = nd.g < 0.0 ? -1.0 : 1.0;
    return {sign_g * s * (nd.up / nd.up.norm()), PerturbCase::OrthogonalHat};
  }
  const double g_s = sgn(g_perp + nd.g) * sgn(g_perp);
  if (g_s < 0.0) {
    if (std::abs(uh_norm - s) >= s) {
      return {g_s * s * e, PerturbCase::Reversed};
    }
    return {2.0 * g_s * s * e, PerturbCase::ReversedDouble};
  }
  return {s * e, PerturbCase::Aligned};
}

ExcitationReport check_poe(const Matrix& gram, double gamma, double c_p, double t_i, int interval) {
  ExcitationReport r;
  r.interval = interval;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  r.lambda_min = es.eigenvalues()(0);
  r.bound = gamma * c_p * t_i;
  r.pass = r.lambda_min >= r.bound;
  return r;
}

ExcitationReport check_poe(std::span<const Vector> z, double gamma, double c_p, double t_i, int interval) {
  if (z.empty()) {
    throw ContractError("check_poe: empty history");
  }
  if (static_cast<double>(z.size()) < t_i) {
    throw ContractError("check_poe: history shorter than t_i");
  }
  const auto d = z.front().size();
  Matrix V = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < static_cast<std::size_t>(t_i); ++k) {
    V.noalias() += z[k] * z[k].transpose();
  }
  return check_poe(V, gamma, c_p, t_i, interval);
}

Vector periodic_excitation_input(int t, int n, int m, double scale) {
  if (t < 1) {
    throw ContractError("periodic_excitation_input: t must be >= 1");
  }
  Vector u = Vector::Zero(m);
  for (int j = m; j >= 1; --j) {
    if ((t - 1) % ((n + 1) * j) == 0) {
      u(j - 1) = scale;
      break;
    }
  }
  return u;
}

}  // namespace olrhc
