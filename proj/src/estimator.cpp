#include "olrhc/estimator.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace olrhc {

DataLog::DataLog(int n, int m) : n_(n), m_(m) {
  if (n <= 0 || m <= 0) {
    throw ContractError("DataLog: dimensions must be positive");
  }
}

void DataLog::push_observation(const Vector& y) {
  if (y.size() != n_) {
    throw ContractError("DataLog: observation dimension mismatch");
  }
  ys_.push_back(y);
}

void DataLog::push_input(const Vector& u) {
  if (u.size() != m_) {
    throw ContractError("DataLog: input dimension mismatch");
  }
  if (us_.size() >= ys_.size()) {
    throw ContractError("DataLog: input u_k recorded before observation y_k");
  }
  us_.push_back(u);
}

const Vector& DataLog::y(int k) const {
  if (k < 1 || k > observations()) {
    throw ContractError("DataLog: observation index out of range");
  }
  return ys_[static_cast<std::size_t>(k - 1)];
}

const Vector& DataLog::u(int k) const {
  if (k < 1 || k > inputs()) {
    throw ContractError("DataLog: input index out of range");
  }
  return us_[static_cast<std::size_t>(k - 1)];
}

Vector DataLog::regressor(int k) const {
  Vector z(n_ + m_);
  z << y(k), u(k);
  return z;
}

Matrix ridge_fit(const DataLog& log, int t_end, double lambda, std::span<const int> excluded) {
  if (lambda < 0.0) {
    throw ContractError("ridge_fit: lambda must be >= 0");
  }
  if (t_end < 1 || log.observations() < t_end + 1 || log.inputs() < t_end) {
    throw ContractError("ridge_fit: log does not cover k = 1..t_end with y_{k+1}");
  }
  const int n = log.n();
  const int d = log.n() + log.m();
  std::vector<int> rows;
  rows.reserve(static_cast<std::size_t>(t_end));
  for (int k = 1; k <= t_end; ++k) {
    if (std::find(excluded.begin(), excluded.end(), k) == excluded.end()) {
      rows.push_back(k);
    }
  }
  const auto N = static_cast<Eigen::Index>(rows.size());
  const bool regularised = lambda > 0.0;
  Matrix Z = Matrix::Zero(N + (regularised ? d : 0), d);
  Matrix Y = Matrix::Zero(Z.rows(), n);
  for (Eigen::Index r = 0; r < N; ++r) {
    const int k = rows[static_cast<std::size_t>(r)];
    Z.row(r) = log.regressor(k).transpose();
    Y.row(r) = log.y(k + 1).transpose();
  }
  if (regularised) {
    Z.bottomRows(d) = std::sqrt(lambda) * Matrix::Identity(d, d);
  } else {
    const Matrix gram = Z.transpose() * Z;
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    if (N < d || es.eigenvalues().minCoeff() <= 1e-10) {
      throw NumericalError("ridge_fit: regressor Gram matrix is singular and lambda = 0");
    }
  }
  Eigen::HouseholderQR<Matrix> qr(Z);
  const Matrix theta_t = qr.solve(Y);  // (n+m) x n
  return theta_t.transpose();
}

RadiusResult confidence_radius(const RadiusInputs& in) {
  if (in.n <= 0 || in.m <= 0 || !(in.S > 0.0) || in.R < 0.0 || !(in.gamma > 0.0) || !(in.c_p > 0.0) ||
      !(in.t > 0.0) || in.lambda < 0.0) {
    throw ContractError("confidence_radius: arguments must be positive");
  }
  if (!(in.delta_tilde > 0.0 && in.delta_tilde < 1.0)) {
    throw ContractError("confidence_radius: delta_tilde must lie in (0, 1)");
  }
  if (!(in.gamma_y > 0.0)) {
    throw ContractError("confidence_radius: gamma_y must be positive");
  }
  const double log_term = (in.n + in.m) * std::log(std::sqrt(2.0)) - std::log(in.delta_tilde);
  RadiusResult out;
  out.R_tilde = 2.0 * in.n * (in.n + 1) * std::max(1.0, in.S) * in.R * std::sqrt(log_term);
  out.beta = out.R_tilde / std::sqrt(in.gamma * in.c_p * in.t) + in.lambda * in.S / in.gamma_y;
  return out;
}

GammaY gamma_y_formula(double gamma, int n, int m, double R, double H, double delta_tilde) {
  if (!(H >= 1.0)) {
    throw ContractError("gamma_y_formula: H must be >= 1");
  }
  const double log_term = (n + m) * std::log(std::sqrt(2.0)) - std::log(delta_tilde);
  const double value = gamma * (1.0 - (2.0 * n * R / std::sqrt(gamma * std::sqrt(H))) * std::sqrt(4.0 * log_term));
  if (value <= 0.0) {
    return {1e-6, true};
  }
  return {value, false};
}

bool ConfidenceSet::contains(const Matrix& theta) const {
  return (theta - center).norm() <= radius && theta.norm() <= S;
}

Matrix project_to_theta(const Matrix& theta, int n, double S) {
  Matrix out = theta;
  const double norm = out.norm();
  if (norm > S) {
    out *= S / norm;
    while (out.norm() > S) out *= 1.0 - 1e-15;  // rounding
  }
  const double rho = spectral_radius(out.leftCols(n));
  if (rho >= 1.0) {
    out.leftCols(n) *= (1.0 - 1e-6) / rho;
  }
  return out;
}

double simulate_interval_cost(const Matrix& theta, const Vector& x, const SelectionProblem& p, double abort_above) {
  const int n = static_cast<int>(x.size());
  HorizonSolver solver(p.solver);
  HorizonProblem hp;
  hp.A = theta.leftCols(n);
  hp.B = theta.rightCols(theta.cols() - n);
  hp.M = p.M;
  hp.costs = p.costs;
  hp.terminal = p.terminal;
  hp.U = p.U;
  hp.preview_end = p.t_end;
  Vector xt = x;
  double total = 0.0;
  for (int k = p.t_start; k <= p.t_end; ++k) {
    hp.x0 = xt;
    hp.t0 = k;
    const Vector w = first_input(solver.solve(hp));
    total += p.costs->eval(k, xt, w);
    if (total > abort_above) {
      return total;
    }
    xt = hp.A * xt + hp.B * w;
  }
  return total;
}

EstimateResult select_estimate(const SelectionProblem& p, Rng& rng) {
  if (p.confidence == nullptr || p.costs == nullptr || p.U == nullptr) {
    throw ContractError("select_estimate: confidence set, costs and constraint set are required");
  }
  if (p.K < 1 || p.L < 1 || p.t_end < p.t_start) {
    throw ContractError("select_estimate: need K, L >= 1 and a nonempty window");
  }
  const auto& conf = *p.confidence;
  const int n = conf.n;

  std::vector<Matrix> thetas;
  thetas.push_back(project_to_theta(conf.center, n, conf.S));
  const Vector centre_vec = Eigen::Map<const Vector>(conf.center.data(), conf.center.size());
  for (int k = 1; k < p.K; ++k) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const Vector draw = sample_ball(centre_vec, conf.radius, rng);
      Matrix cand = Eigen::Map<const Matrix>(draw.data(), conf.center.rows(), conf.center.cols());
      if (in_theta_set(cand, n, conf.S)) {
        thetas.push_back(std::move(cand));
        break;
      }
    }
  }
  std::vector<Vector> states{p.y_t};
  for (int l = 1; l < p.L; ++l) {
    states.push_back(sample_ball(p.y_t, p.eps_c, rng));
  }

  EstimateResult best;
  best.best_cost = std::numeric_limits<double>::infinity();
  bool found = false;
  for (const auto& th : thetas) {
    for (const auto& xs : states) {
      ++best.candidates_tried;
      double cost = 0.0;
      try {
        cost = simulate_interval_cost(th, xs, p, best.best_cost);
      } catch (const SolverError&) {
        ++best.candidates_discarded;
        continue;
      } catch (const NumericalError&) {
        ++best.candidates_discarded;
        continue;
      }
      if (!std::isfinite(cost)) {
        ++best.candidates_discarded;
        continue;
      }
      if (cost < best.best_cost) {
        best.best_cost = cost;
        best.theta_hat = th;
        best.x_hat = xs;
        found = true;
      }
    }
  }
  if (!found) {
    throw NumericalError("select_estimate: every candidate failed in the RHC simulation");
  }
  return best;
}

}  // namespace olrhc
