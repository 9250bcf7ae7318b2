#include "olrhc/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace olrhc {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kDykstraTol = 1e-10;
constexpr int kDykstraMaxSweeps = 200000;

// Calls fn on every k-subset of {0..p-1}.
void for_each_subset(int p, int k, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == k) {
      fn(idx);
      return;
    }
    for (int i = start; i <= p - (k - depth); ++i) {
      idx[static_cast<std::size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
}

}  // namespace

PolytopeU::PolytopeU(Matrix F, Vector b) : F_(std::move(F)), b_(std::move(b)) {
  if (F_.rows() != b_.size()) {
    throw ContractError("PolytopeU: F and b row counts differ");
  }
  if (F_.cols() == 0) {
    throw ContractError("PolytopeU: zero-dimensional input space");
  }
  analyse();
}

PolytopeU PolytopeU::box(const Vector& lo, const Vector& hi) {
  if (lo.size() != hi.size() || lo.size() == 0) {
    throw ContractError("PolytopeU::box: bound dimensions differ");
  }
  const auto m = lo.size();
  Matrix F(2 * m, m);
  F << Matrix::Identity(m, m), -Matrix::Identity(m, m);
  Vector b(2 * m);
  b << hi, -lo;
  PolytopeU U;
  U.F_ = std::move(F);
  U.b_ = std::move(b);
  U.is_box_ = true;
  U.lo_ = lo;
  U.hi_ = hi;
  U.empty_ = (lo.array() > hi.array()).any();
  if (!U.empty_) {
    // Corners are only needed for the norm bound; 2^m stays small at desk scale.
    const auto corners = Eigen::Index{1} << m;
    for (Eigen::Index c = 0; c < corners; ++c) {
      Vector v(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        v(j) = ((c >> j) & 1) != 0 ? hi(j) : lo(j);
      }
      U.max_norm_ = std::max(U.max_norm_, v.norm());
      U.vertices_.push_back(std::move(v));
    }
  }
  return U;
}

void PolytopeU::analyse() {
  const int m = dim();
  const int p = static_cast<int>(F_.rows());

  Eigen::FullPivLU<Matrix> lu(F_);
  if (lu.rank() < m) {
    throw ContractError("PolytopeU: F lacks full column rank, set is unbounded");
  }

  // Recession directions are extreme rays of {d : F d <= 0}; each one makes m-1
  // rows tight, so it spans the null space of some (m-1)-row subsystem.
  bool unbounded = false;
  for_each_subset(p, m - 1, [&](const std::vector<int>& rows) {
    if (unbounded) {
      return;
    }
    Matrix sub(static_cast<Eigen::Index>(rows.size()), m);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      sub.row(static_cast<Eigen::Index>(r)) = F_.row(rows[r]);
    }
    Vector d;
    if (rows.empty()) {
      if (m != 1) {
        return;
      }
      d = Vector::Ones(1);
    } else {
      Eigen::FullPivLU<Matrix> sublu(sub);
      const Matrix kernel = sublu.kernel();
      if (kernel.cols() != 1) {
        return;
      }
      d = kernel.col(0).normalized();
    }
    for (double sign : {1.0, -1.0}) {
      const Vector fd = F_ * (sign * d);
      if ((fd.array() <= 1e-12).all()) {
        unbounded = true;
      }
    }
  });
  if (unbounded) {
    throw ContractError("PolytopeU: constraint set is unbounded");
  }

  for_each_subset(p, m, [&](const std::vector<int>& rows) {
    Matrix sub(m, m);
    Vector rhs(m);
    for (int r = 0; r < m; ++r) {
      sub.row(r) = F_.row(rows[static_cast<std::size_t>(r)]);
      rhs(r) = b_(rows[static_cast<std::size_t>(r)]);
    }
    Eigen::FullPivLU<Matrix> sublu(sub);
    if (sublu.rank() < m) {
      return;
    }
    Vector v = sublu.solve(rhs);
    if ((F_ * v - b_).maxCoeff() <= kFeasTol * (1.0 + b_.cwiseAbs().maxCoeff())) {
      vertices_.push_back(std::move(v));
    }
  });

  empty_ = vertices_.empty();
  lo_ = Vector::Constant(m, std::numeric_limits<double>::infinity());
  hi_ = Vector::Constant(m, -std::numeric_limits<double>::infinity());
  for (const auto& v : vertices_) {
    lo_ = lo_.cwiseMin(v);
    hi_ = hi_.cwiseMax(v);
    max_norm_ = std::max(max_norm_, v.norm());
  }

  // Recognise explicit boxes written as [I; -I] so projection is exact.
  if (p == 2 * m && F_.topRows(m).isApprox(Matrix::Identity(m, m)) &&
      F_.bottomRows(m).isApprox(-Matrix::Identity(m, m))) {
    is_box_ = true;
    hi_ = b_.head(m);
    lo_ = -b_.tail(m);
  }
}

bool PolytopeU::contains(const Vector& u, double tol) const {
  if (empty_) {
    return false;
  }
  return ((F_ * u - b_).array() <= tol).all();
}

double PolytopeU::violation(const Vector& u) const {
  return (F_ * u - b_).cwiseMax(0.0).sum();
}

Vector PolytopeU::project(const Vector& u) const {
  if (u.size() != dim()) {
    throw ContractError("project: dimension mismatch");
  }
  if (empty_) {
    throw ContractError("project: constraint set is empty");
  }
  if (is_box_) {
    return u.cwiseMax(lo_).cwiseMin(hi_);
  }
  if (contains(u, 0.0)) {
    return u;
  }

  // Dykstra's alternating projections over the half-spaces.
  const auto p = F_.rows();
  Vector x = u;
  Matrix incr = Matrix::Zero(dim(), p);
  const Vector row_sq = F_.rowwise().squaredNorm();
  for (int sweep = 0; sweep < kDykstraMaxSweeps; ++sweep) {
    const Vector x_start = x;
    const Matrix incr_start = incr;
    for (Eigen::Index k = 0; k < p; ++k) {
      const Vector z = x + incr.col(k);
      const double excess = F_.row(k).dot(z) - b_(k);
      Vector proj = z;
      if (excess > 0.0) {
        proj -= (excess / row_sq(k)) * F_.row(k).transpose();
      }
      incr.col(k) = z - proj;
      x = proj;
    }
    // x alone can sit still for a sweep while the correction terms are still moving.
    if ((x - x_start).norm() <= kDykstraTol && (incr - incr_start).norm() <= kDykstraTol &&
        (F_ * x - b_).maxCoeff() <= kDykstraTol) {
      return x;
    }
  }
  throw NumericalError("project: Dykstra iteration budget exceeded");
}

Vector PolytopeU::sample(Rng& rng) const {
  if (empty_) {
    throw ContractError("sample: constraint set is empty");
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector v(dim());
  for (int attempt = 0; attempt < 100000; ++attempt) {
    for (int j = 0; j < dim(); ++j) {
      v(j) = lo_(j) + (hi_(j) - lo_(j)) * unif(rng);
    }
    if (contains(v, 0.0)) {
      return v;
    }
  }
  return vertices_.front();
}

Vector project_polytope(const Vector& u, const PolytopeU& U) { return U.project(u); }

}  // namespace olrhc
