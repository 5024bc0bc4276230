#pragma once

#include "statsvd/tensor.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace statsvd {

inline constexpr double kOrthonormalTolerance = 1e-10;

/// p x r matrix with orthonormal columns (r <= p).
template <typename Scalar>
class OrthonormalFrame {
 public:
  OrthonormalFrame() = default;

  /// Throws std::invalid_argument unless max |U^T U - I| <= kOrthonormalTolerance.
  explicit OrthonormalFrame(MatrixX<Scalar> m) : m_(std::move(m)) {
    if (m_.cols() == 0 || m_.cols() > m_.rows())
      throw std::invalid_argument("OrthonormalFrame: need 1 <= cols <= rows, got " + std::to_string(m_.rows()) +
                                  "x" + std::to_string(m_.cols()));
    if (!m_.allFinite()) throw std::invalid_argument("OrthonormalFrame: non-finite entry");
    const Scalar dev = orthonormality_defect(m_);
    if (!(dev <= Scalar(kOrthonormalTolerance)))
      throw std::invalid_argument("OrthonormalFrame: columns not orthonormal (defect " + std::to_string(dev) + ")");
  }

  static OrthonormalFrame identity(Index p) { return OrthonormalFrame(MatrixX<Scalar>::Identity(p, p)); }
  /// First r standard basis vectors of R^p.
  static OrthonormalFrame canonical(Index p, Index r) { return OrthonormalFrame(MatrixX<Scalar>::Identity(p, r)); }

  static Scalar orthonormality_defect(const MatrixX<Scalar>& m) {
    return (m.transpose() * m - MatrixX<Scalar>::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff();
  }

  const MatrixX<Scalar>& matrix() const { return m_; }
  Index rows() const { return m_.rows(); }
  Index cols() const { return m_.cols(); }

  /// Rows holding at least one nonzero entry, ascending.
  std::vector<Index> support() const {
    std::vector<Index> rows;
    for (Index i = 0; i < m_.rows(); ++i)
      if ((m_.row(i).array() != Scalar(0)).any()) rows.push_back(i);
    return rows;
  }

  friend bool operator==(const OrthonormalFrame& a, const OrthonormalFrame& b) {
    return a.m_.rows() == b.m_.rows() && a.m_.cols() == b.m_.cols() && a.m_ == b.m_;
  }

 private:
  MatrixX<Scalar> m_;
};

using Frame = OrthonormalFrame<double>;

template <typename Scalar>
struct QrResult {
  MatrixX<Scalar> q;
  MatrixX<Scalar> r;
  // Number of columns replaced by standard-basis completion.
  Index completed = 0;
};

/// Thin QR by classical Gram-Schmidt with one reorthogonalization pass.
/// R has a nonnegative diagonal. A column whose residual falls below
/// 1e-12 times the largest column norm is replaced by the lowest-index
/// standard basis vector not already in the span, with a zero R diagonal.
template <typename Derived>
QrResult<typename Derived::Scalar> qr_thin(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const Index p = a.rows();
  const Index r = a.cols();
  if (r == 0 || r > p) throw std::invalid_argument("qr_thin: need 1 <= cols <= rows");
  if (!a.allFinite()) throw std::invalid_argument("qr_thin: non-finite input");
  QrResult<Scalar> out{MatrixX<Scalar>::Zero(p, r), MatrixX<Scalar>::Zero(r, r), 0};
  const Scalar scale = a.colwise().norm().maxCoeff();
  const Scalar tiny = Scalar(1e-12) * scale;
  Index next_basis = 0;
  for (Index j = 0; j < r; ++j) {
    VectorX<Scalar> v = a.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      if (j == 0) break;
      const VectorX<Scalar> h = out.q.leftCols(j).transpose() * v;
      out.r.col(j).head(j) += h;
      v.noalias() -= out.q.leftCols(j) * h;
    }
    Scalar nv = v.norm();
    if (nv > tiny && nv > Scalar(0)) {
      out.r(j, j) = nv;
      out.q.col(j) = v / nv;
      continue;
    }
    out.r(j, j) = Scalar(0);
    ++out.completed;
    for (; next_basis < p; ++next_basis) {
      VectorX<Scalar> e = VectorX<Scalar>::Unit(p, next_basis);
      for (int pass = 0; pass < 2 && j > 0; ++pass) e.noalias() -= out.q.leftCols(j) * (out.q.leftCols(j).transpose() * e);
      const Scalar ne = e.norm();
      if (ne > Scalar(0.5)) {
        out.q.col(j) = e / ne;
        ++next_basis;
        break;
      }
    }
  }
  return out;
}

/// Orthonormal basis of col(a), completed with standard basis vectors when a is rank deficient.
template <typename Derived>
OrthonormalFrame<typename Derived::Scalar> qr_orthonormalize(const Eigen::MatrixBase<Derived>& a) {
  return OrthonormalFrame<typename Derived::Scalar>(qr_thin(a).q);
}

template <typename Scalar>
struct SvdResult {
  OrthonormalFrame<Scalar> left;
  VectorX<Scalar> values;
  OrthonormalFrame<Scalar> right;
  // sigma_r and sigma_{r+1} coincide (relative 1e-12); the split is then arbitrary but deterministic.
  bool boundary_tie = false;
};

namespace detail {

// Flip so the largest-magnitude entry is positive (lowest index wins ties).
template <typename Scalar>
bool needs_flip(const Eigen::Ref<const VectorX<Scalar>>& v) {
  Index best = 0;
  Scalar best_abs = -1;
  for (Index i = 0; i < v.size(); ++i) {
    const Scalar a = std::abs(v[i]);
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  return v[best] < Scalar(0);
}

template <typename Scalar>
MatrixX<Scalar> repair_orthonormal(MatrixX<Scalar> m) {
  if (OrthonormalFrame<Scalar>::orthonormality_defect(m) <= Scalar(1e-12)) return m;
  return qr_thin(m).q;
}

}  // namespace detail

/// All singular values, nonincreasing.
template <typename Derived>
VectorX<typename Derived::Scalar> singular_values(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (!m.allFinite()) throw std::invalid_argument("singular_values: non-finite input");
  if (m.size() == 0) return VectorX<Scalar>();
  Eigen::BDCSVD<MatrixX<Scalar>> svd(m);
  return svd.singularValues();
}

/// Top-r singular triplets of m, singular values nonincreasing.
///
/// Each left singular vector is signed so its largest-magnitude entry is
/// positive (lowest index on ties); the paired right vector follows. The zero
/// matrix maps to canonical frames. Rank-deficient inputs return frames whose
/// trailing columns complete the span orthonormally.
template <typename Derived>
SvdResult<typename Derived::Scalar> svd_leading(const Eigen::MatrixBase<Derived>& m, Index r) {
  using Scalar = typename Derived::Scalar;
  const Index mn = std::min(m.rows(), m.cols());
  if (r < 1 || r > mn)
    throw std::invalid_argument("svd_leading: rank " + std::to_string(r) + " outside [1, " + std::to_string(mn) + "]");
  if (!m.allFinite()) throw std::invalid_argument("svd_leading: non-finite input");

  if (m.cwiseAbs().maxCoeff() == Scalar(0)) {
    return {OrthonormalFrame<Scalar>::canonical(m.rows(), r), VectorX<Scalar>::Zero(r),
            OrthonormalFrame<Scalar>::canonical(m.cols(), r), r < mn};
  }

  Eigen::BDCSVD<MatrixX<Scalar>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorX<Scalar>& s = svd.singularValues();
  MatrixX<Scalar> u = svd.matrixU().leftCols(r);
  MatrixX<Scalar> v = svd.matrixV().leftCols(r);
  for (Index j = 0; j < r; ++j) {
    if (detail::needs_flip<Scalar>(u.col(j))) {
      u.col(j) = -u.col(j);
      v.col(j) = -v.col(j);
    }
  }
  bool tie = false;
  if (r < mn) tie = std::abs(s[r - 1] - s[r]) <= Scalar(1e-12) * s[0];
  return {OrthonormalFrame<Scalar>(detail::repair_orthonormal(std::move(u))), s.head(r),
          OrthonormalFrame<Scalar>(detail::repair_orthonormal(std::move(v))), tie};
}

template <typename Scalar>
void require_same_shape(const OrthonormalFrame<Scalar>& u, const OrthonormalFrame<Scalar>& v, const char* what) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw std::invalid_argument(std::string(what) + ": frame shapes differ (" + std::to_string(u.rows()) + "x" +
                                std::to_string(u.cols()) + " vs " + std::to_string(v.rows()) + "x" +
                                std::to_string(v.cols()) + ")");
}

/// Frobenius sin-theta distance ||(I - U U^T) V||_F. The residual form stays
/// accurate for nearly equal subspaces, where sqrt(r - ||U^T V||_F^2) cancels.
template <typename Scalar>
Scalar sin_theta_fro(const OrthonormalFrame<Scalar>& u, const OrthonormalFrame<Scalar>& v) {
  require_same_shape(u, v, "sin_theta_fro");
  const MatrixX<Scalar> resid = v.matrix() - u.matrix() * (u.matrix().transpose() * v.matrix());
  return std::min(resid.norm(), std::sqrt(static_cast<Scalar>(u.cols())));
}

/// Sine of the largest principal angle, ||(I - U U^T) V||_2.
template <typename Scalar>
Scalar sin_theta_op(const OrthonormalFrame<Scalar>& u, const OrthonormalFrame<Scalar>& v) {
  require_same_shape(u, v, "sin_theta_op");
  const MatrixX<Scalar> resid = v.matrix() - u.matrix() * (u.matrix().transpose() * v.matrix());
  return std::min(Scalar(1), singular_values(resid)[0]);
}

}  // namespace statsvd
