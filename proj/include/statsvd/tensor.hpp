#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace statsvd {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline Index shape_product(std::span<const Index> shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_string(std::span<const Index> shape) {
  std::string out;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k) out += 'x';
    out += std::to_string(shape[k]);
  }
  return out;
}

/// Dense order-d tensor, row-major (last index fastest).
///
/// Order is at least 2; matrices are admitted as order-2 tensors. Entries are
/// required to be finite at construction.
template <typename Scalar>
class DenseTensor {
 public:
  using Storage = VectorX<Scalar>;

  DenseTensor() = default;

  explicit DenseTensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape();
    data_ = Storage::Zero(shape_product(shape_));
  }

  DenseTensor(Shape shape, Storage data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    if (data_.size() != shape_product(shape_))
      throw std::invalid_argument("DenseTensor: data length " + std::to_string(data_.size()) +
                                  " does not match shape " + shape_string(shape_));
    if (!data_.allFinite()) throw std::invalid_argument("DenseTensor: non-finite entry");
  }

  static DenseTensor Zero(Shape shape) { return DenseTensor(std::move(shape)); }

  int order() const { return static_cast<int>(shape_.size()); }
  const Shape& shape() const { return shape_; }
  Index dim(int k) const { return shape_.at(static_cast<std::size_t>(k)); }
  Index size() const { return data_.size(); }

  const Storage& data() const { return data_; }
  Storage& data() { return data_; }

  Index linear_index(std::span<const Index> idx) const {
    if (idx.size() != shape_.size()) throw std::invalid_argument("DenseTensor: index arity mismatch");
    Index lin = 0;
    for (std::size_t k = 0; k < shape_.size(); ++k) {
      if (idx[k] < 0 || idx[k] >= shape_[k]) throw std::out_of_range("DenseTensor: index out of range");
      lin = lin * shape_[k] + idx[k];
    }
    return lin;
  }

  Scalar operator()(std::initializer_list<Index> idx) const {
    return data_[linear_index(std::span<const Index>(idx.begin(), idx.size()))];
  }
  Scalar& operator()(std::initializer_list<Index> idx) {
    return data_[linear_index(std::span<const Index>(idx.begin(), idx.size()))];
  }
  Scalar operator()(std::span<const Index> idx) const { return data_[linear_index(idx)]; }
  Scalar& operator()(std::span<const Index> idx) { return data_[linear_index(idx)]; }

  Scalar norm() const { return data_.norm(); }
  Scalar squared_norm() const { return data_.squaredNorm(); }

  /// Product of the dimensions before mode k.
  Index outer_size(int k) const {
    return shape_product(std::span<const Index>(shape_.data(), static_cast<std::size_t>(k)));
  }
  /// Product of the dimensions after mode k.
  Index inner_size(int k) const {
    return shape_product(std::span<const Index>(shape_.data() + k + 1, shape_.size() - k - 1));
  }

  friend bool operator==(const DenseTensor& a, const DenseTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

  DenseTensor& operator+=(const DenseTensor& o) {
    require_same_shape(o);
    data_ += o.data_;
    return *this;
  }
  DenseTensor& operator-=(const DenseTensor& o) {
    require_same_shape(o);
    data_ -= o.data_;
    return *this;
  }
  DenseTensor& operator*=(Scalar c) {
    data_ *= c;
    return *this;
  }
  friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
  friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
  friend DenseTensor operator*(DenseTensor a, Scalar c) { return a *= c; }
  friend DenseTensor operator*(Scalar c, DenseTensor a) { return a *= c; }

 private:
  void validate_shape() const {
    if (shape_.size() < 2) throw std::invalid_argument("DenseTensor: order must be at least 2");
    for (Index n : shape_)
      if (n <= 0) throw std::invalid_argument("DenseTensor: dimensions must be positive");
  }
  void require_same_shape(const DenseTensor& o) const {
    if (o.shape_ != shape_)
      throw std::invalid_argument("DenseTensor: shape mismatch " + shape_string(shape_) + " vs " +
                                  shape_string(o.shape_));
  }

  Shape shape_;
  Storage data_;
};

using Tensor = DenseTensor<double>;

namespace detail {

inline void check_mode(int order, int k) {
  if (k < 0 || k >= order)
    throw std::out_of_range("mode " + std::to_string(k) + " out of range for order-" + std::to_string(order) +
                            " tensor");
}

// Row-major offsets of a block of modes mapped to column-major (first mode fastest) offsets.
inline std::vector<Index> rowmajor_to_colmajor(std::span<const Index> dims) {
  const Index n = shape_product(dims);
  std::vector<Index> map(static_cast<std::size_t>(n));
  std::vector<Index> idx(dims.size(), 0);
  for (Index lin = 0; lin < n; ++lin) {
    Index col = 0;
    Index stride = 1;
    for (std::size_t j = 0; j < dims.size(); ++j) {
      col += idx[j] * stride;
      stride *= dims[j];
    }
    map[static_cast<std::size_t>(lin)] = col;
    for (std::size_t j = dims.size(); j-- > 0;) {
      if (++idx[j] < dims[j]) break;
      idx[j] = 0;
    }
  }
  return map;
}

// Column index of every (outer, inner) pair under the cyclic unfolding convention:
// modes k+1..d-1 vary fastest (first of them fastest), then modes 0..k-1.
struct UnfoldMaps {
  std::vector<Index> inner;  // row-major inner offset -> column contribution
  std::vector<Index> outer;  // row-major outer offset -> column contribution
};

inline UnfoldMaps unfold_maps(const Shape& shape, int k) {
  const auto ks = static_cast<std::size_t>(k);
  std::span<const Index> before(shape.data(), ks);
  std::span<const Index> after(shape.data() + ks + 1, shape.size() - ks - 1);
  UnfoldMaps maps{rowmajor_to_colmajor(after), rowmajor_to_colmajor(before)};
  const Index inner_total = shape_product(after);
  for (Index& c : maps.outer) c *= inner_total;
  return maps;
}

}  // namespace detail

/// Mode-k matricization: p_k x p_{-k}, columns ordered cyclically over modes
/// k+1, ..., d-1, 0, ..., k-1 with the first of these varying fastest.
template <typename Scalar>
MatrixX<Scalar> matricize(const DenseTensor<Scalar>& t, int k) {
  detail::check_mode(t.order(), k);
  const Index pk = t.dim(k);
  const Index outer = t.outer_size(k);
  const Index inner = t.inner_size(k);
  const auto maps = detail::unfold_maps(t.shape(), k);
  MatrixX<Scalar> m(pk, outer * inner);
  const Scalar* src = t.data().data();
  for (Index l = 0; l < outer; ++l)
    for (Index i = 0; i < pk; ++i)
      for (Index r = 0; r < inner; ++r)
        m(i, maps.inner[static_cast<std::size_t>(r)] + maps.outer[static_cast<std::size_t>(l)]) =
            src[(l * pk + i) * inner + r];
  return m;
}

/// Inverse of matricize for the same mode and shape.
template <typename Derived>
DenseTensor<typename Derived::Scalar> fold(const Eigen::MatrixBase<Derived>& m, int k, const Shape& shape) {
  using Scalar = typename Derived::Scalar;
  detail::check_mode(static_cast<int>(shape.size()), k);
  DenseTensor<Scalar> t(shape);
  const Index pk = t.dim(k);
  const Index outer = t.outer_size(k);
  const Index inner = t.inner_size(k);
  if (m.rows() != pk || m.cols() != outer * inner)
    throw std::invalid_argument("fold: matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                ", expected " + std::to_string(pk) + "x" + std::to_string(outer * inner));
  if (!m.allFinite()) throw std::invalid_argument("fold: non-finite entry");
  const auto maps = detail::unfold_maps(shape, k);
  Scalar* dst = t.data().data();
  for (Index l = 0; l < outer; ++l)
    for (Index i = 0; i < pk; ++i)
      for (Index r = 0; r < inner; ++r)
        dst[(l * pk + i) * inner + r] =
            m(i, maps.inner[static_cast<std::size_t>(r)] + maps.outer[static_cast<std::size_t>(l)]);
  return t;
}

/// t x_k m: contracts index k of t against the columns of m.
template <typename Scalar, typename Derived>
DenseTensor<Scalar> mode_product(const DenseTensor<Scalar>& t, int k, const Eigen::MatrixBase<Derived>& m) {
  using RowMajor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  detail::check_mode(t.order(), k);
  const Index pk = t.dim(k);
  if (m.cols() != pk)
    throw std::invalid_argument("mode_product: matrix has " + std::to_string(m.cols()) + " columns, mode " +
                                std::to_string(k) + " has size " + std::to_string(pk));
  Shape out_shape = t.shape();
  out_shape[static_cast<std::size_t>(k)] = m.rows();
  DenseTensor<Scalar> out(out_shape);
  const Index outer = t.outer_size(k);
  const Index inner = t.inner_size(k);
  const Index q = m.rows();
  const MatrixX<Scalar> mm = m;
  if (inner == 1) {
    Eigen::Map<const RowMajor> src(t.data().data(), outer, pk);
    Eigen::Map<RowMajor> dst(out.data().data(), outer, q);
    dst.noalias() = src * mm.transpose();
    return out;
  }
  for (Index l = 0; l < outer; ++l) {
    Eigen::Map<const RowMajor> src(t.data().data() + l * pk * inner, pk, inner);
    Eigen::Map<RowMajor> dst(out.data().data() + l * q * inner, q, inner);
    dst.noalias() = mm * src;
  }
  return out;
}

/// Restricts mode k of t to the listed indices (in the given order).
template <typename Scalar>
DenseTensor<Scalar> select_mode(const DenseTensor<Scalar>& t, int k, std::span<const Index> rows) {
  detail::check_mode(t.order(), k);
  if (rows.empty()) throw std::invalid_argument("select_mode: empty index set");
  const Index pk = t.dim(k);
  Shape out_shape = t.shape();
  out_shape[static_cast<std::size_t>(k)] = static_cast<Index>(rows.size());
  DenseTensor<Scalar> out(out_shape);
  const Index outer = t.outer_size(k);
  const Index inner = t.inner_size(k);
  const auto n = static_cast<Index>(rows.size());
  for (Index l = 0; l < outer; ++l)
    for (Index j = 0; j < n; ++j) {
      const Index i = rows[static_cast<std::size_t>(j)];
      if (i < 0 || i >= pk) throw std::out_of_range("select_mode: index out of range");
      out.data().segment((l * n + j) * inner, inner) = t.data().segment((l * pk + i) * inner, inner);
    }
  return out;
}

/// Kronecker product of a nonempty chain. The first factor's index varies
/// fastest, matching the column order of matricize, so
/// matricize(t x_{k+1} A_1 ... , k) == matricize(t, k) * kron_chain({A_1, ...})^T
/// when the factors are listed in cyclic mode order.
template <typename Scalar>
MatrixX<Scalar> kron_chain(std::span<const MatrixX<Scalar>> mats) {
  if (mats.empty()) throw std::invalid_argument("kron_chain: empty list");
  MatrixX<Scalar> acc = mats.front();
  for (std::size_t j = 1; j < mats.size(); ++j) {
    const MatrixX<Scalar>& a = mats[j];
    MatrixX<Scalar> next(a.rows() * acc.rows(), a.cols() * acc.cols());
    for (Index i = 0; i < a.rows(); ++i)
      for (Index c = 0; c < a.cols(); ++c)
        next.block(i * acc.rows(), c * acc.cols(), acc.rows(), acc.cols()) = a(i, c) * acc;
    acc = std::move(next);
  }
  return acc;
}

template <typename Scalar>
MatrixX<Scalar> kron_chain(std::initializer_list<MatrixX<Scalar>> mats) {
  return kron_chain(std::span<const MatrixX<Scalar>>(mats.begin(), mats.size()));
}

/// Squared l2 norm of every mode-k fiber slice, i.e. row norms of matricize(t, k).
template <typename Scalar>
VectorX<Scalar> mode_row_squared_norms(const DenseTensor<Scalar>& t, int k) {
  detail::check_mode(t.order(), k);
  const Index pk = t.dim(k);
  const Index outer = t.outer_size(k);
  const Index inner = t.inner_size(k);
  VectorX<Scalar> out = VectorX<Scalar>::Zero(pk);
  for (Index l = 0; l < outer; ++l)
    for (Index i = 0; i < pk; ++i) out[i] += t.data().segment((l * pk + i) * inner, inner).squaredNorm();
  return out;
}

/// Largest absolute entry of every row of matricize(t, k).
template <typename Scalar>
VectorX<Scalar> mode_row_max_abs(const DenseTensor<Scalar>& t, int k) {
  detail::check_mode(t.order(), k);
  const Index pk = t.dim(k);
  const Index outer = t.outer_size(k);
  const Index inner = t.inner_size(k);
  VectorX<Scalar> out = VectorX<Scalar>::Zero(pk);
  for (Index l = 0; l < outer; ++l)
    for (Index i = 0; i < pk; ++i)
      out[i] = std::max(out[i], t.data().segment((l * pk + i) * inner, inner).cwiseAbs().maxCoeff());
  return out;
}

}  // namespace statsvd
