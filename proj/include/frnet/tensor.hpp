#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "frnet/error.hpp"

namespace frnet {

#ifdef FRNET_SINGLE_PRECISION
using real_t = float;
#else
using real_t = double;
#endif

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

inline void validate_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("invalid shape: rank 0");
  for (auto d : shape)
    if (d == 0) throw ShapeError("invalid shape " + shape_string(shape) + ": zero dimension");
}

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

/// Dense row-major n-dimensional array. Feature maps are [C,H,W].
template <typename Scalar>
class BasicTensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using scalar_type = Scalar;

  BasicTensor() : shape_{1}, data_(Array::Zero(1)) {}

  explicit BasicTensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_ = Array::Zero(static_cast<Eigen::Index>(shape_numel(shape_)));
  }

  BasicTensor(Shape shape, Array data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (static_cast<std::size_t>(data_.size()) != shape_numel(shape_))
      throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_string(shape_));
  }

  BasicTensor(Shape shape, std::initializer_list<Scalar> values)
      : BasicTensor(std::move(shape), Eigen::Map<const Array>(values.begin(), values.size())) {}

  static BasicTensor zeros(Shape shape) { return BasicTensor(std::move(shape)); }
  static BasicTensor full(Shape shape, Scalar value) {
    BasicTensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }
  static BasicTensor ones(Shape shape) { return full(std::move(shape), Scalar(1)); }
  static BasicTensor scalar(Scalar value) { return full({1}, value); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return static_cast<std::size_t>(data_.size()); }

  Array& array() { return data_; }
  const Array& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::span<Scalar> span() { return {data_.data(), size()}; }
  std::span<const Scalar> span() const { return {data_.data(), size()}; }

  Scalar& operator[](std::size_t i) { return data_[static_cast<Eigen::Index>(i)]; }
  Scalar operator[](std::size_t i) const { return data_[static_cast<Eigen::Index>(i)]; }

  std::size_t offset(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.size()) throw ShapeError("index rank mismatch");
    std::size_t off = 0;
    std::size_t axis = 0;
    for (auto i : index) {
      if (i >= shape_[axis]) throw ShapeError("index out of range");
      off = off * shape_[axis] + i;
      ++axis;
    }
    return off;
  }
  Scalar& at(std::initializer_list<std::size_t> index) { return (*this)[offset(index)]; }
  Scalar at(std::initializer_list<std::size_t> index) const { return (*this)[offset(index)]; }

  /// Row-major strides derived from the shape, in elements.
  std::vector<std::size_t> strides() const {
    std::vector<std::size_t> s(shape_.size(), 1);
    for (std::size_t i = shape_.size(); i-- > 1;) s[i - 1] = s[i] * shape_[i];
    return s;
  }

  BasicTensor reshaped(Shape shape) const {
    validate_shape(shape);
    if (shape_numel(shape) != size())
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    return BasicTensor(std::move(shape), data_);
  }

  template <typename Other>
  BasicTensor<Other> cast() const {
    return BasicTensor<Other>(shape_, data_.template cast<Other>());
  }

  Scalar sum() const { return data_.sum(); }

  bool operator==(const BasicTensor& other) const {
    return shape_ == other.shape_ && (data_ == other.data_).all();
  }

 private:
  Shape shape_;
  Array data_;
};

using Tensor = BasicTensor<real_t>;

/// Split real/imaginary storage; frequency-domain value type.
template <typename Scalar>
class BasicComplexTensor {
 public:
  using Real = BasicTensor<Scalar>;

  explicit BasicComplexTensor(Shape shape) : re_(shape), im_(std::move(shape)) {}
  BasicComplexTensor(Real re, Real im) : re_(std::move(re)), im_(std::move(im)) {
    if (re_.shape() != im_.shape())
      throw ShapeError("complex parts differ in shape: " + shape_string(re_.shape()) + " vs " +
                       shape_string(im_.shape()));
  }
  static BasicComplexTensor from_real(Real re) {
    Real im(re.shape());
    return BasicComplexTensor(std::move(re), std::move(im));
  }

  const Shape& shape() const { return re_.shape(); }
  std::size_t size() const { return re_.size(); }
  Real& re() { return re_; }
  Real& im() { return im_; }
  const Real& re() const { return re_; }
  const Real& im() const { return im_; }

 private:
  Real re_;
  Real im_;
};

using ComplexTensor = BasicComplexTensor<real_t>;

template <typename Scalar>
BasicTensor<Scalar> zeros(Shape shape) {
  return BasicTensor<Scalar>::zeros(std::move(shape));
}

inline Tensor zeros(Shape shape) { return Tensor::zeros(std::move(shape)); }

enum class ElementwiseOp { Add, Sub, Mul };

namespace detail {
inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b)
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                     shape_string(b));
}
}  // namespace detail

template <typename Scalar>
BasicTensor<Scalar> elementwise(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b,
                                ElementwiseOp op) {
  detail::require_same_shape(a.shape(), b.shape(), "elementwise");
  typename BasicTensor<Scalar>::Array out;
  switch (op) {
    case ElementwiseOp::Add: out = a.array() + b.array(); break;
    case ElementwiseOp::Sub: out = a.array() - b.array(); break;
    case ElementwiseOp::Mul: out = a.array() * b.array(); break;
  }
  return BasicTensor<Scalar>(a.shape(), std::move(out));
}

template <typename Scalar>
BasicTensor<Scalar> add(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  return elementwise(a, b, ElementwiseOp::Add);
}
template <typename Scalar>
BasicTensor<Scalar> sub(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  return elementwise(a, b, ElementwiseOp::Sub);
}
template <typename Scalar>
BasicTensor<Scalar> mul(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  return elementwise(a, b, ElementwiseOp::Mul);
}

template <typename Scalar>
BasicComplexTensor<Scalar> complex_hadamard(const BasicComplexTensor<Scalar>& a,
                                            const BasicComplexTensor<Scalar>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "complex_hadamard");
  const auto& ar = a.re().array();
  const auto& ai = a.im().array();
  const auto& br = b.re().array();
  const auto& bi = b.im().array();
  BasicTensor<Scalar> re(a.shape(), ar * br - ai * bi);
  BasicTensor<Scalar> im(a.shape(), ar * bi + ai * br);
  return BasicComplexTensor<Scalar>(std::move(re), std::move(im));
}

/// Places a rank-2 tensor in the top-left corner of a zero target.
template <typename Scalar>
BasicTensor<Scalar> pad2d_zero(const BasicTensor<Scalar>& x, std::size_t target_h,
                               std::size_t target_w) {
  if (x.rank() != 2) throw ShapeError("pad2d_zero expects rank 2, got " + shape_string(x.shape()));
  const std::size_t h = x.dim(0), w = x.dim(1);
  if (target_h < h || target_w < w)
    throw InvalidArgument("pad2d_zero: target " + std::to_string(target_h) + "x" +
                          std::to_string(target_w) + " smaller than source " +
                          shape_string(x.shape()));
  BasicTensor<Scalar> out({target_h, target_w});
  for (std::size_t i = 0; i < h; ++i)
    std::copy_n(x.data() + i * w, w, out.data() + i * target_w);
  return out;
}

template <typename Scalar>
BasicTensor<Scalar> crop2d(const BasicTensor<Scalar>& x, std::size_t h, std::size_t w) {
  if (x.rank() != 2) throw ShapeError("crop2d expects rank 2, got " + shape_string(x.shape()));
  if (h > x.dim(0) || w > x.dim(1)) throw InvalidArgument("crop2d: region larger than source");
  BasicTensor<Scalar> out({h, w});
  for (std::size_t i = 0; i < h; ++i) std::copy_n(x.data() + i * x.dim(1), w, out.data() + i * w);
  return out;
}

template <typename Scalar>
BasicTensor<Scalar> concat_channels(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  if (a.rank() != 3 || b.rank() != 3)
    throw ShapeError("concat_channels expects [C,H,W] inputs");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
    throw ShapeError("concat_channels: spatial mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  BasicTensor<Scalar> out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy_n(a.data(), a.size(), out.data());
  std::copy_n(b.data(), b.size(), out.data() + a.size());
  return out;
}

/// Channels [begin, end) of a [C,H,W] tensor.
template <typename Scalar>
BasicTensor<Scalar> slice_channels(const BasicTensor<Scalar>& x, std::size_t begin,
                                   std::size_t end) {
  if (x.rank() != 3) throw ShapeError("slice_channels expects [C,H,W]");
  if (begin >= end || end > x.dim(0)) throw InvalidArgument("slice_channels: bad channel range");
  const std::size_t plane = x.dim(1) * x.dim(2);
  BasicTensor<Scalar> out({end - begin, x.dim(1), x.dim(2)});
  std::copy_n(x.data() + begin * plane, (end - begin) * plane, out.data());
  return out;
}

template <typename Scalar>
using RowMajorMap =
    Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename Scalar>
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename Scalar>
ConstRowMajorMap<Scalar> as_matrix(const BasicTensor<Scalar>& t, std::size_t rows,
                                   std::size_t cols) {
  return ConstRowMajorMap<Scalar>(t.data(), static_cast<Eigen::Index>(rows),
                                  static_cast<Eigen::Index>(cols));
}
template <typename Scalar>
RowMajorMap<Scalar> as_matrix(BasicTensor<Scalar>& t, std::size_t rows, std::size_t cols) {
  return RowMajorMap<Scalar>(t.data(), static_cast<Eigen::Index>(rows),
                             static_cast<Eigen::Index>(cols));
}

template <typename Scalar>
BasicTensor<Scalar> matmul(const BasicTensor<Scalar>& a, const BasicTensor<Scalar>& b) {
  if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul expects rank-2 operands");
  if (a.dim(1) != b.dim(0))
    throw ShapeError("matmul: inner dimension mismatch " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  BasicTensor<Scalar> out({a.dim(0), b.dim(1)});
  as_matrix(out, a.dim(0), b.dim(1)).noalias() =
      as_matrix(a, a.dim(0), a.dim(1)) * as_matrix(b, b.dim(0), b.dim(1));
  return out;
}

}  // namespace frnet
