#pragma once

#include <cstddef>
#include <optional>

#include "frnet/tensor.hpp"

// Forward/backward numerical kernels behind the differentiable ops.
namespace frnet::kernels {

struct ConvGeometry {
  std::size_t cin, h, w;
  std::size_t cout, kh, kw;
  std::size_t stride, padding, groups;
  std::size_t ho, wo;
};

/// Validates shapes and derives output size floor((h + 2p - k) / s) + 1.
ConvGeometry conv_geometry(const Shape& x, const Shape& weight, std::size_t stride,
                           std::size_t padding, std::size_t groups);

/// Zero-padded cross-correlation. x [Cin,H,W], weight [Cout,Cin/groups,KH,KW], bias [Cout].
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor* bias, std::size_t stride,
              std::size_t padding, std::size_t groups);

struct Conv2dGrads {
  Tensor dx;
  Tensor dweight;
  std::optional<Tensor> dbias;
};

Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& weight, bool has_bias,
                            const Tensor& dy, std::size_t stride, std::size_t padding,
                            std::size_t groups);

}  // namespace frnet::kernels
