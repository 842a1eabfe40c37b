#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "frnet/autodiff.hpp"
#include "frnet/tensor.hpp"

// Slow, obviously-correct reference implementations. Nothing in the core
// library calls these; they exist to check it.
namespace frnet::reference {

/// X[u] = sum_m x[m] exp(-2 pi i u m / n), O(n^2). Inverse divides by n.
ComplexTensor naive_dft1d(const ComplexTensor& x, bool inverse = false);

/// F(u,v) = sum_{m,n} f(m,n) exp(-2 pi i (u m / M + v n / N)) by direct double sum.
ComplexTensor naive_dft2d(const ComplexTensor& x, bool inverse = false);

/// y[i,j] = sum_{a,b} k[a,b] x[(i-a) mod H, (j-b) mod W], kernel anchored at (0,0).
Tensor direct_circular_conv2d(const Tensor& x, const Tensor& k);

/// Zero-padded cross-correlation by explicit loops over (cout, oy, ox, cin, ky, kx).
Tensor direct_conv2d(const Tensor& x, const Tensor& weight, const Tensor* bias, std::size_t stride,
                     std::size_t padding, std::size_t groups);

struct GradCheckResult {
  std::string op;
  double max_rel_error = 0;
  std::size_t coordinates = 0;
  bool passed = false;
  std::string worst;  // "input k, index i: analytic a vs numeric n"
};

using GraphBuilder = std::function<ad::Var(std::span<const ad::Var>)>;

/// Central finite differences (f(x+eps) - f(x-eps)) / 2eps on `coords_per_input`
/// random coordinates of every input, against the tape's reverse pass. The
/// builder's output is contracted with a fixed random tensor so every output
/// element contributes. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult check_gradient(const std::string& op, const std::vector<Tensor>& inputs,
                               const GraphBuilder& build, std::size_t coords_per_input = 10,
                               double eps = 1e-5, double tolerance = 1e-4,
                               std::uint64_t seed = 7);

Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

}  // namespace frnet::reference
