#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <vector>

#include "frnet/tensor.hpp"

namespace frnet {

enum class FftDirection { Forward, Inverse };

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Radix-2 Cooley-Tukey plan: bit-reversal table plus roots of unity.
///
/// Forward twiddles are exp(-2*pi*i*j/n); the inverse plan stores their conjugates
/// and `execute` divides by n, so inverse(forward(x)) == x.
template <typename Scalar>
class FftPlan {
 public:
  FftPlan(std::size_t length, FftDirection direction)
      : length_(length), direction_(direction) {
    if (!is_power_of_two(length))
      throw UnsupportedSize("FFT length " + std::to_string(length) +
                            " is not a power of two; pad the input");
    const std::size_t half = std::max<std::size_t>(length / 2, 1);
    tw_re_.resize(half);
    tw_im_.resize(half);
    const double sign = direction == FftDirection::Forward ? -1.0 : 1.0;
    for (std::size_t j = 0; j < half; ++j) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(j) /
                           static_cast<double>(length);
      tw_re_[j] = static_cast<Scalar>(std::cos(angle));
      tw_im_[j] = static_cast<Scalar>(std::sin(angle));
    }
    bitrev_.resize(length);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < length) ++bits;
    for (std::size_t i = 0; i < length; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      bitrev_[i] = r;
    }
  }

  std::size_t length() const { return length_; }
  FftDirection direction() const { return direction_; }
  std::complex<Scalar> twiddle(std::size_t j) const { return {tw_re_.at(j), tw_im_.at(j)}; }

  /// In-place transform of `length()` contiguous split-complex values.
  void execute(Scalar* re, Scalar* im) const {
    const std::size_t n = length_;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = bitrev_[i];
      if (j > i) {
        std::swap(re[i], re[j]);
        std::swap(im[i], im[j]);
      }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n / len;
      for (std::size_t base = 0; base < n; base += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const Scalar wr = tw_re_[j * step];
          const Scalar wi = tw_im_[j * step];
          const std::size_t a = base + j;
          const std::size_t b = a + half;
          const Scalar vr = re[b] * wr - im[b] * wi;
          const Scalar vi = re[b] * wi + im[b] * wr;
          re[b] = re[a] - vr;
          im[b] = im[a] - vi;
          re[a] += vr;
          im[a] += vi;
        }
      }
    }
    if (direction_ == FftDirection::Inverse) {
      const Scalar scale = Scalar(1) / static_cast<Scalar>(n);
      for (std::size_t i = 0; i < n; ++i) {
        re[i] *= scale;
        im[i] *= scale;
      }
    }
  }

  /// Transforms every column of a row-major `length() x width` split-complex block.
  /// Butterflies run across whole rows, so the inner loops are contiguous.
  void execute_columns(Scalar* re, Scalar* im, std::size_t width) const {
    const std::size_t n = length_;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = bitrev_[i];
      if (j > i) {
        std::swap_ranges(re + i * width, re + (i + 1) * width, re + j * width);
        std::swap_ranges(im + i * width, im + (i + 1) * width, im + j * width);
      }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n / len;
      for (std::size_t base = 0; base < n; base += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const Scalar wr = tw_re_[j * step];
          const Scalar wi = tw_im_[j * step];
          Scalar* ar = re + (base + j) * width;
          Scalar* ai = im + (base + j) * width;
          Scalar* br = ar + half * width;
          Scalar* bi = ai + half * width;
          for (std::size_t c = 0; c < width; ++c) {
            const Scalar vr = br[c] * wr - bi[c] * wi;
            const Scalar vi = br[c] * wi + bi[c] * wr;
            br[c] = ar[c] - vr;
            bi[c] = ai[c] - vi;
            ar[c] += vr;
            ai[c] += vi;
          }
        }
      }
    }
    if (direction_ == FftDirection::Inverse) {
      const Scalar scale = Scalar(1) / static_cast<Scalar>(n);
      for (std::size_t i = 0; i < n * width; ++i) {
        re[i] *= scale;
        im[i] *= scale;
      }
    }
  }

 private:
  std::size_t length_;
  FftDirection direction_;
  std::vector<Scalar> tw_re_;
  std::vector<Scalar> tw_im_;
  std::vector<std::size_t> bitrev_;
};

/// Per-thread plan cache; plans are immutable once built.
template <typename Scalar>
const FftPlan<Scalar>& fft_plan(std::size_t length, FftDirection direction) {
  thread_local std::map<std::pair<std::size_t, int>, std::unique_ptr<FftPlan<Scalar>>> cache;
  auto key = std::make_pair(length, static_cast<int>(direction));
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, std::make_unique<FftPlan<Scalar>>(length, direction)).first;
  return *it->second;
}

namespace detail {

/// 2D transform of `planes` contiguous h*w split-complex planes, rows then columns.
template <typename Scalar>
void fft2d_planes(Scalar* re, Scalar* im, std::size_t planes, std::size_t h, std::size_t w,
                  FftDirection direction) {
  const auto& row_plan = fft_plan<Scalar>(w, direction);
  const auto& col_plan = fft_plan<Scalar>(h, direction);
  for (std::size_t p = 0; p < planes; ++p) {
    Scalar* pr = re + p * h * w;
    Scalar* pi = im + p * h * w;
    for (std::size_t r = 0; r < h; ++r) row_plan.execute(pr + r * w, pi + r * w);
    if (h > 1) col_plan.execute_columns(pr, pi, w);
  }
}

inline void require_power_of_two_plane(const Shape& shape, const char* what) {
  const std::size_t h = shape[shape.size() - 2], w = shape[shape.size() - 1];
  if (!is_power_of_two(h) || !is_power_of_two(w))
    throw UnsupportedSize(std::string(what) + ": spatial size " + std::to_string(h) + "x" +
                          std::to_string(w) + " is not a power of two");
}

}  // namespace detail

template <typename Scalar>
BasicComplexTensor<Scalar> fft1d(const BasicComplexTensor<Scalar>& x, FftDirection direction) {
  if (x.shape().size() != 1) throw ShapeError("fft1d expects rank 1, got " + shape_string(x.shape()));
  BasicComplexTensor<Scalar> out = x;
  fft_plan<Scalar>(x.size(), direction).execute(out.re().data(), out.im().data());
  return out;
}

template <typename Scalar>
BasicComplexTensor<Scalar> fft2d(const BasicComplexTensor<Scalar>& x, FftDirection direction) {
  if (x.shape().size() != 2) throw ShapeError("fft2d expects rank 2, got " + shape_string(x.shape()));
  detail::require_power_of_two_plane(x.shape(), "fft2d");
  BasicComplexTensor<Scalar> out = x;
  detail::fft2d_planes(out.re().data(), out.im().data(), 1, x.shape()[0], x.shape()[1], direction);
  return out;
}

/// Forward 2D transform of every channel of a real [C,H,W] map.
template <typename Scalar>
BasicComplexTensor<Scalar> fft2d_channels(const BasicTensor<Scalar>& x) {
  if (x.rank() != 3) throw ShapeError("fft2d_channels expects [C,H,W], got " + shape_string(x.shape()));
  detail::require_power_of_two_plane(x.shape(), "fft2d_channels");
  auto out = BasicComplexTensor<Scalar>::from_real(x);
  detail::fft2d_planes(out.re().data(), out.im().data(), x.dim(0), x.dim(1), x.dim(2),
                       FftDirection::Forward);
  return out;
}

/// Inverse 2D transform of every channel, keeping only the real part.
template <typename Scalar>
BasicTensor<Scalar> ifft2d_channels_real(BasicComplexTensor<Scalar> spectrum) {
  const Shape& s = spectrum.shape();
  if (s.size() != 3) throw ShapeError("ifft2d_channels_real expects [C,H,W]");
  detail::require_power_of_two_plane(s, "ifft2d_channels_real");
  detail::fft2d_planes(spectrum.re().data(), spectrum.im().data(), s[0], s[1], s[2],
                       FftDirection::Inverse);
  return std::move(spectrum.re());
}

/// Circular 2D convolution through the frequency domain:
/// zero-pad the kernel to the input size (anchored at (0,0)), transform both,
/// multiply elementwise, inverse transform, keep the real part.
template <typename Scalar>
BasicTensor<Scalar> spectral_conv2d(const BasicTensor<Scalar>& x, const BasicTensor<Scalar>& k) {
  if (x.rank() != 2 || k.rank() != 2) throw ShapeError("spectral_conv2d expects rank-2 operands");
  const std::size_t h = x.dim(0), w = x.dim(1);
  if (k.dim(0) > h || k.dim(1) > w)
    throw InvalidArgument("spectral_conv2d: kernel " + shape_string(k.shape()) +
                          " larger than input " + shape_string(x.shape()));
  detail::require_power_of_two_plane(x.shape(), "spectral_conv2d");
  // Reused per-thread scratch: fresh plane-sized allocations per call cost more than
  // the transforms once they cross the allocator's mmap threshold.
  thread_local std::vector<Scalar> scratch;
  const std::size_t n = h * w;
  scratch.assign(4 * n, Scalar(0));
  Scalar* xr = scratch.data();
  Scalar* xi = xr + n;
  Scalar* kr = xi + n;
  Scalar* ki = kr + n;
  std::copy(x.data(), x.data() + n, xr);
  for (std::size_t r = 0; r < k.dim(0); ++r)
    std::copy(k.data() + r * k.dim(1), k.data() + (r + 1) * k.dim(1), kr + r * w);
  detail::fft2d_planes(xr, xi, 1, h, w, FftDirection::Forward);
  detail::fft2d_planes(kr, ki, 1, h, w, FftDirection::Forward);
  for (std::size_t i = 0; i < n; ++i) {
    const Scalar re = xr[i] * kr[i] - xi[i] * ki[i];
    xi[i] = xr[i] * ki[i] + xi[i] * kr[i];
    xr[i] = re;
  }
  detail::fft2d_planes(xr, xi, 1, h, w, FftDirection::Inverse);
  BasicTensor<Scalar> out(x.shape());
  std::copy(xr, xr + n, out.data());
  return out;
}

/// Per-channel global filter: real(ifft2d(fft2d(x_c) * mask_c)).
template <typename Scalar>
BasicTensor<Scalar> apply_mask(const BasicTensor<Scalar>& x, const BasicComplexTensor<Scalar>& mask) {
  if (x.shape() != mask.shape())
    throw ShapeError("apply_mask: input " + shape_string(x.shape()) + " vs mask " +
                     shape_string(mask.shape()));
  return ifft2d_channels_real(complex_hadamard(fft2d_channels(x), mask));
}

}  // namespace frnet
