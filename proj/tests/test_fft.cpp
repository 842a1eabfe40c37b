#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "frnet/fft.hpp"
#include "frnet/reference.hpp"

using namespace frnet;
using reference::random_tensor;

namespace {

ComplexTensor random_complex(Shape s, std::uint64_t seed) {
  return ComplexTensor(random_tensor(s, seed), random_tensor(s, seed + 100));
}

double max_diff(const ComplexTensor& a, const ComplexTensor& b) {
  return std::max((a.re().array() - b.re().array()).abs().maxCoeff(),
                  (a.im().array() - b.im().array()).abs().maxCoeff());
}

}  // namespace

TEST(Fft, KnownSmallTransforms) {
  ComplexTensor impulse(Tensor({4}, {1, 0, 0, 0}), Tensor({4}));
  const auto a = fft1d(impulse, FftDirection::Forward);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(a.re()[i], 1);
    EXPECT_DOUBLE_EQ(a.im()[i], 0);
  }
  ComplexTensor constant(Tensor({4}, {1, 1, 1, 1}), Tensor({4}));
  const auto b = fft1d(constant, FftDirection::Forward);
  EXPECT_NEAR(b.re()[0], 4, 1e-15);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_NEAR(std::hypot(b.re()[i], b.im()[i]), 0, 1e-15);
  // x = [0,1,0,0] -> exp(-2 pi i u / 4) = 1, -i, -1, i
  ComplexTensor shifted(Tensor({4}, {0, 1, 0, 0}), Tensor({4}));
  const auto c = fft1d(shifted, FftDirection::Forward);
  EXPECT_NEAR(c.im()[1], -1, 1e-15);
  EXPECT_NEAR(c.re()[2], -1, 1e-15);
  EXPECT_NEAR(c.im()[3], 1, 1e-15);
}

TEST(Fft, MatchesNaiveDft1d) {
  for (std::size_t n = 1; n <= 256; n *= 2) {
    const auto x = random_complex({n}, n);
    EXPECT_LT(max_diff(fft1d(x, FftDirection::Forward), reference::naive_dft1d(x)), 1e-9) << n;
    EXPECT_LT(max_diff(fft1d(x, FftDirection::Inverse), reference::naive_dft1d(x, true)), 1e-9) << n;
  }
}

TEST(Fft, MatchesNaiveDft2dRectangular) {
  const std::pair<std::size_t, std::size_t> shapes[] = {{1, 8}, {8, 1}, {2, 16}, {16, 4}, {32, 32}, {4, 64}};
  for (auto [h, w] : shapes) {
    const auto x = random_complex({h, w}, h * 31 + w);
    EXPECT_LT(max_diff(fft2d(x, FftDirection::Forward), reference::naive_dft2d(x)), 1e-9) << h << "x" << w;
    EXPECT_LT(max_diff(fft2d(x, FftDirection::Inverse), reference::naive_dft2d(x, true)), 1e-9);
  }
}

TEST(Fft, InverseRoundTrip) {
  for (std::size_t n = 1; n <= 256; n *= 2) {
    const auto x = random_complex({n, 256 / n}, n + 3);
    EXPECT_LT(max_diff(fft2d(fft2d(x, FftDirection::Forward), FftDirection::Inverse), x), 1e-10);
  }
}

TEST(Fft, Parseval) {
  const auto x = random_complex({64, 128}, 5);
  const auto X = fft2d(x, FftDirection::Forward);
  const double ex = (x.re().array().square() + x.im().array().square()).sum();
  const double eX = (X.re().array().square() + X.im().array().square()).sum() / (64.0 * 128.0);
  EXPECT_LT(std::abs(ex - eX) / ex, 1e-12);
}

TEST(Fft, Linearity) {
  const auto x = random_complex({16, 8}, 1), y = random_complex({16, 8}, 2);
  const double a = 0.7, b = -1.3;
  ComplexTensor combo(Tensor(x.shape(), a * x.re().array() + b * y.re().array()),
                      Tensor(x.shape(), a * x.im().array() + b * y.im().array()));
  const auto X = fft2d(x, FftDirection::Forward), Y = fft2d(y, FftDirection::Forward);
  ComplexTensor expected(Tensor(x.shape(), a * X.re().array() + b * Y.re().array()),
                         Tensor(x.shape(), a * X.im().array() + b * Y.im().array()));
  EXPECT_LT(max_diff(fft2d(combo, FftDirection::Forward), expected), 1e-12);
}

TEST(Fft, RealInputIsHermitian) {
  const std::size_t h = 8, w = 16;
  const auto X = fft2d(ComplexTensor::from_real(random_tensor({h, w}, 4)), FftDirection::Forward);
  for (std::size_t u = 0; u < h; ++u)
    for (std::size_t v = 0; v < w; ++v) {
      const std::size_t cu = (h - u) % h, cv = (w - v) % w;
      EXPECT_NEAR(X.re()[u * w + v], X.re()[cu * w + cv], 1e-12);
      EXPECT_NEAR(X.im()[u * w + v], -X.im()[cu * w + cv], 1e-12);
    }
}

TEST(Fft, RejectsNonPowerOfTwo) {
  EXPECT_THROW(fft1d(ComplexTensor({6}), FftDirection::Forward), UnsupportedSize);
  EXPECT_THROW(fft2d(ComplexTensor({8, 12}), FftDirection::Forward), UnsupportedSize);
  EXPECT_THROW(spectral_conv2d(Tensor({6, 8}), Tensor({3, 3})), UnsupportedSize);
}

TEST(SpectralConv, MatchesDirectCircularOracle) {
  const std::size_t sizes[] = {8, 16, 32};
  std::uint64_t seed = 1;
  for (auto h : sizes)
    for (auto w : sizes)
      for (std::size_t k : {std::size_t{1}, std::size_t{3}, std::min(h, w)}) {
        const Tensor x = random_tensor({h, w}, seed++), kern = random_tensor({k, k}, seed++);
        const auto diff = (spectral_conv2d(x, kern).array() -
                           reference::direct_circular_conv2d(x, kern).array()).abs().maxCoeff();
        EXPECT_LT(diff, 1e-8) << h << "x" << w << " k=" << k;
      }
}

TEST(SpectralConv, DeltaKernelIsIdentity) {
  const Tensor x = random_tensor({16, 16}, 8);
  const Tensor delta({1, 1}, {1});
  EXPECT_LT((spectral_conv2d(x, delta).array() - x.array()).abs().maxCoeff(), 1e-14);
}

TEST(SpectralConv, ShiftedDeltaRollsWithWraparound) {
  const Tensor x = random_tensor({8, 8}, 2);
  Tensor k({2, 3});
  k.at({1, 2}) = 1;  // y[i,j] = x[i-1, j-2] circularly
  const auto y = spectral_conv2d(x, k);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(y.at({i, j}), x.at({(i + 7) % 8, (j + 6) % 8}), 1e-14);
}

TEST(SpectralConv, RejectsOversizedKernel) {
  EXPECT_THROW(spectral_conv2d(Tensor({8, 8}), Tensor({9, 1})), InvalidArgument);
}

TEST(ApplyMask, IdentityMaskIsIdentity) {
  const Tensor x = random_tensor({3, 8, 16}, 3);
  ComplexTensor mask(Tensor::ones({3, 8, 16}), Tensor({3, 8, 16}));
  EXPECT_LT((apply_mask(x, mask).array() - x.array()).abs().maxCoeff(), 1e-14);
}

TEST(ApplyMask, TransformedKernelMatchesSpectralConv) {
  const Tensor x = random_tensor({16, 32}, 11), k = random_tensor({5, 7}, 12);
  const auto K = fft2d(ComplexTensor::from_real(pad2d_zero(k, 16, 32)), FftDirection::Forward);
  ComplexTensor mask(K.re().reshaped({1, 16, 32}), K.im().reshaped({1, 16, 32}));
  const auto y = apply_mask(x.reshaped({1, 16, 32}), mask).reshaped({16, 32});
  EXPECT_LT((y.array() - spectral_conv2d(x, k).array()).abs().maxCoeff(), 1e-9);
  EXPECT_THROW(apply_mask(x.reshaped({1, 16, 32}), ComplexTensor({1, 16, 16})), ShapeError);
}

TEST(FftPlan, TwiddlesAreRootsOfUnity) {
  const auto& plan = fft_plan<double>(16, FftDirection::Forward);
  for (std::size_t j = 0; j < 8; ++j) {
    const auto w = plan.twiddle(j);
    EXPECT_NEAR(std::abs(w), 1.0, 1e-15);
    EXPECT_NEAR(std::arg(w), j == 0 ? 0.0 : -2 * std::numbers::pi * static_cast<double>(j) / 16, 1e-14);
  }
}

TEST(Fft, SinglePrecisionInstantiation) {
  BasicComplexTensor<float> x(BasicTensor<float>({8}, {1, 2, 3, 4, 5, 6, 7, 8}), BasicTensor<float>({8}));
  const auto back = fft1d(fft1d(x, FftDirection::Forward), FftDirection::Inverse);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(back.re()[i], x.re()[i], 1e-5f);
}
