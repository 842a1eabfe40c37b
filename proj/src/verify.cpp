#include "frnet/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "frnet/fft.hpp"
#include "frnet/metrics.hpp"

namespace frnet::verify {

namespace {

using reference::random_tensor;

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ComplexTensor random_complex(Shape shape, std::uint64_t seed) {
  ComplexTensor z(shape);
  z.re() = random_tensor(shape, seed);
  z.im() = random_tensor(shape, seed + 1);
  return z;
}

double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b) {
  return std::max((a.re().array() - b.re().array()).abs().maxCoeff(),
                  (a.im().array() - b.im().array()).abs().maxCoeff());
}

double max_abs_diff(const Tensor& a, const Tensor& b) { return (a.array() - b.array()).abs().maxCoeff(); }

double energy(const ComplexTensor& z) {
  return (z.re().array().square() + z.im().array().square()).sum();
}

void record(SuiteResult& r, const std::string& name, double err, double tol) {
  ++r.cases;
  r.max_error = std::max(r.max_error, err);
  if (!(err < tol)) r.failures.push_back(name + fmt(": error %.3e >= %.1e", err, tol));
}

constexpr std::size_t kPowers[] = {1, 2, 4, 8, 16, 32, 64, 128, 256};

}  // namespace

SuiteResult fft_suite(const Options& opts) {
  Timer timer;
  SuiteResult r;
  r.suite = "fft";
  std::uint64_t seed = opts.seed * 1000 + 11;
  for (auto n : kPowers) {
    const auto x = random_complex({n}, seed += 2);
    record(r, fmt("fft1d n=%zu vs naive DFT", n),
           max_abs_diff(fft1d(x, FftDirection::Forward), reference::naive_dft1d(x)), 1e-9);
    record(r, fmt("ifft1d n=%zu vs naive inverse DFT", n),
           max_abs_diff(fft1d(x, FftDirection::Inverse), reference::naive_dft1d(x, true)), 1e-9);
  }
  // Double-sum oracle on every shape with at most 4096 points.
  for (auto h : kPowers) {
    for (auto w : kPowers) {
      if (h * w > 4096) continue;
      const auto x = random_complex({h, w}, seed += 2);
      record(r, fmt("fft2d %zux%zu vs naive DFT", h, w),
             max_abs_diff(fft2d(x, FftDirection::Forward), reference::naive_dft2d(x)), 1e-9);
    }
  }
  for (auto h : kPowers) {
    for (auto w : kPowers) {
      const auto x = random_complex({h, w}, seed += 2);
      const auto X = fft2d(x, FftDirection::Forward);
      record(r, fmt("ifft2d(fft2d(x)) %zux%zu", h, w), max_abs_diff(fft2d(X, FftDirection::Inverse), x),
             1e-10);
      const double ex = energy(x), eX = energy(X) / static_cast<double>(h * w);
      record(r, fmt("Parseval %zux%zu", h, w), std::abs(ex - eX) / ex, 1e-9);
    }
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteResult conv_suite(const Options& opts) {
  Timer timer;
  SuiteResult r;
  r.suite = "conv";
  std::mt19937_64 rng(opts.seed * 1000 + 23);
  constexpr std::size_t sizes[] = {8, 16, 32, 64};
  std::uniform_int_distribution<int> pick(0, 3);
  for (std::size_t c = 0; c < opts.conv_cases; ++c) {
    const std::size_t h = sizes[pick(rng)], w = sizes[pick(rng)];
    std::size_t kh, kw;
    switch (c % 4) {
      case 0: kh = kw = 1; break;
      case 1: kh = h; kw = w; break;
      default:
        kh = std::uniform_int_distribution<std::size_t>(1, h)(rng);
        kw = std::uniform_int_distribution<std::size_t>(1, w)(rng);
    }
    const Tensor x = random_tensor({h, w}, rng());
    const Tensor k = random_tensor({kh, kw}, rng());
    record(r, fmt("case %zu: %zux%zu input, %zux%zu kernel", c, h, w, kh, kw),
           max_abs_diff(spectral_conv2d(x, k), reference::direct_circular_conv2d(x, k)), 1e-8);
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteResult mask_suite(const Options& opts) {
  Timer timer;
  SuiteResult r;
  r.suite = "mask";
  std::mt19937_64 rng(opts.seed * 1000 + 37);
  constexpr std::size_t sizes[] = {8, 16, 32, 64};
  std::uniform_int_distribution<int> pick(0, 3);
  for (std::size_t c = 0; c < opts.mask_cases; ++c) {
    const std::size_t h = sizes[pick(rng)], w = sizes[pick(rng)];
    const std::size_t kh = std::uniform_int_distribution<std::size_t>(1, h)(rng);
    const std::size_t kw = std::uniform_int_distribution<std::size_t>(1, w)(rng);
    const Tensor x = random_tensor({h, w}, rng());
    const Tensor k = random_tensor({kh, kw}, rng());
    const auto spectrum = fft2d(ComplexTensor::from_real(pad2d_zero(k, h, w)), FftDirection::Forward);
    ComplexTensor mask({1, h, w});
    mask.re() = spectrum.re().reshaped({1, h, w});
    mask.im() = spectrum.im().reshaped({1, h, w});
    const Tensor masked = apply_mask(x.reshaped({1, h, w}), mask).reshaped({h, w});
    record(r, fmt("case %zu: %zux%zu input, %zux%zu kernel", c, h, w, kh, kw),
           max_abs_diff(masked, spectral_conv2d(x, k)), 1e-9);
  }
  r.seconds = timer.seconds();
  return r;
}

std::vector<reference::GradCheckResult> gradient_checks(const Options& opts) {
  using ad::Var;
  using In = std::span<const Var>;
  std::uint64_t seed = opts.seed * 1000 + 101;
  auto rnd = [&seed](Shape s, double lo = -1.0, double hi = 1.0) { return random_tensor(std::move(s), seed++, lo, hi); };
  std::vector<reference::GradCheckResult> out;
  auto check = [&](const std::string& name, std::vector<Tensor> inputs, reference::GraphBuilder build) {
    out.push_back(reference::check_gradient(name, inputs, build, opts.grad_coords, 1e-5, 1e-4, seed++));
  };

  check("add", {rnd({2, 3, 4}), rnd({2, 3, 4})}, [](In v) { return ad::add(v[0], v[1]); });
  check("sub", {rnd({2, 3, 4}), rnd({2, 3, 4})}, [](In v) { return ad::sub(v[0], v[1]); });
  check("mul", {rnd({2, 3, 4}), rnd({2, 3, 4})}, [](In v) { return ad::mul(v[0], v[1]); });
  check("scale", {rnd({6, 2})}, [](In v) { return ad::scale(v[0], real_t(-1.7)); });
  check("sum", {rnd({3, 4})}, [](In v) { return ad::sum(v[0]); });
  check("mean", {rnd({3, 4})}, [](In v) { return ad::mean(v[0]); });
  check("reshape", {rnd({2, 6})}, [](In v) { return ad::reshape(v[0], {3, 4}); });
  check("conv2d", {rnd({3, 6, 6}), rnd({4, 3, 3, 3}), rnd({4})},
        [](In v) { return ad::conv2d(v[0], v[1], v[2], {1, 1, 1}); });
  check("conv2d_stride2", {rnd({3, 8, 8}), rnd({5, 3, 3, 3})},
        [](In v) { return ad::conv2d(v[0], v[1], std::nullopt, {2, 1, 1}); });
  check("conv2d_depthwise", {rnd({4, 6, 6}), rnd({4, 1, 3, 3})},
        [](In v) { return ad::conv2d(v[0], v[1], std::nullopt, {1, 1, 4}); });
  check("conv2d_pointwise", {rnd({4, 5, 5}), rnd({6, 4, 1, 1}), rnd({6})},
        [](In v) { return ad::conv2d(v[0], v[1], v[2], {1, 0, 1}); });
  check("channel_affine", {rnd({3, 4, 4}), rnd({3}), rnd({3})},
        [](In v) { return ad::channel_affine(v[0], v[1], v[2]); });
  check("channel_layer_norm", {rnd({5, 3, 4}), rnd({5}, 0.5, 1.5), rnd({5})},
        [](In v) { return ad::channel_layer_norm(v[0], v[1], v[2]); });
  check("silu", {rnd({3, 4, 4}, -3, 3)}, [](In v) { return ad::silu(v[0]); });
  check("global_filter", {rnd({2, 4, 8}), rnd({2, 4, 8}, 0.5, 1.5), rnd({2, 4, 8}, -0.5, 0.5)},
        [](In v) { return ad::global_filter(v[0], v[1], v[2]); });
  check("concat_channels", {rnd({2, 3, 3}), rnd({3, 3, 3})},
        [](In v) { return ad::concat_channels(v[0], v[1]); });
  check("global_avg_pool", {rnd({4, 3, 5})}, [](In v) { return ad::global_avg_pool(v[0]); });
  check("linear", {rnd({6}), rnd({3, 6}), rnd({3})}, [](In v) { return ad::linear(v[0], v[1], v[2]); });
  {
    // residuals on both sides of the knee at |d| = 1
    Tensor pred = rnd({8});
    Tensor target(pred.shape());
    const real_t offsets[] = {-2.3, -1.4, -0.6, -0.05, 0.2, 0.8, 1.3, 2.9};
    for (std::size_t i = 0; i < 8; ++i) target[i] = pred[i] - offsets[i];
    check("smooth_l1", {pred, target}, [](In v) { return ad::smooth_l1(v[0], v[1]); });
  }

  // Layer composites.
  check("ffn", {rnd({4, 4, 4}), rnd({8, 4, 1, 1}), rnd({8}), rnd({4, 8, 1, 1}), rnd({4})}, [](In v) {
    const Var h = ad::silu(ad::conv2d(v[0], v[1], v[2], {}));
    return ad::add(v[0], ad::conv2d(h, v[3], v[4], {}));
  });
  check("fft_encoder", {rnd({3, 4, 4}), rnd({3}, 0.5, 1.5), rnd({3}), rnd({3, 4, 4}, 0.5, 1.5),
                        rnd({3, 4, 4}, -0.5, 0.5)},
        [](In v) {
          const Var n = ad::channel_layer_norm(v[0], v[1], v[2]);
          return ad::add(v[0], ad::global_filter(n, v[3], v[4]));
        });
  check("concat_fusion", {rnd({3, 4, 4}), rnd({2, 4, 4}), rnd({3, 5, 1, 1})}, [](In v) {
    return ad::conv2d(ad::concat_channels(v[0], v[1]), v[2], std::nullopt, {});
  });
  check("inverted_residual", {rnd({3, 6, 6}), rnd({6, 3, 1, 1}), rnd({6, 1, 3, 3}), rnd({3, 6, 1, 1})},
        [](In v) {
          Var h = ad::silu(ad::conv2d(v[0], v[1], std::nullopt, {}));
          h = ad::silu(ad::conv2d(h, v[2], std::nullopt, {1, 1, 6}));
          return ad::add(v[0], ad::conv2d(h, v[3], std::nullopt, {}));
        });
  check("regression_head", {rnd({4, 3, 3}), rnd({2, 4}), rnd({2}), rnd({2})}, [](In v) {
    return ad::smooth_l1(ad::linear(ad::global_avg_pool(ad::silu(v[0])), v[1], v[2]), v[3]);
  });
  return out;
}

SuiteResult grad_suite(const Options& opts) {
  Timer timer;
  SuiteResult r;
  r.suite = "grad";
  for (const auto& g : gradient_checks(opts)) {
    ++r.cases;
    r.max_error = std::max(r.max_error, g.max_rel_error);
    if (!g.passed)
      r.failures.push_back(g.op + fmt(": max relative error %.3e over %zu coordinates (", g.max_rel_error,
                                      g.coordinates) + g.worst + ")");
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteResult metrics_suite(const Options& opts) {
  using namespace metrics;
  Timer timer;
  SuiteResult r;
  r.suite = "metrics";
  std::mt19937_64 rng(opts.seed * 1000 + 53);
  std::uniform_real_distribution<double> pitch(-1.5, 1.5), yaw(-3.1, 3.1), scale(1e-3, 1e3);
  const GazeVector ex{{1, 0, 0}}, ey{{0, 1, 0}}, ez{{0, 0, 1}};
  record(r, "orthogonal x,y", std::abs(angular_error(ex, ey) - 90.0), 1e-10);
  record(r, "orthogonal y,z", std::abs(angular_error(ey, ez) - 90.0), 1e-10);
  record(r, "forward gaze", max_abs_diff(Tensor({3}, {0, 0, -1}),
                                         Tensor({3}, {angles_to_vector({0, 0}).g[0], angles_to_vector({0, 0}).g[1],
                                                      angles_to_vector({0, 0}).g[2]})),
         1e-15);
  // acos(cos(0.1)) in degrees
  record(r, "yaw 0.1 against forward",
         std::abs(angular_error(GazeVector{{0, 0, -1}}, angles_to_vector({0, 0.1})) - 0.1 * 180.0 / std::numbers::pi),
         1e-10);
  for (int i = 0; i < 200; ++i) {
    const auto a = angles_to_vector({pitch(rng), yaw(rng)});
    const auto b = angles_to_vector({pitch(rng), yaw(rng)});
    record(r, fmt("identical #%d", i), angular_error(a, a), 1e-10);
    GazeVector neg{{-a.g[0], -a.g[1], -a.g[2]}};
    record(r, fmt("antiparallel #%d", i), std::abs(angular_error(a, neg) - 180.0), 1e-10);
    record(r, fmt("unit norm #%d", i), std::abs(a.norm() - 1.0), 1e-12);
    record(r, fmt("symmetry #%d", i), std::abs(angular_error(a, b) - angular_error(b, a)), 1e-300);
    const double c = scale(rng);
    GazeVector scaled{{c * a.g[0], c * a.g[1], c * a.g[2]}};
    record(r, fmt("scale invariance #%d (c=%g)", i, c), std::abs(angular_error(scaled, b) - angular_error(a, b)),
           1e-10);
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteResult run_suite(std::string_view name, const Options& opts) {
  if (name == "fft") return fft_suite(opts);
  if (name == "conv") return conv_suite(opts);
  if (name == "mask") return mask_suite(opts);
  if (name == "grad") return grad_suite(opts);
  if (name == "metrics") return metrics_suite(opts);
  throw InvalidArgument("unknown verify suite '" + std::string(name) + "' (expected fft, conv, mask, grad or metrics)");
}

}  // namespace frnet::verify
