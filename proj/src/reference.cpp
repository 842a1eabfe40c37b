#include "frnet/reference.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

namespace frnet::reference {

ComplexTensor naive_dft1d(const ComplexTensor& x, bool inverse) {
  if (x.shape().size() != 1) throw ShapeError("naive_dft1d expects rank 1");
  const std::size_t n = x.size();
  ComplexTensor out(x.shape());
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t u = 0; u < n; ++u) {
    double sr = 0, si = 0;
    for (std::size_t m = 0; m < n; ++m) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>((u * m) % n) /
                           static_cast<double>(n);
      const double c = std::cos(angle), s = std::sin(angle);
      sr += x.re()[m] * c - x.im()[m] * s;
      si += x.re()[m] * s + x.im()[m] * c;
    }
    const double scale = inverse ? 1.0 / static_cast<double>(n) : 1.0;
    out.re()[u] = static_cast<real_t>(sr * scale);
    out.im()[u] = static_cast<real_t>(si * scale);
  }
  return out;
}

ComplexTensor naive_dft2d(const ComplexTensor& x, bool inverse) {
  if (x.shape().size() != 2) throw ShapeError("naive_dft2d expects rank 2");
  const std::size_t M = x.shape()[0], N = x.shape()[1];
  ComplexTensor out(x.shape());
  const double sign = inverse ? 1.0 : -1.0;
  const double scale = inverse ? 1.0 / static_cast<double>(M * N) : 1.0;
  // exp(sign 2 pi i r / L) for r in [0, L)
  auto table = [sign](std::size_t L) {
    std::vector<std::complex<double>> t(L);
    for (std::size_t r = 0; r < L; ++r)
      t[r] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(L));
    return t;
  };
  const auto wm = table(M), wn = table(N);
  for (std::size_t u = 0; u < M; ++u) {
    for (std::size_t v = 0; v < N; ++v) {
      std::complex<double> acc = 0;
      for (std::size_t m = 0; m < M; ++m) {
        const std::complex<double> row_phase = wm[(u * m) % M];
        std::complex<double> row = 0;
        for (std::size_t n = 0; n < N; ++n)
          row += std::complex<double>(x.re()[m * N + n], x.im()[m * N + n]) * wn[(v * n) % N];
        acc += row_phase * row;
      }
      out.re()[u * N + v] = static_cast<real_t>(acc.real() * scale);
      out.im()[u * N + v] = static_cast<real_t>(acc.imag() * scale);
    }
  }
  return out;
}

Tensor direct_circular_conv2d(const Tensor& x, const Tensor& k) {
  if (x.rank() != 2 || k.rank() != 2) throw ShapeError("direct_circular_conv2d expects rank 2");
  const std::size_t H = x.dim(0), W = x.dim(1), KH = k.dim(0), KW = k.dim(1);
  if (KH > H || KW > W) throw InvalidArgument("direct_circular_conv2d: kernel larger than input");
  Tensor y({H, W});
  const real_t* xp = x.data();
  for (std::size_t i = 0; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) {
      real_t acc = 0;
      for (std::size_t a = 0; a < KH; ++a) {
        const std::size_t row = (i + H - a) % H;
        const real_t* xrow = xp + row * W;
        const real_t* krow = k.data() + a * KW;
        // columns (j - b) mod W split into the non-wrapped and wrapped runs
        const std::size_t direct = std::min(KW, j + 1);
        for (std::size_t b = 0; b < direct; ++b) acc += krow[b] * xrow[j - b];
        for (std::size_t b = direct; b < KW; ++b) acc += krow[b] * xrow[j + W - b];
      }
      y[i * W + j] = acc;
    }
  }
  return y;
}

Tensor direct_conv2d(const Tensor& x, const Tensor& weight, const Tensor* bias, std::size_t stride,
                     std::size_t padding, std::size_t groups) {
  const std::size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t cout = weight.dim(0), cin_g = weight.dim(1), kh = weight.dim(2),
                    kw = weight.dim(3);
  if (cin_g * groups != cin) throw ShapeError("direct_conv2d: channel mismatch");
  const std::size_t ho = (h + 2 * padding - kh) / stride + 1;
  const std::size_t wo = (w + 2 * padding - kw) / stride + 1;
  const std::size_t cout_g = cout / groups;
  Tensor y({cout, ho, wo});
  for (std::size_t co = 0; co < cout; ++co) {
    const std::size_t grp = co / cout_g;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double acc = bias ? (*bias)[co] : 0.0;
        for (std::size_t ci = 0; ci < cin_g; ++ci) {
          for (std::size_t ky = 0; ky < kh; ++ky) {
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(padding);
              const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(padding);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w))
                continue;
              acc += weight.at({co, ci, ky, kx}) *
                     x.at({grp * cin_g + ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)});
            }
          }
        }
        y.at({co, oy, ox}) = static_cast<real_t>(acc);
      }
    }
  }
  return y;
}

Tensor random_tensor(Shape shape, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<real_t>(dist(rng));
  return t;
}

namespace {

double evaluate(const std::vector<Tensor>& inputs, const Tensor& projection,
                const GraphBuilder& build) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  ad::Var out = build(vars);
  return static_cast<double>(ad::sum(ad::mul(out, tape.constant(projection))).value()[0]);
}

}  // namespace

GradCheckResult check_gradient(const std::string& op, const std::vector<Tensor>& inputs,
                               const GraphBuilder& build, std::size_t coords_per_input,
                               double eps, double tolerance, std::uint64_t seed) {
  GradCheckResult result;
  result.op = op;
  std::mt19937_64 rng(seed);

  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  ad::Var out = build(vars);
  const Tensor projection = random_tensor(out.shape(), seed ^ 0x9e3779b97f4a7c15ULL, 0.5, 1.5);
  ad::Var loss = ad::sum(ad::mul(out, tape.constant(projection)));
  tape.backward(loss);

  std::vector<Tensor> work = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor* analytic = tape.grad(vars[k]);
    const std::size_t n = inputs[k].size();
    std::vector<std::size_t> coords(n);
    for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::min(coords_per_input, n));
    for (auto i : coords) {
      const real_t orig = work[k][i];
      work[k][i] = orig + static_cast<real_t>(eps);
      const double up = evaluate(work, projection, build);
      work[k][i] = orig - static_cast<real_t>(eps);
      const double down = evaluate(work, projection, build);
      work[k][i] = orig;
      const double numeric = (up - down) / (2 * eps);
      const double a = analytic ? static_cast<double>((*analytic)[i]) : 0.0;
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      ++result.coordinates;
      if (rel > result.max_rel_error || result.worst.empty()) {
        result.max_rel_error = std::max(result.max_rel_error, rel);
        std::ostringstream os;
        os.precision(10);
        os << "input " << k << ", index " << i << ": analytic " << a << " vs numeric " << numeric;
        if (rel >= result.max_rel_error) result.worst = os.str();
      }
    }
  }
  result.passed = result.max_rel_error < tolerance;
  return result;
}

}  // namespace frnet::reference
