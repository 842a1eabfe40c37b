#include "frnet/kernels.hpp"

#include <string>

namespace frnet::kernels {

namespace {

using Matrix = Eigen::Matrix<real_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

// col[(c*kh + ky)*kw + kx, oy*wo + ox] for channels [c0, c0 + channels).
Matrix im2col(const Tensor& x, const ConvGeometry& g, std::size_t c0, std::size_t channels) {
  Matrix col = Matrix::Zero(static_cast<Eigen::Index>(channels * g.kh * g.kw),
                            static_cast<Eigen::Index>(g.ho * g.wo));
  const real_t* xp = x.data();
  for (std::size_t c = 0; c < channels; ++c) {
    const real_t* plane = xp + (c0 + c) * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        real_t* row = col.data() + ((c * g.kh + ky) * g.kw + kx) * g.ho * g.wo;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            row[oy * g.wo + ox] = plane[iy * static_cast<std::ptrdiff_t>(g.w) + ix];
          }
        }
      }
    }
  }
  return col;
}

void col2im_add(const Matrix& col, const ConvGeometry& g, std::size_t c0, std::size_t channels,
                Tensor& dx) {
  real_t* xp = dx.data();
  for (std::size_t c = 0; c < channels; ++c) {
    real_t* plane = xp + (c0 + c) * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const real_t* row = col.data() + ((c * g.kh + ky) * g.kw + kx) * g.ho * g.wo;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            plane[iy * static_cast<std::ptrdiff_t>(g.w) + ix] += row[oy * g.wo + ox];
          }
        }
      }
    }
  }
}

bool is_pointwise(const ConvGeometry& g) {
  return g.kh == 1 && g.kw == 1 && g.stride == 1 && g.padding == 0 && g.groups == 1;
}

bool is_depthwise(const ConvGeometry& g) {
  return g.groups == g.cin && g.groups == g.cout && g.groups > 1;
}

void depthwise_forward(const Tensor& x, const Tensor& weight, const ConvGeometry& g, Tensor& y) {
  for (std::size_t c = 0; c < g.cin; ++c) {
    const real_t* in = x.data() + c * g.h * g.w;
    const real_t* k = weight.data() + c * g.kh * g.kw;
    real_t* out = y.data() + c * g.ho * g.wo;
    for (std::size_t oy = 0; oy < g.ho; ++oy) {
      for (std::size_t ox = 0; ox < g.wo; ++ox) {
        real_t acc = 0;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            acc += k[ky * g.kw + kx] * in[iy * static_cast<std::ptrdiff_t>(g.w) + ix];
          }
        }
        out[oy * g.wo + ox] += acc;
      }
    }
  }
}

void depthwise_backward(const Tensor& x, const Tensor& weight, const Tensor& dy,
                        const ConvGeometry& g, Tensor& dx, Tensor& dw) {
  for (std::size_t c = 0; c < g.cin; ++c) {
    const real_t* in = x.data() + c * g.h * g.w;
    const real_t* k = weight.data() + c * g.kh * g.kw;
    const real_t* gout = dy.data() + c * g.ho * g.wo;
    real_t* gin = dx.data() + c * g.h * g.w;
    real_t* gk = dw.data() + c * g.kh * g.kw;
    for (std::size_t oy = 0; oy < g.ho; ++oy) {
      for (std::size_t ox = 0; ox < g.wo; ++ox) {
        const real_t go = gout[oy * g.wo + ox];
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            const auto at = iy * static_cast<std::ptrdiff_t>(g.w) + ix;
            gk[ky * g.kw + kx] += go * in[at];
            gin[at] += go * k[ky * g.kw + kx];
          }
        }
      }
    }
  }
}

}  // namespace

ConvGeometry conv_geometry(const Shape& x, const Shape& weight, std::size_t stride,
                           std::size_t padding, std::size_t groups) {
  if (x.size() != 3) throw ShapeError("conv2d expects input [C,H,W], got " + shape_string(x));
  if (weight.size() != 4)
    throw ShapeError("conv2d expects weight [Cout,Cin/g,KH,KW], got " + shape_string(weight));
  if (stride == 0 || groups == 0) throw InvalidArgument("conv2d: stride and groups must be >= 1");
  ConvGeometry g{x[0], x[1], x[2], weight[0], weight[2], weight[3], stride, padding, groups, 0, 0};
  if (g.cin % groups != 0 || g.cout % groups != 0)
    throw ShapeError("conv2d: channels not divisible by groups");
  if (weight[1] * groups != g.cin)
    throw ShapeError("conv2d: channel mismatch, input has " + std::to_string(g.cin) +
                     " channels, weight expects " + std::to_string(weight[1] * groups));
  if (g.h + 2 * padding < g.kh || g.w + 2 * padding < g.kw)
    throw ShapeError("conv2d: kernel larger than padded input");
  g.ho = (g.h + 2 * padding - g.kh) / stride + 1;
  g.wo = (g.w + 2 * padding - g.kw) / stride + 1;
  return g;
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor* bias, std::size_t stride,
              std::size_t padding, std::size_t groups) {
  const auto g = conv_geometry(x.shape(), weight.shape(), stride, padding, groups);
  if (bias && bias->shape() != Shape{g.cout})
    throw ShapeError("conv2d: bias shape " + shape_string(bias->shape()) + " != [" +
                     std::to_string(g.cout) + "]");
  Tensor y({g.cout, g.ho, g.wo});
  const auto hw_out = static_cast<Eigen::Index>(g.ho * g.wo);
  const std::size_t cin_g = g.cin / groups, cout_g = g.cout / groups;
  const std::size_t patch = cin_g * g.kh * g.kw;
  if (is_depthwise(g)) {
    depthwise_forward(x, weight, g, y);
  } else if (is_pointwise(g)) {
    MatrixMap(y.data(), static_cast<Eigen::Index>(g.cout), hw_out).noalias() =
        ConstMatrixMap(weight.data(), static_cast<Eigen::Index>(g.cout),
                       static_cast<Eigen::Index>(g.cin)) *
        ConstMatrixMap(x.data(), static_cast<Eigen::Index>(g.cin), hw_out);
  } else {
    for (std::size_t grp = 0; grp < groups; ++grp) {
      const Matrix col = im2col(x, g, grp * cin_g, cin_g);
      MatrixMap(y.data() + grp * cout_g * g.ho * g.wo, static_cast<Eigen::Index>(cout_g), hw_out)
          .noalias() = ConstMatrixMap(weight.data() + grp * cout_g * patch,
                                      static_cast<Eigen::Index>(cout_g),
                                      static_cast<Eigen::Index>(patch)) *
                       col;
    }
  }
  if (bias) {
    auto ym = MatrixMap(y.data(), static_cast<Eigen::Index>(g.cout), hw_out);
    for (std::size_t c = 0; c < g.cout; ++c) ym.row(static_cast<Eigen::Index>(c)).array() += (*bias)[c];
  }
  return y;
}

Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& weight, bool has_bias,
                            const Tensor& dy, std::size_t stride, std::size_t padding,
                            std::size_t groups) {
  const auto g = conv_geometry(x.shape(), weight.shape(), stride, padding, groups);
  if (dy.shape() != Shape{g.cout, g.ho, g.wo})
    throw ShapeError("conv2d backward: upstream gradient shape " + shape_string(dy.shape()));
  Conv2dGrads out{Tensor(x.shape()), Tensor(weight.shape()), std::nullopt};
  const auto hw_out = static_cast<Eigen::Index>(g.ho * g.wo);
  const std::size_t cin_g = g.cin / groups, cout_g = g.cout / groups;
  const std::size_t patch = cin_g * g.kh * g.kw;
  const ConstMatrixMap dym(dy.data(), static_cast<Eigen::Index>(g.cout), hw_out);
  if (is_depthwise(g)) {
    depthwise_backward(x, weight, dy, g, out.dx, out.dweight);
  } else if (is_pointwise(g)) {
    const auto cin = static_cast<Eigen::Index>(g.cin), cout = static_cast<Eigen::Index>(g.cout);
    const ConstMatrixMap xm(x.data(), cin, hw_out);
    const ConstMatrixMap wm(weight.data(), cout, cin);
    MatrixMap(out.dweight.data(), cout, cin).noalias() = dym * xm.transpose();
    MatrixMap(out.dx.data(), cin, hw_out).noalias() = wm.transpose() * dym;
  } else {
    for (std::size_t grp = 0; grp < groups; ++grp) {
      const Matrix col = im2col(x, g, grp * cin_g, cin_g);
      const auto dyg = dym.middleRows(static_cast<Eigen::Index>(grp * cout_g),
                                      static_cast<Eigen::Index>(cout_g));
      const ConstMatrixMap wg(weight.data() + grp * cout_g * patch,
                              static_cast<Eigen::Index>(cout_g), static_cast<Eigen::Index>(patch));
      MatrixMap(out.dweight.data() + grp * cout_g * patch, static_cast<Eigen::Index>(cout_g),
                static_cast<Eigen::Index>(patch))
          .noalias() = dyg * col.transpose();
      const Matrix dcol = wg.transpose() * dyg;
      col2im_add(dcol, g, grp * cin_g, cin_g, out.dx);
    }
  }
  if (has_bias) {
    Tensor db({g.cout});
    for (std::size_t c = 0; c < g.cout; ++c) db[c] = dym.row(static_cast<Eigen::Index>(c)).sum();
    out.dbias = std::move(db);
  }
  return out;
}

}  // namespace frnet::kernels
