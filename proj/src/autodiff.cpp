#include "frnet/autodiff.hpp"

#include <array>
#include <atomic>
#include <cmath>

#include "frnet/fft.hpp"
#include "frnet/kernels.hpp"

namespace frnet::ad {

namespace {

constexpr std::array<std::string_view, kOpKindCount> kOpNames = {
    "constant",     "parameter",         "add",         "sub",    "mul",
    "scale",        "sum",               "mean",        "reshape", "conv2d",
    "channel_affine", "channel_layer_norm", "silu",     "global_filter",
    "concat_channels", "global_avg_pool", "linear",     "smooth_l1",
};

std::atomic<int> g_fault{-1};

template <typename T>
const T& attrs_as(const OpAttrs& attrs, OpKind op) {
  if (const auto* a = std::get_if<T>(&attrs)) return *a;
  throw InvalidArgument("missing or wrong attributes for op " + std::string(op_name(op)));
}

void require_arity(OpKind op, std::span<const Tensor* const> in, std::size_t lo, std::size_t hi) {
  if (in.size() < lo || in.size() > hi)
    throw InvalidArgument(std::string(op_name(op)) + ": expected " + std::to_string(lo) +
                          (lo == hi ? "" : ".." + std::to_string(hi)) + " inputs, got " +
                          std::to_string(in.size()));
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank)
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
}

void require_channel_vector(const Tensor& v, std::size_t channels, const char* what) {
  if (v.shape() != Shape{channels})
    throw ShapeError(std::string(what) + ": expected [" + std::to_string(channels) + "], got " +
                     shape_string(v.shape()));
}

real_t sigmoid(real_t x) { return real_t(1) / (real_t(1) + std::exp(-x)); }

struct Forward {
  Tensor value;
  std::vector<Tensor> saved;
};

Forward forward_op(OpKind op, std::span<const Tensor* const> in, const OpAttrs& attrs) {
  switch (op) {
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul: {
      require_arity(op, in, 2, 2);
      const auto kind = op == OpKind::Add   ? ElementwiseOp::Add
                        : op == OpKind::Sub ? ElementwiseOp::Sub
                                            : ElementwiseOp::Mul;
      return {elementwise(*in[0], *in[1], kind), {}};
    }
    case OpKind::Scale: {
      require_arity(op, in, 1, 1);
      const auto& a = attrs_as<ScaleAttrs>(attrs, op);
      return {Tensor(in[0]->shape(), in[0]->array() * a.factor), {}};
    }
    case OpKind::Sum:
      require_arity(op, in, 1, 1);
      return {Tensor::scalar(in[0]->sum()), {}};
    case OpKind::Mean:
      require_arity(op, in, 1, 1);
      return {Tensor::scalar(in[0]->sum() / static_cast<real_t>(in[0]->size())), {}};
    case OpKind::Reshape: {
      require_arity(op, in, 1, 1);
      return {in[0]->reshaped(attrs_as<ReshapeAttrs>(attrs, op).shape), {}};
    }
    case OpKind::Conv2d: {
      require_arity(op, in, 2, 3);
      const auto& a = attrs_as<Conv2dAttrs>(attrs, op);
      return {kernels::conv2d(*in[0], *in[1], in.size() == 3 ? in[2] : nullptr, a.stride,
                              a.padding, a.groups),
              {}};
    }
    case OpKind::ChannelAffine: {
      require_arity(op, in, 3, 3);
      const Tensor& x = *in[0];
      require_rank(x, 3, "channel_affine");
      require_channel_vector(*in[1], x.dim(0), "channel_affine gamma");
      require_channel_vector(*in[2], x.dim(0), "channel_affine beta");
      Tensor y(x.shape());
      const std::size_t plane = x.dim(1) * x.dim(2);
      for (std::size_t c = 0; c < x.dim(0); ++c) {
        const real_t g = (*in[1])[c], b = (*in[2])[c];
        for (std::size_t i = 0; i < plane; ++i) y[c * plane + i] = g * x[c * plane + i] + b;
      }
      return {std::move(y), {}};
    }
    case OpKind::ChannelLayerNorm: {
      require_arity(op, in, 3, 3);
      const Tensor& x = *in[0];
      require_rank(x, 3, "channel_layer_norm");
      const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
      require_channel_vector(*in[1], c, "channel_layer_norm gamma");
      require_channel_vector(*in[2], c, "channel_layer_norm beta");
      const real_t eps = attrs_as<LayerNormAttrs>(attrs, op).eps;
      Tensor xhat(x.shape()), rstd({plane}), y(x.shape());
      for (std::size_t p = 0; p < plane; ++p) {
        real_t mu = 0;
        for (std::size_t k = 0; k < c; ++k) mu += x[k * plane + p];
        mu /= static_cast<real_t>(c);
        real_t var = 0;
        for (std::size_t k = 0; k < c; ++k) {
          const real_t d = x[k * plane + p] - mu;
          var += d * d;
        }
        var /= static_cast<real_t>(c);
        const real_t r = real_t(1) / std::sqrt(var + eps);
        rstd[p] = r;
        for (std::size_t k = 0; k < c; ++k) {
          const real_t xh = (x[k * plane + p] - mu) * r;
          xhat[k * plane + p] = xh;
          y[k * plane + p] = (*in[1])[k] * xh + (*in[2])[k];
        }
      }
      return {std::move(y), {std::move(xhat), std::move(rstd)}};
    }
    case OpKind::Silu: {
      require_arity(op, in, 1, 1);
      const Tensor& x = *in[0];
      Tensor y(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * sigmoid(x[i]);
      return {std::move(y), {}};
    }
    case OpKind::GlobalFilter: {
      require_arity(op, in, 3, 3);
      const Tensor& x = *in[0];
      require_rank(x, 3, "global_filter");
      if (in[1]->shape() != x.shape() || in[2]->shape() != x.shape())
        throw ShapeError("global_filter: mask " + shape_string(in[1]->shape()) +
                         " does not match input " + shape_string(x.shape()));
      auto spectrum = fft2d_channels(x);
      const ComplexTensor mask(*in[1], *in[2]);
      Tensor y = ifft2d_channels_real(complex_hadamard(spectrum, mask));
      return {std::move(y), {std::move(spectrum.re()), std::move(spectrum.im())}};
    }
    case OpKind::ConcatChannels:
      require_arity(op, in, 2, 2);
      return {frnet::concat_channels(*in[0], *in[1]), {}};
    case OpKind::GlobalAvgPool: {
      require_arity(op, in, 1, 1);
      const Tensor& x = *in[0];
      require_rank(x, 3, "global_avg_pool");
      const std::size_t plane = x.dim(1) * x.dim(2);
      Tensor y({x.dim(0)});
      for (std::size_t c = 0; c < x.dim(0); ++c)
        y[c] = x.array().segment(static_cast<Eigen::Index>(c * plane),
                                 static_cast<Eigen::Index>(plane))
                   .sum() /
               static_cast<real_t>(plane);
      return {std::move(y), {}};
    }
    case OpKind::Linear: {
      require_arity(op, in, 3, 3);
      const Tensor& x = *in[0];
      const Tensor& w = *in[1];
      require_rank(x, 1, "linear input");
      require_rank(w, 2, "linear weight");
      if (w.dim(1) != x.dim(0))
        throw ShapeError("linear: weight " + shape_string(w.shape()) + " vs input " +
                         shape_string(x.shape()));
      require_channel_vector(*in[2], w.dim(0), "linear bias");
      Tensor y({w.dim(0)});
      y.array().matrix().noalias() = as_matrix(w, w.dim(0), w.dim(1)) * x.array().matrix();
      y.array() += in[2]->array();
      return {std::move(y), {}};
    }
    case OpKind::SmoothL1: {
      require_arity(op, in, 2, 2);
      detail::require_same_shape(in[0]->shape(), in[1]->shape(), "smooth_l1");
      const real_t beta = attrs_as<SmoothL1Attrs>(attrs, op).beta;
      if (!(beta > 0)) throw InvalidArgument("smooth_l1: beta must be > 0");
      real_t total = 0;
      for (std::size_t i = 0; i < in[0]->size(); ++i) {
        const real_t d = (*in[0])[i] - (*in[1])[i];
        const real_t ad = std::abs(d);
        total += ad < beta ? real_t(0.5) * d * d / beta : ad - real_t(0.5) * beta;
      }
      return {Tensor::scalar(total / static_cast<real_t>(in[0]->size())), {}};
    }
    case OpKind::Constant:
    case OpKind::Parameter:
      break;
  }
  throw InternalError("record: op id " + std::to_string(static_cast<int>(op)) +
                      " has no forward rule");
}

}  // namespace

std::string_view op_name(OpKind op) {
  const auto i = static_cast<std::size_t>(op);
  return i < kOpNames.size() ? kOpNames[i] : std::string_view("unknown");
}

std::optional<OpKind> op_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i)
    if (kOpNames[i] == name) return static_cast<OpKind>(i);
  return std::nullopt;
}

void zero_grad(std::span<Parameter* const> params) {
  for (auto* p : params) p->zero_grad();
}

const Tensor& Var::value() const {
  if (!tape) throw InvalidArgument("Var is not bound to a tape");
  return tape->value(*this);
}

void Tape::check_input(const Var& v) const {
  if (v.tape != this) throw InvalidArgument("input node belongs to a different tape");
  if (v.id >= nodes_.size())
    throw InvalidArgument("input node id " + std::to_string(v.id) + " is not on the tape (size " +
                          std::to_string(nodes_.size()) + ")");
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{OpKind::Constant, {}, {}, std::move(value), {}, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back(Node{OpKind::Parameter, {}, {}, p.value(), {}, &p});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(OpKind op, std::span<const Var> inputs, OpAttrs attrs) {
  if (static_cast<std::size_t>(op) >= kOpKindCount)
    throw InternalError("record: unknown op id " + std::to_string(static_cast<int>(op)));
  if (op == OpKind::Constant || op == OpKind::Parameter)
    throw InvalidArgument("record: leaves are created with constant()/parameter()");
  std::vector<std::size_t> ids;
  std::vector<const Tensor*> values;
  ids.reserve(inputs.size());
  values.reserve(inputs.size());
  for (const auto& v : inputs) {
    check_input(v);
    ids.push_back(v.id);
    values.push_back(&nodes_[v.id].value);
  }
  auto fwd = forward_op(op, values, attrs);
  nodes_.push_back(
      Node{op, std::move(ids), std::move(attrs), std::move(fwd.value), std::move(fwd.saved), nullptr});
  return Var{this, nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const {
  check_input(v);
  return nodes_[v.id].value;
}

OpKind Tape::op(Var v) const {
  check_input(v);
  return nodes_[v.id].op;
}

const Tensor* Tape::grad(Var v) const {
  check_input(v);
  if (v.id >= grads_.size() || !grads_[v.id]) return nullptr;
  return &*grads_[v.id];
}

void Tape::run_backward(Var loss) {
  check_input(loss);
  if (nodes_[loss.id].value.size() != 1)
    throw InvalidArgument("backward: loss must be scalar-shaped, got " +
                          shape_string(nodes_[loss.id].value.shape()));
  grads_.assign(nodes_.size(), std::nullopt);
  grads_[loss.id] = Tensor::ones(nodes_[loss.id].value.shape());
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (!grads_[i]) continue;
    const Node& node = nodes_[i];
    if (node.inputs.empty()) continue;
    auto in_grads = backward_node(node, *grads_[i]);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      auto& slot = grads_[node.inputs[k]];
      if (!slot)
        slot = std::move(in_grads[k]);
      else
        slot->array() += in_grads[k].array();
    }
  }
}

void Tape::backward(Var loss) {
  run_backward(loss);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].param && grads_[i] && nodes_[i].param->trainable())
      nodes_[i].param->grad().array() += grads_[i]->array();
}

GradientMap Tape::gradients(Var loss) {
  run_backward(loss);
  GradientMap out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].param || !grads_[i] || !nodes_[i].param->trainable()) continue;
    auto [it, inserted] = out.try_emplace(nodes_[i].param, *grads_[i]);
    if (!inserted) it->second.array() += grads_[i]->array();
  }
  return out;
}

std::vector<Tensor> Tape::backward_node(const Node& node, const Tensor& gy) const {
  auto in = [&](std::size_t k) -> const Tensor& { return nodes_[node.inputs[k]].value; };
  std::vector<Tensor> g;
  switch (node.op) {
    case OpKind::Add:
      g = {gy, gy};
      break;
    case OpKind::Sub:
      g = {gy, Tensor(gy.shape(), -gy.array())};
      break;
    case OpKind::Mul:
      g = {Tensor(gy.shape(), gy.array() * in(1).array()),
           Tensor(gy.shape(), gy.array() * in(0).array())};
      break;
    case OpKind::Scale:
      g = {Tensor(gy.shape(), gy.array() * std::get<ScaleAttrs>(node.attrs).factor)};
      break;
    case OpKind::Sum:
      g = {Tensor::full(in(0).shape(), gy[0])};
      break;
    case OpKind::Mean:
      g = {Tensor::full(in(0).shape(), gy[0] / static_cast<real_t>(in(0).size()))};
      break;
    case OpKind::Reshape:
      g = {gy.reshaped(in(0).shape())};
      break;
    case OpKind::Conv2d: {
      const auto& a = std::get<Conv2dAttrs>(node.attrs);
      const bool has_bias = node.inputs.size() == 3;
      auto r = kernels::conv2d_backward(in(0), in(1), has_bias, gy, a.stride, a.padding, a.groups);
      g.push_back(std::move(r.dx));
      g.push_back(std::move(r.dweight));
      if (has_bias) g.push_back(std::move(*r.dbias));
      break;
    }
    case OpKind::ChannelAffine: {
      const Tensor& x = in(0);
      const Tensor& gamma = in(1);
      const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
      Tensor dx(x.shape()), dgamma({c}), dbeta({c});
      for (std::size_t k = 0; k < c; ++k) {
        real_t sg = 0, sb = 0;
        for (std::size_t i = 0; i < plane; ++i) {
          const real_t go = gy[k * plane + i];
          dx[k * plane + i] = go * gamma[k];
          sg += go * x[k * plane + i];
          sb += go;
        }
        dgamma[k] = sg;
        dbeta[k] = sb;
      }
      g = {std::move(dx), std::move(dgamma), std::move(dbeta)};
      break;
    }
    case OpKind::ChannelLayerNorm: {
      const Tensor& x = in(0);
      const Tensor& gamma = in(1);
      const Tensor& xhat = node.saved[0];
      const Tensor& rstd = node.saved[1];
      const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
      Tensor dx(x.shape()), dgamma({c}), dbeta({c});
      for (std::size_t p = 0; p < plane; ++p) {
        real_t mean_g = 0, mean_gx = 0;
        for (std::size_t k = 0; k < c; ++k) {
          const std::size_t at = k * plane + p;
          const real_t gk = gy[at] * gamma[k];
          mean_g += gk;
          mean_gx += gk * xhat[at];
          dgamma[k] += gy[at] * xhat[at];
          dbeta[k] += gy[at];
        }
        mean_g /= static_cast<real_t>(c);
        mean_gx /= static_cast<real_t>(c);
        for (std::size_t k = 0; k < c; ++k) {
          const std::size_t at = k * plane + p;
          dx[at] = rstd[p] * (gy[at] * gamma[k] - mean_g - xhat[at] * mean_gx);
        }
      }
      g = {std::move(dx), std::move(dgamma), std::move(dbeta)};
      break;
    }
    case OpKind::Silu: {
      const Tensor& x = in(0);
      Tensor dx(x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) {
        const real_t s = sigmoid(x[i]);
        dx[i] = gy[i] * s * (real_t(1) + x[i] * (real_t(1) - s));
      }
      g = {std::move(dx)};
      break;
    }
    case OpKind::GlobalFilter: {
      // y = re(ifft(X*M)): dM = fft(gy) * conj(X) / (h*w), dx = re(ifft(fft(gy) * conj(M))).
      const Tensor& xr = node.saved[0];
      const Tensor& xi = node.saved[1];
      const Tensor& mr = in(1);
      const Tensor& mi = in(2);
      const ComplexTensor gspec = fft2d_channels(gy);
      const auto& gr = gspec.re().array();
      const auto& gi = gspec.im().array();
      const real_t inv_n = real_t(1) / static_cast<real_t>(gy.dim(1) * gy.dim(2));
      Tensor dmr(gy.shape(), (gr * xr.array() + gi * xi.array()) * inv_n);
      Tensor dmi(gy.shape(), (gi * xr.array() - gr * xi.array()) * inv_n);
      ComplexTensor back(Tensor(gy.shape(), gr * mr.array() + gi * mi.array()),
                         Tensor(gy.shape(), gi * mr.array() - gr * mi.array()));
      g = {ifft2d_channels_real(std::move(back)), std::move(dmr), std::move(dmi)};
      break;
    }
    case OpKind::ConcatChannels: {
      const std::size_t ca = in(0).dim(0);
      g = {slice_channels(gy, 0, ca), slice_channels(gy, ca, gy.dim(0))};
      break;
    }
    case OpKind::GlobalAvgPool: {
      const Tensor& x = in(0);
      const std::size_t plane = x.dim(1) * x.dim(2);
      Tensor dx(x.shape());
      for (std::size_t c = 0; c < x.dim(0); ++c)
        dx.array().segment(static_cast<Eigen::Index>(c * plane), static_cast<Eigen::Index>(plane))
            .setConstant(gy[c] / static_cast<real_t>(plane));
      g = {std::move(dx)};
      break;
    }
    case OpKind::Linear: {
      const Tensor& x = in(0);
      const Tensor& w = in(1);
      Tensor dx({x.dim(0)}), dw(w.shape());
      dx.array().matrix().noalias() =
          as_matrix(w, w.dim(0), w.dim(1)).transpose() * gy.array().matrix();
      as_matrix(dw, w.dim(0), w.dim(1)).noalias() =
          gy.array().matrix() * x.array().matrix().transpose();
      g = {std::move(dx), std::move(dw), gy};
      break;
    }
    case OpKind::SmoothL1: {
      const Tensor& p = in(0);
      const Tensor& t = in(1);
      const real_t beta = std::get<SmoothL1Attrs>(node.attrs).beta;
      const real_t scale = gy[0] / static_cast<real_t>(p.size());
      Tensor dp(p.shape());
      for (std::size_t i = 0; i < p.size(); ++i) {
        const real_t d = p[i] - t[i];
        const real_t slope = std::abs(d) < beta ? d / beta : (d > 0 ? real_t(1) : real_t(-1));
        dp[i] = slope * scale;
      }
      g = {dp, Tensor(dp.shape(), -dp.array())};
      break;
    }
    case OpKind::Constant:
    case OpKind::Parameter:
      throw InternalError("backward: leaf node has no backward rule");
  }
  const int fault = g_fault.load(std::memory_order_relaxed);
  if (fault == static_cast<int>(node.op))
    for (auto& t : g) t.array() *= real_t(1.05);
  return g;
}

Var add(Var a, Var b) { return a.tape->record(OpKind::Add, {a, b}); }
Var sub(Var a, Var b) { return a.tape->record(OpKind::Sub, {a, b}); }
Var mul(Var a, Var b) { return a.tape->record(OpKind::Mul, {a, b}); }
Var scale(Var a, real_t factor) { return a.tape->record(OpKind::Scale, {a}, ScaleAttrs{factor}); }
Var sum(Var a) { return a.tape->record(OpKind::Sum, {a}); }
Var mean(Var a) { return a.tape->record(OpKind::Mean, {a}); }
Var reshape(Var a, Shape shape) {
  return a.tape->record(OpKind::Reshape, {a}, ReshapeAttrs{std::move(shape)});
}
Var conv2d(Var x, Var weight, std::optional<Var> bias, Conv2dAttrs attrs) {
  if (bias) return x.tape->record(OpKind::Conv2d, {x, weight, *bias}, attrs);
  return x.tape->record(OpKind::Conv2d, {x, weight}, attrs);
}
Var channel_affine(Var x, Var gamma, Var beta) {
  return x.tape->record(OpKind::ChannelAffine, {x, gamma, beta});
}
Var channel_layer_norm(Var x, Var gamma, Var beta, real_t eps) {
  return x.tape->record(OpKind::ChannelLayerNorm, {x, gamma, beta}, LayerNormAttrs{eps});
}
Var silu(Var x) { return x.tape->record(OpKind::Silu, {x}); }
Var global_filter(Var x, Var mask_re, Var mask_im) {
  return x.tape->record(OpKind::GlobalFilter, {x, mask_re, mask_im});
}
Var concat_channels(Var a, Var b) { return a.tape->record(OpKind::ConcatChannels, {a, b}); }
Var global_avg_pool(Var x) { return x.tape->record(OpKind::GlobalAvgPool, {x}); }
Var linear(Var x, Var weight, Var bias) {
  return x.tape->record(OpKind::Linear, {x, weight, bias});
}
Var smooth_l1(Var pred, Var target, real_t beta) {
  return pred.tape->record(OpKind::SmoothL1, {pred, target}, SmoothL1Attrs{beta});
}

namespace testing {

void inject_fault(std::optional<OpKind> op) {
  g_fault.store(op ? static_cast<int>(*op) : -1, std::memory_order_relaxed);
}

std::optional<OpKind> injected_fault() {
  const int f = g_fault.load(std::memory_order_relaxed);
  if (f < 0) return std::nullopt;
  return static_cast<OpKind>(f);
}

}  // namespace testing

}  // namespace frnet::ad
