#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "frnet/tensor.hpp"

namespace frnet::ad {

/// A named tensor the optimizer updates, plus its accumulated gradient.
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Tensor value, bool trainable = true)
      : name_(std::move(name)), value_(std::move(value)), grad_(value_.shape()),
        trainable_(trainable) {}

  const std::string& name() const { return name_; }
  Tensor& value() { return value_; }
  const Tensor& value() const { return value_; }
  Tensor& grad() { return grad_; }
  const Tensor& grad() const { return grad_; }
  bool trainable() const { return trainable_; }
  std::size_t numel() const { return value_.size(); }

  void zero_grad() { grad_.array().setZero(); }

 private:
  std::string name_;
  Tensor value_;
  Tensor grad_;
  bool trainable_ = true;
};

void zero_grad(std::span<Parameter* const> params);

enum class OpKind : std::uint8_t {
  Constant,
  Parameter,
  Add,
  Sub,
  Mul,
  Scale,
  Sum,
  Mean,
  Reshape,
  Conv2d,
  ChannelAffine,
  ChannelLayerNorm,
  Silu,
  GlobalFilter,
  ConcatChannels,
  GlobalAvgPool,
  Linear,
  SmoothL1,
};

inline constexpr std::size_t kOpKindCount = 18;

std::string_view op_name(OpKind op);
std::optional<OpKind> op_from_name(std::string_view name);

struct Conv2dAttrs {
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t groups = 1;
};
struct ScaleAttrs {
  real_t factor = 1;
};
struct ReshapeAttrs {
  Shape shape;
};
struct LayerNormAttrs {
  real_t eps = real_t(1e-5);
};
struct SmoothL1Attrs {
  real_t beta = 1;
};

using OpAttrs =
    std::variant<std::monostate, Conv2dAttrs, ScaleAttrs, ReshapeAttrs, LayerNormAttrs, SmoothL1Attrs>;

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

using GradientMap = std::unordered_map<const Parameter*, Tensor>;

/// Define-by-run record of forward operations. Nodes are appended in evaluation
/// order, so append order is a topological order and backward walks it in reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(Parameter& p);

  /// Evaluates `op` on the inputs' values and appends the node.
  Var record(OpKind op, std::span<const Var> inputs, OpAttrs attrs = {});
  Var record(OpKind op, std::initializer_list<Var> inputs, OpAttrs attrs = {}) {
    return record(op, std::span<const Var>(inputs.begin(), inputs.size()), std::move(attrs));
  }

  const Tensor& value(Var v) const;
  OpKind op(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Reverse pass from a scalar loss. Parameter gradients are added into
  /// Parameter::grad; they accumulate until zero_grad.
  void backward(Var loss);

  /// Reverse pass that returns per-parameter gradients and leaves
  /// Parameter::grad untouched.
  GradientMap gradients(Var loss);

  /// Gradient of the last reverse pass at any node; nullptr when the node was
  /// not reached.
  const Tensor* grad(Var v) const;

 private:
  struct Node {
    OpKind op;
    std::vector<std::size_t> inputs;
    OpAttrs attrs;
    Tensor value;
    std::vector<Tensor> saved;
    Parameter* param = nullptr;
  };

  void check_input(const Var& v) const;
  void run_backward(Var loss);
  std::vector<Tensor> backward_node(const Node& node, const Tensor& grad_out) const;

  std::vector<Node> nodes_;
  std::vector<std::optional<Tensor>> grads_;
};

// Convenience builders over Tape::record.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, real_t factor);
Var sum(Var a);
Var mean(Var a);
Var reshape(Var a, Shape shape);
Var conv2d(Var x, Var weight, std::optional<Var> bias, Conv2dAttrs attrs);
Var channel_affine(Var x, Var gamma, Var beta);
Var channel_layer_norm(Var x, Var gamma, Var beta, real_t eps = real_t(1e-5));
Var silu(Var x);
Var global_filter(Var x, Var mask_re, Var mask_im);
Var concat_channels(Var a, Var b);
Var global_avg_pool(Var x);
Var linear(Var x, Var weight, Var bias);
Var smooth_l1(Var pred, Var target, real_t beta = 1);

namespace testing {

/// Perturbs the backward rule of `op` (scales its input gradients by 1.05) so
/// verification harnesses can prove they catch a broken rule. nullopt clears it.
void inject_fault(std::optional<OpKind> op);
std::optional<OpKind> injected_fault();

}  // namespace testing

}  // namespace frnet::ad
