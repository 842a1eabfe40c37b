#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "frnet/autodiff.hpp"
#include "frnet/tensor.hpp"

namespace frnet::nn {

using ad::Parameter;
using ad::Tape;
using ad::Var;

/// Switches for the four ablation variants.
struct AblationFlags {
  bool disable_fft_residual_block = false;  // block -> single inverted residual block
  bool disable_fft_encoder = false;         // encoder stack -> identity
  bool disable_concat_shortcut = false;     // fusion sees encoder output only
  bool disable_encoder_shortcut = false;    // drop the add around the global filter

  bool operator==(const AblationFlags&) const = default;
};

struct ModelConfig {
  std::size_t input_size = 256;
  std::array<std::size_t, 5> stage_channels{16, 24, 48, 64, 80};
  std::array<std::size_t, 3> encoder_dims{64, 80, 96};
  std::array<std::size_t, 3> encoders_per_block{1, 3, 4};
  std::size_t head_channels = 320;
  std::size_t output_dims = 2;
  std::size_t ffn_expansion = 2;
  std::size_t irb_expansion = 2;
  AblationFlags ablation;

  /// Full-size architecture at 256x256.
  static ModelConfig paper();
  /// Same architecture at the 64x64 desk-scale training resolution.
  static ModelConfig desk();

  void validate() const;

  /// Human-editable `key = value` lines; `#` starts a comment.
  std::string to_text() const;
  static ModelConfig from_text(std::string_view text);
  static ModelConfig load(const std::filesystem::path& path);

  /// Sets one field from its text form. Throws InvalidArgument on unknown keys.
  void set(std::string_view key, std::string_view value);
  /// Turns on a named ablation flag.
  void ablate(std::string_view flag);

  bool operator==(const ModelConfig&) const = default;
};

/// One primitive layer in execution order, enough for analytic cost counting.
struct Primitive {
  enum class Kind { Conv2d, ChannelAffine, LayerNorm, Silu, GlobalFilter, Add, Concat, GlobalAvgPool, Linear };
  std::string name;
  Kind kind;
  Shape input;
  Shape output;
  std::size_t params = 0;
  std::size_t kernel = 1;
  std::size_t groups = 1;
  std::size_t stride = 1;
  bool bias = false;
};

using Trace = std::vector<Primitive>;
using Rng = std::mt19937_64;

class Conv2d {
 public:
  Conv2d(std::string name, std::size_t cin, std::size_t cout, std::size_t kernel,
         std::size_t stride, std::size_t groups, bool bias, Rng& rng);

  static Conv2d pointwise(std::string name, std::size_t cin, std::size_t cout, bool bias, Rng& rng) {
    return Conv2d(std::move(name), cin, cout, 1, 1, 1, bias, rng);
  }
  static Conv2d depthwise(std::string name, std::size_t channels, std::size_t kernel,
                          std::size_t stride, Rng& rng) {
    return Conv2d(std::move(name), channels, channels, kernel, stride, channels, false, rng);
  }

  Var forward(Var x);
  Shape trace(const Shape& in, Trace& out) const;
  void collect(std::vector<Parameter*>& out);

  Parameter& weight() { return weight_; }
  std::optional<Parameter>& bias() { return bias_; }

 private:
  std::string name_;
  std::size_t stride_, padding_, groups_;
  Parameter weight_;
  std::optional<Parameter> bias_;
};

/// Per-channel learnable scale and shift with no batch or spatial statistics.
class ChannelAffine {
 public:
  ChannelAffine(std::string name, std::size_t channels);
  Var forward(Var x);
  Shape trace(const Shape& in, Trace& out) const;
  void collect(std::vector<Parameter*>& out);

 private:
  std::string name_;
  Parameter gamma_, beta_;
};

/// LayerNorm over the channel axis at every pixel.
class LayerNorm {
 public:
  LayerNorm(std::string name, std::size_t channels);
  Var forward(Var x);
  Shape trace(const Shape& in, Trace& out) const;
  void collect(std::vector<Parameter*>& out);

 private:
  std::string name_;
  Parameter gamma_, beta_;
};

/// Trainable complex per-frequency mask, stored as real and imaginary planes.
class SpectralMask {
 public:
  /// Identity filter (1 + 0i) plus N(0, noise_std) on both parts.
  SpectralMask(std::string name, std::size_t channels, std::size_t h, std::size_t w, Rng& rng,
               real_t noise_std = real_t(0.02));

  Var forward(Var x);
  Shape trace(const Shape& in, Trace& out) const;
  void collect(std::vector<Parameter*>& out);

  Parameter& re() { return re_; }
  Parameter& im() { return im_; }
  const Shape& shape() const { return re_.value().shape(); }

 private:
  std::string name_;
  Parameter re_, im_;
};

/// expand 1x1 -> norm/SiLU -> depthwise 3x3 (stride) -> norm/SiLU -> project 1x1 -> norm,
/// plus the input when stride == 1 and cin == cout.
class InvertedResidualBlock {
 public:
  InvertedResidualBlock(std::string name, std::size_t cin, std::size_t cout, std::size_t stride,
                        std::size_t expansion, Rng& rng);
  Var forward(Var x);
  Shape trace(const Shape& in, Trace& out) const;
  void collect(std::vector<Parameter*>& out);
  bool has_residual() const { return residual_; }

 private:
  std::string name_;
  bool residual_;
  Conv2d expand_;
  ChannelAffine n1_;
  Conv2d depthwise_;
  ChannelAffine n2_;
  Conv2d project_;
  ChannelAffine n3_;
};

/// Transformer-encoder skeleton with the global filter in the token-mixing slot:
///   u = x + filter(norm(x));  y = u + ffn(norm(u))
class FftEncoder {
 public:
  FftEncoder(std::string name, std::size_t dim, std::size_t h, std::size_t w,
             std::size_t ffn_expansion, bool encoder_shortcut, Rng& rng);
  Var forward(Var x);
  Shape trace(const Shape& in, Trace& out) const;
  void collect(std::vector<Parameter*>& out);

  SpectralMask& mask() { return filter_; }

 private:
  std::string name_;
  bool shortcut_;
  LayerNorm ln1_;
  SpectralMask filter_;
  LayerNorm ln2_;
  Conv2d ffn_expand_;
  Conv2d ffn_project_;
};

/// Local depthwise 3x3 and 1x1 projection to the encoder width, a stack of FFT
/// encoders, then concat(encoders(x), x) fused back to the input width by a 1x1 conv.
class FftResidualBlock {
 public:
  FftResidualBlock(std::string name, std::size_t channels, std::size_t dim, std::size_t depth,
                   std::size_t h, std::size_t w, const ModelConfig& config, Rng& rng);
  Var forward(Var x);
  Shape trace(const Shape& in, Trace& out) const;
  void collect(std::vector<Parameter*>& out);

  std::size_t fusion_in_channels() const { return fusion_in_; }
  std::vector<FftEncoder>& encoders() { return encoders_; }

 private:
  std::string name_;
  AblationFlags flags_;
  std::size_t fusion_in_ = 0;
  std::optional<InvertedResidualBlock> replacement_;
  std::optional<Conv2d> local_;
  std::optional<ChannelAffine> local_norm_;
  std::optional<Conv2d> to_dim_;
  std::vector<FftEncoder> encoders_;
  std::optional<Conv2d> fuse_;
  std::optional<ChannelAffine> fuse_norm_;
};

/// The full network: image [3,S,S] -> [yaw, pitch] in radians.
class FrNet {
 public:
  explicit FrNet(ModelConfig config, std::uint64_t seed = 0);
  ~FrNet();
  FrNet(FrNet&&) noexcept;
  FrNet& operator=(FrNet&&) noexcept;

  const ModelConfig& config() const;

  /// Records the forward pass for `image` onto `tape`. Reads parameters only.
  Var forward(Tape& tape, const Tensor& image);
  /// Forward pass without keeping the tape.
  Tensor predict(const Tensor& image);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;
  Parameter* find(std::string_view name);

  Trace trace() const;

 private:
  struct Body;
  std::unique_ptr<Body> body_;
};

// Checkpoint layout, integers little-endian:
//   "FRCK" | version u32 | config_len u32 | config text | count u32 |
//   manifest: count x { name_len u32 | name | rank u32 | dims u32 x rank | offset u64 } |
//   tensor records (FRTN), offsets relative to the first record.
inline constexpr char kCheckpointMagic[4] = {'F', 'R', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const FrNet& model);
FrNet load_checkpoint(const std::filesystem::path& path);

/// Reads only the embedded configuration.
ModelConfig read_checkpoint_config(const std::filesystem::path& path);

/// Overwrites parameter values of an existing model. Throws FormatError if names
/// or shapes disagree with the model.
void load_checkpoint_into(const std::filesystem::path& path, FrNet& model);

}  // namespace frnet::nn
