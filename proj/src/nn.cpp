#include "frnet/nn.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "frnet/fft.hpp"

namespace frnet::nn {

namespace {

Tensor uniform_fill(Shape shape, real_t bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-static_cast<double>(bound), static_cast<double>(bound));
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<real_t>(dist(rng));
  return t;
}

Shape conv_out(const Shape& in, std::size_t cout, std::size_t kernel, std::size_t stride) {
  const std::size_t pad = (kernel - 1) / 2;
  return {cout, (in[1] + 2 * pad - kernel) / stride + 1, (in[2] + 2 * pad - kernel) / stride + 1};
}

void add_primitive(Trace& out, std::string name, Primitive::Kind kind, const Shape& in,
                   const Shape& shape_out, std::size_t params = 0) {
  Primitive p;
  p.name = std::move(name);
  p.kind = kind;
  p.input = in;
  p.output = shape_out;
  p.params = params;
  out.push_back(std::move(p));
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelConfig

ModelConfig ModelConfig::paper() { return ModelConfig{}; }

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.input_size = 64;
  return c;
}

void ModelConfig::validate() const {
  if (!is_power_of_two(input_size) || input_size < 32)
    throw InvalidArgument("input_size must be a power of two >= 32, got " +
                          std::to_string(input_size));
  for (auto c : stage_channels)
    if (c == 0) throw InvalidArgument("stage_channels must be positive");
  for (auto d : encoder_dims)
    if (d == 0) throw InvalidArgument("encoder_dims must be positive");
  if (head_channels == 0 || output_dims == 0 || ffn_expansion == 0 || irb_expansion == 0)
    throw InvalidArgument("head_channels, output_dims and expansions must be positive");
}

namespace {

template <std::size_t N>
std::string join(const std::array<std::size_t, N>& v) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_count(std::string_view key, std::string_view text) {
  text = trim(text);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw InvalidArgument("config key '" + std::string(key) + "': expected an integer, got '" +
                          std::string(text) + "'");
  return v;
}

template <std::size_t N>
std::array<std::size_t, N> parse_list(std::string_view key, std::string_view text) {
  std::array<std::size_t, N> out{};
  std::size_t i = 0;
  while (true) {
    const auto comma = text.find(',');
    if (i >= N) throw InvalidArgument("config key '" + std::string(key) + "': too many values");
    out[i++] = parse_count(key, text.substr(0, comma));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (i != N)
    throw InvalidArgument("config key '" + std::string(key) + "': expected " + std::to_string(N) +
                          " values");
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw InvalidArgument("config key '" + std::string(key) + "': expected true/false, got '" +
                        std::string(text) + "'");
}

}  // namespace

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "input_size = " << input_size << '\n'
     << "stage_channels = " << join(stage_channels) << '\n'
     << "encoder_dims = " << join(encoder_dims) << '\n'
     << "encoders_per_block = " << join(encoders_per_block) << '\n'
     << "head_channels = " << head_channels << '\n'
     << "output_dims = " << output_dims << '\n'
     << "ffn_expansion = " << ffn_expansion << '\n'
     << "irb_expansion = " << irb_expansion << '\n'
     << std::boolalpha
     << "disable_fft_residual_block = " << ablation.disable_fft_residual_block << '\n'
     << "disable_fft_encoder = " << ablation.disable_fft_encoder << '\n'
     << "disable_concat_shortcut = " << ablation.disable_concat_shortcut << '\n'
     << "disable_encoder_shortcut = " << ablation.disable_encoder_shortcut << '\n';
  return os.str();
}

void ModelConfig::set(std::string_view key, std::string_view value) {
  if (key == "input_size") input_size = parse_count(key, value);
  else if (key == "stage_channels") stage_channels = parse_list<5>(key, value);
  else if (key == "encoder_dims") encoder_dims = parse_list<3>(key, value);
  else if (key == "encoders_per_block") encoders_per_block = parse_list<3>(key, value);
  else if (key == "head_channels") head_channels = parse_count(key, value);
  else if (key == "output_dims") output_dims = parse_count(key, value);
  else if (key == "ffn_expansion") ffn_expansion = parse_count(key, value);
  else if (key == "irb_expansion") irb_expansion = parse_count(key, value);
  else if (key == "disable_fft_residual_block") ablation.disable_fft_residual_block = parse_bool(key, value);
  else if (key == "disable_fft_encoder") ablation.disable_fft_encoder = parse_bool(key, value);
  else if (key == "disable_concat_shortcut") ablation.disable_concat_shortcut = parse_bool(key, value);
  else if (key == "disable_encoder_shortcut") ablation.disable_encoder_shortcut = parse_bool(key, value);
  else throw InvalidArgument("unknown config key '" + std::string(key) + "'");
}

void ModelConfig::ablate(std::string_view flag) {
  if (flag != "disable_fft_residual_block" && flag != "disable_fft_encoder" &&
      flag != "disable_concat_shortcut" && flag != "disable_encoder_shortcut")
    throw InvalidArgument("unknown ablation flag '" + std::string(flag) + "'");
  set(flag, "true");
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  ModelConfig c;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key = value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open model config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return from_text(ss.str());
}

// ---------------------------------------------------------------------------
// Layers

Conv2d::Conv2d(std::string name, std::size_t cin, std::size_t cout, std::size_t kernel,
               std::size_t stride, std::size_t groups, bool bias, Rng& rng)
    : name_(std::move(name)), stride_(stride), padding_((kernel - 1) / 2), groups_(groups) {
  if (kernel % 2 == 0) throw InvalidArgument(name_ + ": kernel size must be odd");
  if (cin % groups || cout % groups) throw ShapeError(name_ + ": channels not divisible by groups");
  const std::size_t fan_in = cin / groups * kernel * kernel;
  const real_t bound = std::sqrt(real_t(6) / static_cast<real_t>(fan_in));
  weight_ = Parameter(name_ + ".weight", uniform_fill({cout, cin / groups, kernel, kernel}, bound, rng));
  if (bias) {
    const real_t bb = real_t(1) / std::sqrt(static_cast<real_t>(fan_in));
    bias_.emplace(name_ + ".bias", uniform_fill({cout}, bb, rng));
  }
}

Var Conv2d::forward(Var x) {
  Tape& t = *x.tape;
  std::optional<Var> b;
  if (bias_) b = t.parameter(*bias_);
  return ad::conv2d(x, t.parameter(weight_), b, {stride_, padding_, groups_});
}

Shape Conv2d::trace(const Shape& in, Trace& out) const {
  const auto& ws = weight_.value().shape();
  Primitive p;
  p.name = name_;
  p.kind = Primitive::Kind::Conv2d;
  p.input = in;
  p.output = conv_out(in, ws[0], ws[2], stride_);
  p.params = weight_.numel() + (bias_ ? bias_->numel() : 0);
  p.kernel = ws[2];
  p.groups = groups_;
  p.stride = stride_;
  p.bias = bias_.has_value();
  out.push_back(p);
  return p.output;
}

void Conv2d::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight_);
  if (bias_) out.push_back(&*bias_);
}

ChannelAffine::ChannelAffine(std::string name, std::size_t channels)
    : name_(std::move(name)),
      gamma_(name_ + ".gamma", Tensor::ones({channels})),
      beta_(name_ + ".beta", Tensor::zeros({channels})) {}

Var ChannelAffine::forward(Var x) {
  Tape& t = *x.tape;
  return ad::channel_affine(x, t.parameter(gamma_), t.parameter(beta_));
}

Shape ChannelAffine::trace(const Shape& in, Trace& out) const {
  add_primitive(out, name_, Primitive::Kind::ChannelAffine, in, in, gamma_.numel() + beta_.numel());
  return in;
}

void ChannelAffine::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

LayerNorm::LayerNorm(std::string name, std::size_t channels)
    : name_(std::move(name)),
      gamma_(name_ + ".gamma", Tensor::ones({channels})),
      beta_(name_ + ".beta", Tensor::zeros({channels})) {}

Var LayerNorm::forward(Var x) {
  Tape& t = *x.tape;
  return ad::channel_layer_norm(x, t.parameter(gamma_), t.parameter(beta_));
}

Shape LayerNorm::trace(const Shape& in, Trace& out) const {
  add_primitive(out, name_, Primitive::Kind::LayerNorm, in, in, gamma_.numel() + beta_.numel());
  return in;
}

void LayerNorm::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

SpectralMask::SpectralMask(std::string name, std::size_t channels, std::size_t h, std::size_t w,
                           Rng& rng, real_t noise_std)
    : name_(std::move(name)) {
  if (!is_power_of_two(h) || !is_power_of_two(w))
    throw UnsupportedSize(name_ + ": mask size " + std::to_string(h) + "x" + std::to_string(w) +
                          " is not a power of two");
  std::normal_distribution<double> noise(0.0, static_cast<double>(noise_std));
  Tensor re({channels, h, w}), im({channels, h, w});
  for (std::size_t i = 0; i < re.size(); ++i) re[i] = real_t(1) + static_cast<real_t>(noise(rng));
  for (std::size_t i = 0; i < im.size(); ++i) im[i] = static_cast<real_t>(noise(rng));
  re_ = Parameter(name_ + ".mask_re", std::move(re));
  im_ = Parameter(name_ + ".mask_im", std::move(im));
}

Var SpectralMask::forward(Var x) {
  Tape& t = *x.tape;
  return ad::global_filter(x, t.parameter(re_), t.parameter(im_));
}

Shape SpectralMask::trace(const Shape& in, Trace& out) const {
  if (in != shape())
    throw ShapeError(name_ + ": mask " + shape_string(shape()) + " vs input " + shape_string(in));
  add_primitive(out, name_, Primitive::Kind::GlobalFilter, in, in, re_.numel() + im_.numel());
  return in;
}

void SpectralMask::collect(std::vector<Parameter*>& out) {
  out.push_back(&re_);
  out.push_back(&im_);
}

InvertedResidualBlock::InvertedResidualBlock(std::string name, std::size_t cin, std::size_t cout,
                                             std::size_t stride, std::size_t expansion, Rng& rng)
    : name_(std::move(name)),
      residual_(stride == 1 && cin == cout),
      expand_(Conv2d::pointwise(name_ + ".expand", cin, cin * expansion, false, rng)),
      n1_(name_ + ".expand_norm", cin * expansion),
      depthwise_(Conv2d::depthwise(name_ + ".depthwise", cin * expansion, 3, stride, rng)),
      n2_(name_ + ".depthwise_norm", cin * expansion),
      project_(Conv2d::pointwise(name_ + ".project", cin * expansion, cout, false, rng)),
      n3_(name_ + ".project_norm", cout) {
  if (expansion < 1) throw InvalidArgument(name_ + ": expansion must be >= 1");
}

Var InvertedResidualBlock::forward(Var x) {
  Var h = ad::silu(n1_.forward(expand_.forward(x)));
  h = ad::silu(n2_.forward(depthwise_.forward(h)));
  h = n3_.forward(project_.forward(h));
  return residual_ ? ad::add(x, h) : h;
}

Shape InvertedResidualBlock::trace(const Shape& in, Trace& out) const {
  Shape s = expand_.trace(in, out);
  n1_.trace(s, out);
  add_primitive(out, name_ + ".expand_act", Primitive::Kind::Silu, s, s);
  s = depthwise_.trace(s, out);
  n2_.trace(s, out);
  add_primitive(out, name_ + ".depthwise_act", Primitive::Kind::Silu, s, s);
  s = project_.trace(s, out);
  n3_.trace(s, out);
  if (residual_) add_primitive(out, name_ + ".residual", Primitive::Kind::Add, s, s);
  return s;
}

void InvertedResidualBlock::collect(std::vector<Parameter*>& out) {
  expand_.collect(out);
  n1_.collect(out);
  depthwise_.collect(out);
  n2_.collect(out);
  project_.collect(out);
  n3_.collect(out);
}

FftEncoder::FftEncoder(std::string name, std::size_t dim, std::size_t h, std::size_t w,
                       std::size_t ffn_expansion, bool encoder_shortcut, Rng& rng)
    : name_(std::move(name)),
      shortcut_(encoder_shortcut),
      ln1_(name_ + ".filter_norm", dim),
      filter_(name_ + ".filter", dim, h, w, rng),
      ln2_(name_ + ".ffn_norm", dim),
      ffn_expand_(Conv2d::pointwise(name_ + ".ffn_expand", dim, dim * ffn_expansion, true, rng)),
      ffn_project_(Conv2d::pointwise(name_ + ".ffn_project", dim * ffn_expansion, dim, true, rng)) {}

Var FftEncoder::forward(Var x) {
  Var mixed = filter_.forward(ln1_.forward(x));
  Var u = shortcut_ ? ad::add(x, mixed) : mixed;
  Var f = ffn_project_.forward(ad::silu(ffn_expand_.forward(ln2_.forward(u))));
  return ad::add(u, f);
}

Shape FftEncoder::trace(const Shape& in, Trace& out) const {
  ln1_.trace(in, out);
  filter_.trace(in, out);
  if (shortcut_) add_primitive(out, name_ + ".filter_shortcut", Primitive::Kind::Add, in, in);
  ln2_.trace(in, out);
  const Shape hidden = ffn_expand_.trace(in, out);
  add_primitive(out, name_ + ".ffn_act", Primitive::Kind::Silu, hidden, hidden);
  ffn_project_.trace(hidden, out);
  add_primitive(out, name_ + ".ffn_shortcut", Primitive::Kind::Add, in, in);
  return in;
}

void FftEncoder::collect(std::vector<Parameter*>& out) {
  ln1_.collect(out);
  filter_.collect(out);
  ln2_.collect(out);
  ffn_expand_.collect(out);
  ffn_project_.collect(out);
}

FftResidualBlock::FftResidualBlock(std::string name, std::size_t channels, std::size_t dim,
                                   std::size_t depth, std::size_t h, std::size_t w,
                                   const ModelConfig& config, Rng& rng)
    : name_(std::move(name)), flags_(config.ablation) {
  if (flags_.disable_fft_residual_block) {
    replacement_.emplace(name_ + ".irb", channels, channels, 1, config.irb_expansion, rng);
    return;
  }
  local_.emplace(Conv2d::depthwise(name_ + ".local", channels, 3, 1, rng));
  local_norm_.emplace(name_ + ".local_norm", channels);
  to_dim_.emplace(Conv2d::pointwise(name_ + ".to_dim", channels, dim, false, rng));
  if (!flags_.disable_fft_encoder) {
    encoders_.reserve(depth);
    for (std::size_t i = 0; i < depth; ++i)
      encoders_.emplace_back(name_ + ".enc" + std::to_string(i), dim, h, w, config.ffn_expansion,
                             !flags_.disable_encoder_shortcut, rng);
  }
  fusion_in_ = flags_.disable_concat_shortcut ? dim : dim + channels;
  fuse_.emplace(Conv2d::pointwise(name_ + ".fuse", fusion_in_, channels, false, rng));
  fuse_norm_.emplace(name_ + ".fuse_norm", channels);
}

Var FftResidualBlock::forward(Var x) {
  if (replacement_) return replacement_->forward(x);
  Var h = ad::silu(local_norm_->forward(local_->forward(x)));
  h = to_dim_->forward(h);
  for (auto& enc : encoders_) h = enc.forward(h);
  Var fused = flags_.disable_concat_shortcut ? h : ad::concat_channels(h, x);
  return ad::silu(fuse_norm_->forward(fuse_->forward(fused)));
}

Shape FftResidualBlock::trace(const Shape& in, Trace& out) const {
  if (replacement_) return replacement_->trace(in, out);
  Shape s = local_->trace(in, out);
  local_norm_->trace(s, out);
  add_primitive(out, name_ + ".local_act", Primitive::Kind::Silu, s, s);
  s = to_dim_->trace(s, out);
  for (const auto& enc : encoders_) s = enc.trace(s, out);
  if (!flags_.disable_concat_shortcut) {
    const Shape cat{s[0] + in[0], s[1], s[2]};
    add_primitive(out, name_ + ".concat", Primitive::Kind::Concat, s, cat);
    s = cat;
  }
  s = fuse_->trace(s, out);
  fuse_norm_->trace(s, out);
  add_primitive(out, name_ + ".fuse_act", Primitive::Kind::Silu, s, s);
  return s;
}

void FftResidualBlock::collect(std::vector<Parameter*>& out) {
  if (replacement_) {
    replacement_->collect(out);
    return;
  }
  local_->collect(out);
  local_norm_->collect(out);
  to_dim_->collect(out);
  for (auto& enc : encoders_) enc.collect(out);
  fuse_->collect(out);
  fuse_norm_->collect(out);
}

// ---------------------------------------------------------------------------
// FrNet

struct FrNet::Body {
  ModelConfig config;
  Conv2d stem;
  ChannelAffine stem_norm;
  InvertedResidualBlock down1, down2;
  FftResidualBlock frb1;
  InvertedResidualBlock down3;
  FftResidualBlock frb2;
  InvertedResidualBlock down4;
  FftResidualBlock frb3;
  Conv2d head;
  ChannelAffine head_norm;
  Parameter fc_weight, fc_bias;

  static std::size_t at_stride(const ModelConfig& c, std::size_t s) { return c.input_size / s; }

  Body(ModelConfig cfg, Rng& rng)
      : config(cfg),
        stem("stem", 3, cfg.stage_channels[0], 3, 2, 1, false, rng),
        stem_norm("stem_norm", cfg.stage_channels[0]),
        down1("down1", cfg.stage_channels[0], cfg.stage_channels[1], 2, cfg.irb_expansion, rng),
        down2("down2", cfg.stage_channels[1], cfg.stage_channels[2], 2, cfg.irb_expansion, rng),
        frb1("frb1", cfg.stage_channels[2], cfg.encoder_dims[0], cfg.encoders_per_block[0],
             at_stride(cfg, 8), at_stride(cfg, 8), cfg, rng),
        down3("down3", cfg.stage_channels[2], cfg.stage_channels[3], 2, cfg.irb_expansion, rng),
        frb2("frb2", cfg.stage_channels[3], cfg.encoder_dims[1], cfg.encoders_per_block[1],
             at_stride(cfg, 16), at_stride(cfg, 16), cfg, rng),
        down4("down4", cfg.stage_channels[3], cfg.stage_channels[4], 2, cfg.irb_expansion, rng),
        frb3("frb3", cfg.stage_channels[4], cfg.encoder_dims[2], cfg.encoders_per_block[2],
             at_stride(cfg, 32), at_stride(cfg, 32), cfg, rng),
        head(Conv2d::pointwise("head", cfg.stage_channels[4], cfg.head_channels, false, rng)),
        head_norm("head_norm", cfg.head_channels) {
    const real_t bound = real_t(1) / std::sqrt(static_cast<real_t>(cfg.head_channels));
    fc_weight = Parameter("fc.weight", uniform_fill({cfg.output_dims, cfg.head_channels}, bound, rng));
    fc_bias = Parameter("fc.bias", uniform_fill({cfg.output_dims}, bound, rng));
  }
};

FrNet::FrNet(ModelConfig config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  body_ = std::make_unique<Body>(config, rng);
}

FrNet::~FrNet() = default;
FrNet::FrNet(FrNet&&) noexcept = default;
FrNet& FrNet::operator=(FrNet&&) noexcept = default;

const ModelConfig& FrNet::config() const { return body_->config; }

Var FrNet::forward(Tape& tape, const Tensor& image) {
  const std::size_t s = body_->config.input_size;
  if (image.shape() != Shape{3, s, s})
    throw ShapeError("FrNet input must be " + shape_string({3, s, s}) + ", got " +
                     shape_string(image.shape()));
  auto& b = *body_;
  Var x = tape.constant(image);
  x = ad::silu(b.stem_norm.forward(b.stem.forward(x)));
  x = b.down1.forward(x);
  x = b.down2.forward(x);
  x = b.frb1.forward(x);
  x = b.down3.forward(x);
  x = b.frb2.forward(x);
  x = b.down4.forward(x);
  x = b.frb3.forward(x);
  x = ad::silu(b.head_norm.forward(b.head.forward(x)));
  x = ad::global_avg_pool(x);
  return ad::linear(x, tape.parameter(b.fc_weight), tape.parameter(b.fc_bias));
}

Tensor FrNet::predict(const Tensor& image) {
  Tape tape;
  return forward(tape, image).value();
}

std::vector<Parameter*> FrNet::parameters() {
  auto& b = *body_;
  std::vector<Parameter*> out;
  b.stem.collect(out);
  b.stem_norm.collect(out);
  b.down1.collect(out);
  b.down2.collect(out);
  b.frb1.collect(out);
  b.down3.collect(out);
  b.frb2.collect(out);
  b.down4.collect(out);
  b.frb3.collect(out);
  b.head.collect(out);
  b.head_norm.collect(out);
  out.push_back(&b.fc_weight);
  out.push_back(&b.fc_bias);
  return out;
}

std::vector<const Parameter*> FrNet::parameters() const {
  auto params = const_cast<FrNet*>(this)->parameters();
  return {params.begin(), params.end()};
}

std::size_t FrNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters())
    if (p->trainable()) n += p->numel();
  return n;
}

Parameter* FrNet::find(std::string_view name) {
  for (auto* p : parameters())
    if (p->name() == name) return p;
  return nullptr;
}

Trace FrNet::trace() const {
  const auto& b = *body_;
  const std::size_t s = b.config.input_size;
  Trace out;
  Shape x{3, s, s};
  x = b.stem.trace(x, out);
  b.stem_norm.trace(x, out);
  add_primitive(out, "stem_act", Primitive::Kind::Silu, x, x);
  x = b.down1.trace(x, out);
  x = b.down2.trace(x, out);
  x = b.frb1.trace(x, out);
  x = b.down3.trace(x, out);
  x = b.frb2.trace(x, out);
  x = b.down4.trace(x, out);
  x = b.frb3.trace(x, out);
  x = b.head.trace(x, out);
  b.head_norm.trace(x, out);
  add_primitive(out, "head_act", Primitive::Kind::Silu, x, x);
  add_primitive(out, "pool", Primitive::Kind::GlobalAvgPool, x, {x[0]});
  Primitive fc;
  fc.name = "fc";
  fc.kind = Primitive::Kind::Linear;
  fc.input = {x[0]};
  fc.output = {b.config.output_dims};
  fc.params = b.fc_weight.numel() + b.fc_bias.numel();
  fc.bias = true;
  out.push_back(fc);
  return out;
}

}  // namespace frnet::nn
