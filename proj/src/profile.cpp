#include "frnet/profile.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "frnet/fft.hpp"
#include "frnet/reference.hpp"

namespace frnet::profile {

namespace {

using Kind = nn::Primitive::Kind;

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::Conv2d: return "conv2d";
    case Kind::ChannelAffine: return "channel_affine";
    case Kind::LayerNorm: return "layer_norm";
    case Kind::Silu: return "silu";
    case Kind::GlobalFilter: return "global_filter";
    case Kind::Add: return "add";
    case Kind::Concat: return "concat";
    case Kind::GlobalAvgPool: return "global_avg_pool";
    case Kind::Linear: return "linear";
  }
  return "unknown";
}

std::string shape_cell(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out;
}

}  // namespace

std::string_view flop_convention() {
  return "conv: 2 per MAC, +1 per output element with bias; complex FFT of length n: 5 n log2 n, "
         "2D = rows + columns, forward and inverse per channel; complex Hadamard: 6 per element; "
         "channel affine: 2, layer norm: 4, SiLU: 4, add: 1, global average pool: 1 per element; "
         "concat: 0; linear: 2 in out + out";
}

std::uint64_t fft1d_flops(std::size_t n) {
  if (!is_power_of_two(n)) throw UnsupportedSize("fft1d_flops: length " + std::to_string(n) + " is not a power of two");
  const auto log2n = static_cast<std::uint64_t>(std::countr_zero(n));
  return 5ull * n * log2n;
}

std::uint64_t fft2d_flops(std::size_t h, std::size_t w) {
  return static_cast<std::uint64_t>(h) * fft1d_flops(w) + static_cast<std::uint64_t>(w) * fft1d_flops(h);
}

std::uint64_t primitive_flops(const nn::Primitive& p) {
  const std::uint64_t in_elems = shape_numel(p.input);
  const std::uint64_t out_elems = shape_numel(p.output);
  switch (p.kind) {
    case Kind::Conv2d: {
      const std::uint64_t cin_per_group = p.input[0] / p.groups;
      const std::uint64_t macs = out_elems * cin_per_group * p.kernel * p.kernel;
      return 2 * macs + (p.bias ? out_elems : 0);
    }
    case Kind::ChannelAffine: return 2 * out_elems;
    case Kind::LayerNorm: return 4 * out_elems;
    case Kind::Silu: return 4 * out_elems;
    case Kind::Add: return out_elems;
    case Kind::Concat: return 0;
    case Kind::GlobalAvgPool: return in_elems;
    case Kind::GlobalFilter: {
      const std::uint64_t c = p.input[0];
      return c * 2 * fft2d_flops(p.input[1], p.input[2]) + 6 * in_elems;
    }
    case Kind::Linear: return 2 * in_elems * out_elems + (p.bias ? out_elems : 0);
  }
  throw InternalError("primitive_flops: unknown primitive kind");
}

std::size_t count_params(const nn::FrNet& model) {
  std::size_t n = 0;
  for (const auto* p : model.parameters())
    if (p->trainable()) n += p->numel();
  return n;
}

std::uint64_t count_flops(const nn::FrNet& model, const Shape& input_shape) {
  const std::size_t s = model.config().input_size;
  if (input_shape != Shape{3, s, s})
    throw ShapeError("count_flops: model is built for " + shape_string({3, s, s}) + ", got " +
                     shape_string(input_shape));
  std::uint64_t total = 0;
  for (const auto& p : model.trace()) total += primitive_flops(p);
  return total;
}

CostReport cost_report(const nn::FrNet& model) {
  CostReport r;
  const std::size_t s = model.config().input_size;
  r.input_shape = {3, s, s};
  r.convention = std::string(flop_convention());
  for (const auto& p : model.trace()) {
    CostRow row{p.name, std::string(kind_name(p.kind)), p.params, primitive_flops(p), p.output};
    r.total_params += row.params;
    r.total_flops += row.flops;
    r.rows.push_back(std::move(row));
  }
  return r;
}

std::size_t params_under(const CostReport& report, std::string_view prefix) {
  std::size_t n = 0;
  for (const auto& row : report.rows)
    if (std::string_view(row.name).substr(0, prefix.size()) == prefix) n += row.params;
  return n;
}

std::string CostReport::to_table() const {
  std::size_t name_w = 4;
  for (const auto& r : rows) name_w = std::max(name_w, r.name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(name_w)) << "name" << "  " << std::setw(15) << "kind"
     << std::right << std::setw(10) << "params" << std::setw(14) << "flops" << "  output\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(name_w)) << r.name << "  " << std::setw(15) << r.kind
       << std::right << std::setw(10) << r.params << std::setw(14) << r.flops << "  "
       << shape_cell(r.output_shape) << "\n";
  }
  char buf[256];
  std::snprintf(buf, sizeof buf, "input %s\ntotal params %zu (%.3fM; reference 0.67M)\n"
                "total FLOPs %llu (%.3fB; reference 0.22B)\n",
                shape_cell(input_shape).c_str(), total_params, static_cast<double>(total_params) / 1e6,
                static_cast<unsigned long long>(total_flops), static_cast<double>(total_flops) / 1e9);
  os << buf << "convention: " << convention << "\n";
  return os.str();
}

std::string CostReport::to_csv() const {
  std::ostringstream os;
  os << "name,kind,params,flops,output_shape\n";
  for (const auto& r : rows)
    os << r.name << ',' << r.kind << ',' << r.params << ',' << r.flops << ',' << shape_cell(r.output_shape) << "\n";
  os << "total,,"
     << total_params << ',' << total_flops << ",\n";
  return os.str();
}

std::string CostReport::to_json() const {
  nlohmann::json j;
  j["input_shape"] = input_shape;
  j["total_params"] = total_params;
  j["total_flops"] = total_flops;
  j["reference_params"] = kReferenceParams;
  j["reference_flops"] = kReferenceFlops;
  j["params_within_budget"] = params_within_budget();
  j["flops_within_budget"] = flops_within_budget();
  j["convention"] = convention;
  auto& arr = j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"name", r.name}, {"kind", r.kind}, {"params", r.params}, {"flops", r.flops},
                   {"output_shape", r.output_shape}});
  return j.dump(2);
}

std::string_view scaling_op_name(ScalingOp op) {
  return op == ScalingOp::SpectralConv ? "spectral_conv" : "direct_conv";
}

double median_ms(const std::function<void()>& fn, std::size_t repeats, double min_sample_ms) {
  using clock = std::chrono::steady_clock;
  fn();  // warm caches and plans
  std::size_t inner = 1;
  for (;;) {
    const auto t0 = clock::now();
    for (std::size_t i = 0; i < inner; ++i) fn();
    const double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    if (ms >= min_sample_ms || inner >= (1u << 20)) break;
    inner *= 2;
  }
  std::vector<double> samples;
  samples.reserve(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = clock::now();
    for (std::size_t i = 0; i < inner; ++i) fn();
    samples.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count() /
                      static_cast<double>(inner));
  }
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  return n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

std::vector<ScalingRow> bench_scaling(ScalingOp op, std::span<const std::size_t> sizes,
                                      std::size_t kernel, std::size_t repeats, std::uint64_t seed) {
  if (repeats < 5) throw InvalidArgument("bench_scaling: repeats must be >= 5");
  std::vector<ScalingRow> rows;
  for (const auto n : sizes) {
    if (!is_power_of_two(n))
      throw UnsupportedSize("bench_scaling: size " + std::to_string(n) + " is not a power of two");
    const std::size_t k = kernel == 0 ? n : kernel;
    if (k > n) throw InvalidArgument("bench_scaling: kernel larger than input");
    const Tensor x = reference::random_tensor({n, n}, seed + n);
    const Tensor w = reference::random_tensor({k, k}, seed + n + 1);
    volatile real_t sink = 0;
    std::function<void()> fn;
    if (op == ScalingOp::SpectralConv)
      fn = [&] { sink = spectral_conv2d(x, w)[0]; };
    else
      fn = [&] { sink = reference::direct_circular_conv2d(x, w)[0]; };
    rows.push_back({op, n, k, repeats, median_ms(fn, repeats)});
    (void)sink;
  }
  return rows;
}

std::string scaling_csv(std::span<const ScalingRow> rows) {
  std::ostringstream os;
  os << "op,size,kernel,repeats,median_ms\n";
  for (const auto& r : rows) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", r.median_ms);
    os << scaling_op_name(r.op) << ',' << r.size << ',' << r.kernel << ',' << r.repeats << ',' << buf << "\n";
  }
  return os.str();
}

std::string hardware_descriptor() {
  std::string model = "unknown cpu";
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(line.find_first_not_of(" \t", colon + 1));
      break;
    }
  }
  return model + ", " + std::to_string(std::max(1u, std::thread::hardware_concurrency())) + " logical cores";
}

InferenceReport bench_inference(nn::FrNet& model, std::size_t repeats, std::size_t warmup,
                                std::uint64_t seed) {
  if (repeats < 10) throw InvalidArgument("bench_inference: repeats must be >= 10");
  const std::size_t s = model.config().input_size;
  const Tensor image = reference::random_tensor({3, s, s}, seed, 0.0, 1.0);
  for (std::size_t i = 0; i < warmup; ++i) model.predict(image);
  std::vector<double> samples;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    model.predict(image);
    samples.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  InferenceReport rep;
  rep.input_size = s;
  rep.repeats = repeats;
  rep.median_ms = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  rep.min_ms = samples.front();
  rep.max_ms = samples.back();
  rep.hardware = hardware_descriptor();
  return rep;
}

}  // namespace frnet::profile
