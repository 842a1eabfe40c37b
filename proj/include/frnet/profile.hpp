#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "frnet/nn.hpp"

namespace frnet::profile {

/// Reference figures for the full-size model at 3x256x256 and the bands
/// `count --assert-budget` enforces.
inline constexpr double kReferenceParams = 670'000;
inline constexpr double kReferenceFlops = 0.22e9;
inline constexpr std::size_t kParamsLow = 603'000, kParamsHigh = 737'000;
inline constexpr std::uint64_t kFlopsLow = 180'000'000, kFlopsHigh = 300'000'000;

/// Counting table, printed with every report.
std::string_view flop_convention();

/// 5 n log2 n for one complex transform of power-of-two length n.
std::uint64_t fft1d_flops(std::size_t n);
/// h transforms of length w plus w transforms of length h.
std::uint64_t fft2d_flops(std::size_t h, std::size_t w);
std::uint64_t primitive_flops(const nn::Primitive& p);

struct CostRow {
  std::string name;
  std::string kind;
  std::size_t params = 0;
  std::uint64_t flops = 0;
  Shape output_shape;
};

struct CostReport {
  Shape input_shape;
  std::vector<CostRow> rows;
  std::size_t total_params = 0;
  std::uint64_t total_flops = 0;
  std::string convention;

  bool params_within_budget() const { return total_params >= kParamsLow && total_params <= kParamsHigh; }
  bool flops_within_budget() const { return total_flops >= kFlopsLow && total_flops <= kFlopsHigh; }

  std::string to_table() const;
  std::string to_csv() const;
  std::string to_json() const;
};

/// Sum of numel over trainable parameters; mask re and im count separately.
std::size_t count_params(const nn::FrNet& model);
/// Single forward at `input_shape`, which must equal the model's [3, S, S].
std::uint64_t count_flops(const nn::FrNet& model, const Shape& input_shape);
CostReport cost_report(const nn::FrNet& model);

/// Rows of `report` whose name starts with `prefix`.
std::size_t params_under(const CostReport& report, std::string_view prefix);

enum class ScalingOp { SpectralConv, DirectConv };

std::string_view scaling_op_name(ScalingOp op);

struct ScalingRow {
  ScalingOp op;
  std::size_t size = 0;
  std::size_t kernel = 0;
  std::size_t repeats = 0;
  double median_ms = 0;
};

/// Median wall time of single-channel circular filtering at each N x N size.
/// kernel == 0 selects the full policy (kernel N x N); otherwise a fixed k x k.
std::vector<ScalingRow> bench_scaling(ScalingOp op, std::span<const std::size_t> sizes,
                                      std::size_t kernel = 0, std::size_t repeats = 5,
                                      std::uint64_t seed = 0);
std::string scaling_csv(std::span<const ScalingRow> rows);

struct InferenceReport {
  std::size_t input_size = 0;
  std::size_t repeats = 0;
  double median_ms = 0;
  double min_ms = 0;
  double max_ms = 0;
  std::string hardware;
};

/// Single-image forward latency after `warmup` untimed runs.
InferenceReport bench_inference(nn::FrNet& model, std::size_t repeats = 10, std::size_t warmup = 2,
                                std::uint64_t seed = 0);

/// CPU model name and logical core count.
std::string hardware_descriptor();

/// Median of per-call time in ms; each sample loops the callable until it spans
/// at least `min_sample_ms`.
double median_ms(const std::function<void()>& fn, std::size_t repeats, double min_sample_ms = 2.0);

}  // namespace frnet::profile
