#include <algorithm>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "frnet/profile.hpp"

using namespace frnet;
using nn::ModelConfig;
using nn::Primitive;

namespace {

Primitive conv(std::size_t cin, std::size_t cout, std::size_t k, std::size_t hw, bool bias) {
  Primitive p;
  p.name = "c";
  p.kind = Primitive::Kind::Conv2d;
  p.input = {cin, hw, hw};
  p.output = {cout, hw, hw};
  p.kernel = k;
  p.bias = bias;
  p.params = cout * cin * k * k + (bias ? cout : 0);
  return p;
}

std::size_t numel(const std::vector<ad::Parameter*>& ps) {
  std::size_t n = 0;
  for (const auto* p : ps) n += p->numel();
  return n;
}

}  // namespace

TEST(Count, SingleConvParameters) {
  nn::Rng rng(0);
  nn::Conv2d c("c", 3, 16, 3, 1, 1, true, rng);
  std::vector<ad::Parameter*> ps;
  c.collect(ps);
  EXPECT_EQ(numel(ps), 448u);
  nn::Trace t;
  c.trace({3, 8, 8}, t);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].params, 448u);
}

TEST(Count, HeadLinearParameters) {
  const auto report = profile::cost_report(nn::FrNet(ModelConfig::paper(), 0));
  const auto fc = std::find_if(report.rows.begin(), report.rows.end(), [](const auto& r) { return r.name == "fc"; });
  ASSERT_NE(fc, report.rows.end());
  EXPECT_EQ(fc->params, 642u);
  EXPECT_EQ(fc->flops, 2u * 320 * 2 + 2);
}

TEST(Count, PointwiseConvFlops) {
  EXPECT_EQ(profile::primitive_flops(conv(4, 8, 1, 16, false)), 16'384u);
  EXPECT_EQ(profile::primitive_flops(conv(4, 8, 1, 16, true)), 16'384u + 8 * 256);
  EXPECT_EQ(profile::primitive_flops(conv(3, 16, 3, 8, false)), 2u * 3 * 9 * 16 * 64);
}

TEST(Count, FftFlops) {
  EXPECT_EQ(profile::fft1d_flops(8), 120u);
  EXPECT_EQ(profile::fft1d_flops(1), 0u);
  EXPECT_EQ(profile::fft2d_flops(8, 16), 8 * profile::fft1d_flops(16) + 16 * profile::fft1d_flops(8));
  EXPECT_THROW(profile::fft1d_flops(12), UnsupportedSize);
}

TEST(Count, GlobalFilterFlops) {
  Primitive p;
  p.kind = Primitive::Kind::GlobalFilter;
  p.input = p.output = {4, 8, 8};
  // forward and inverse 2D FFT per channel plus the complex product
  EXPECT_EQ(profile::primitive_flops(p), 4 * 2 * profile::fft2d_flops(8, 8) + 6u * 4 * 64);
}

TEST(Count, RowsSumToTotals) {
  for (auto c : {ModelConfig::paper(), ModelConfig::desk()}) {
    const auto report = profile::cost_report(nn::FrNet(c, 0));
    std::size_t params = 0;
    std::uint64_t flops = 0;
    for (const auto& r : report.rows) {
      params += r.params;
      flops += r.flops;
    }
    EXPECT_EQ(params, report.total_params);
    EXPECT_EQ(flops, report.total_flops);
    EXPECT_EQ(report.total_params, profile::count_params(nn::FrNet(c, 0)));
  }
}

TEST(Count, DefaultModelWithinBudget) {
  nn::FrNet model(ModelConfig::paper(), 0);
  const auto report = profile::cost_report(model);
  EXPECT_TRUE(report.params_within_budget()) << report.total_params;
  EXPECT_TRUE(report.flops_within_budget()) << report.total_flops;
  EXPECT_EQ(report.total_params, model.parameter_count());
  EXPECT_EQ(profile::count_flops(model, {3, 256, 256}), report.total_flops);
  EXPECT_THROW(profile::count_flops(model, {3, 128, 128}), ShapeError);
  const auto table = report.to_table();
  EXPECT_NE(table.find("reference 0.67M"), std::string::npos);
  EXPECT_NE(table.find("reference 0.22B"), std::string::npos);
  EXPECT_NE(table.find(std::string(profile::flop_convention())), std::string::npos);
}

TEST(Count, ConvFlopsScaleFourfoldWithDoubledInput) {
  auto conv_flops = [](std::size_t size) {
    auto c = ModelConfig::paper();
    c.input_size = size;
    std::uint64_t f = 0;
    for (const auto& r : profile::cost_report(nn::FrNet(c, 0)).rows)
      if (r.kind == "conv2d") f += r.flops;
    return f;
  };
  EXPECT_EQ(conv_flops(256), 4 * conv_flops(128));
  EXPECT_EQ(conv_flops(128), 4 * conv_flops(64));
}

TEST(Count, EncoderShortcutAblationKeepsParams) {
  auto c = ModelConfig::paper();
  const auto base = profile::count_params(nn::FrNet(c, 0));
  c.ablate("disable_encoder_shortcut");
  EXPECT_EQ(profile::count_params(nn::FrNet(c, 0)), base);
}

TEST(Count, AblationDeltasMatchBreakdown) {
  const auto full = profile::cost_report(nn::FrNet(ModelConfig::paper(), 0));
  auto c = ModelConfig::paper();
  c.ablate("disable_fft_residual_block");
  const auto ablated = profile::cost_report(nn::FrNet(c, 0));
  std::size_t removed = 0, added = 0;
  for (const char* b : {"frb1.", "frb2.", "frb3."}) {
    removed += profile::params_under(full, b);
    added += profile::params_under(ablated, b);
  }
  EXPECT_EQ(full.total_params - ablated.total_params, removed - added);
  EXPECT_EQ(profile::params_under(ablated, "frb1.irb."), profile::params_under(ablated, "frb1."));
}

TEST(Report, MachineReadableForms) {
  const auto report = profile::cost_report(nn::FrNet(ModelConfig::desk(), 0));
  const auto j = nlohmann::json::parse(report.to_json());
  EXPECT_EQ(j["total_params"].get<std::size_t>(), report.total_params);
  EXPECT_EQ(j["total_flops"].get<std::uint64_t>(), report.total_flops);
  EXPECT_EQ(j["rows"].size(), report.rows.size());
  const auto csv = report.to_csv();
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), report.rows.size() + 2);  // header and total
}

TEST(Bench, ScalingRowsAndValidation) {
  const std::vector<std::size_t> sizes{8, 16};
  const auto rows = profile::bench_scaling(profile::ScalingOp::SpectralConv, sizes);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].size, 16u);
  EXPECT_EQ(rows[1].kernel, 16u);
  EXPECT_GT(rows[0].median_ms, 0);
  EXPECT_NE(profile::scaling_csv(rows).find("spectral"), std::string::npos);
  EXPECT_THROW(profile::bench_scaling(profile::ScalingOp::DirectConv, sizes, 0, 4), InvalidArgument);
  const std::vector<std::size_t> odd{12};
  EXPECT_THROW(profile::bench_scaling(profile::ScalingOp::SpectralConv, odd), UnsupportedSize);
}

TEST(Bench, InferenceLatencyGrowsWithInput) {
  auto latency = [](std::size_t size) {
    auto c = ModelConfig::paper();
    c.input_size = size;
    nn::FrNet model(c, 0);
    return profile::bench_inference(model, 10).median_ms;
  };
  EXPECT_LT(latency(128), latency(256));
}

TEST(Bench, InferenceReportContract) {
  nn::FrNet model(ModelConfig::desk(), 0);
  const auto r = profile::bench_inference(model, 10);
  EXPECT_EQ(r.input_size, 64u);
  EXPECT_EQ(r.repeats, 10u);
  EXPECT_LE(r.min_ms, r.median_ms);
  EXPECT_LE(r.median_ms, r.max_ms);
  EXPECT_FALSE(r.hardware.empty());
  EXPECT_THROW(profile::bench_inference(model, 9), InvalidArgument);
}

TEST(Bench, MedianStableAcrossInvocations) {
  nn::FrNet model(ModelConfig::desk(), 0);
  std::vector<double> m;
  for (int i = 0; i < 3; ++i) m.push_back(profile::bench_inference(model, 10).median_ms);
  std::sort(m.begin(), m.end());
  EXPECT_LE(m[2], 1.2 * m[1]) << m[0] << " " << m[1] << " " << m[2];
  EXPECT_GE(m[0], 0.8 * m[1]) << m[0] << " " << m[1] << " " << m[2];
}
