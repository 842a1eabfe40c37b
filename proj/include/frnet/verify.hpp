#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "frnet/reference.hpp"

// Oracle suites behind `frnet verify`.
namespace frnet::verify {

struct Options {
  std::uint64_t seed = 0;
  std::size_t conv_cases = 200;
  std::size_t mask_cases = 50;
  std::size_t grad_coords = 10;
};

struct SuiteResult {
  std::string suite;
  std::size_t cases = 0;
  double max_error = 0;  // worst deviation seen, in the suite's own measure
  double seconds = 0;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty() && cases > 0; }
};

inline constexpr std::string_view kSuites[] = {"fft", "conv", "mask", "grad", "metrics"};

/// fft1d against the O(n^2) sum for every power of two up to 256, fft2d against the
/// double sum, plus round trip and Parseval for every pair of sizes up to 256.
SuiteResult fft_suite(const Options& opts);
/// spectral_conv2d against direct circular convolution on random sizes 8..64.
SuiteResult conv_suite(const Options& opts);
/// apply_mask with the transformed padded kernel against spectral_conv2d.
SuiteResult mask_suite(const Options& opts);
/// Finite-difference checks of every differentiable op and layer composite.
SuiteResult grad_suite(const Options& opts);
SuiteResult metrics_suite(const Options& opts);

/// Individual gradient checks run by grad_suite.
std::vector<reference::GradCheckResult> gradient_checks(const Options& opts);

/// Throws InvalidArgument for an unknown name.
SuiteResult run_suite(std::string_view name, const Options& opts);

}  // namespace frnet::verify
