#include "frnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "frnet/error.hpp"

namespace frnet::metrics {

double degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

GazeAngles to_valid_range(GazeAngles a) {
  constexpr double pi = std::numbers::pi;
  if (!std::isfinite(a.pitch) || !std::isfinite(a.yaw))
    throw InvalidArgument("non-finite gaze angles");
  a.pitch = std::clamp(a.pitch, -pi / 2, pi / 2);
  a.yaw = std::remainder(a.yaw, 2 * pi);
  if (a.yaw <= -pi) a.yaw += 2 * pi;
  return a;
}

double GazeVector::norm() const { return std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]); }

GazeVector GazeVector::normalized() const {
  const double n = norm();
  if (!(n > 0)) throw InvalidArgument("cannot normalize a zero-length gaze vector");
  return GazeVector{{g[0] / n, g[1] / n, g[2] / n}};
}

GazeVector angles_to_vector(const GazeAngles& a) {
  constexpr double pi = std::numbers::pi;
  if (!(a.pitch >= -pi / 2 && a.pitch <= pi / 2))
    throw InvalidArgument("pitch " + std::to_string(a.pitch) + " outside [-pi/2, pi/2]");
  if (!(a.yaw > -pi && a.yaw <= pi))
    throw InvalidArgument("yaw " + std::to_string(a.yaw) + " outside (-pi, pi]");
  const double cp = std::cos(a.pitch);
  return GazeVector{{-cp * std::sin(a.yaw), -std::sin(a.pitch), -cp * std::cos(a.yaw)}};
}

double angular_error(const GazeVector& g, const GazeVector& g_hat) {
  if (!(g.norm() > 0) || !(g_hat.norm() > 0)) throw InvalidArgument("angular_error: zero-length gaze vector");
  const auto& a = g.g;
  const auto& b = g_hat.g;
  // atan2(|a x b|, a.b) is the arccos of the clamped cosine, without its loss of
  // precision near 0 and 180 degrees. Swapping the arguments only negates the cross
  // product, so the result is symmetric bitwise.
  const double cx = a[1] * b[2] - a[2] * b[1];
  const double cy = a[2] * b[0] - a[0] * b[2];
  const double cz = a[0] * b[1] - a[1] * b[0];
  const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return degrees(std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot));
}

double mean_angular_error(std::span<const GazeAngles> predicted, std::span<const GazeAngles> truth) {
  if (predicted.size() != truth.size())
    throw InvalidArgument("mean_angular_error: " + std::to_string(predicted.size()) +
                          " predictions vs " + std::to_string(truth.size()) + " labels");
  if (predicted.empty()) throw InvalidArgument("mean_angular_error: empty input");
  double total = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    total += angular_error(angles_to_vector(predicted[i]), angles_to_vector(truth[i]));
  return total / static_cast<double>(predicted.size());
}

}  // namespace frnet::metrics
