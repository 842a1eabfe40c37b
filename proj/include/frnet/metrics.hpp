#pragma once

#include <array>
#include <span>

namespace frnet::metrics {

/// Gaze direction as angles in radians. pitch in [-pi/2, pi/2], yaw in (-pi, pi].
struct GazeAngles {
  double pitch = 0;
  double yaw = 0;
};

struct GazeVector {
  std::array<double, 3> g{0, 0, -1};

  double norm() const;
  GazeVector normalized() const;
};

/// Camera looks along +z; gaze toward the camera is -z:
/// g = (-cos(pitch) sin(yaw), -sin(pitch), -cos(pitch) cos(yaw)).
GazeVector angles_to_vector(const GazeAngles& a);

/// Angle between two directions in degrees, in [0, 180].
double angular_error(const GazeVector& g, const GazeVector& g_hat);

double mean_angular_error(std::span<const GazeAngles> predicted, std::span<const GazeAngles> truth);

double degrees(double radians);

/// Clamps pitch and wraps yaw into the GazeAngles ranges; used on raw model outputs.
GazeAngles to_valid_range(GazeAngles a);

}  // namespace frnet::metrics
