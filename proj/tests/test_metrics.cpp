#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "frnet/error.hpp"
#include "frnet/metrics.hpp"

using namespace frnet;
using namespace frnet::metrics;

constexpr double pi = std::numbers::pi;

TEST(GazeVector, ForwardGazeLooksAtCamera) {
  const auto v = angles_to_vector({0, 0});
  EXPECT_DOUBLE_EQ(v.g[0], 0);
  EXPECT_DOUBLE_EQ(v.g[1], 0);
  EXPECT_DOUBLE_EQ(v.g[2], -1);
}

TEST(GazeVector, PitchUpPointsAlongNegativeY) {
  const auto v = angles_to_vector({pi / 2, 0});
  EXPECT_NEAR(v.g[0], 0, 1e-15);
  EXPECT_NEAR(v.g[1], -1, 1e-15);
  EXPECT_NEAR(v.g[2], 0, 1e-15);
}

TEST(GazeVector, UnitNorm) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> p(-pi / 2, pi / 2), y(-pi + 1e-9, pi);
  for (int i = 0; i < 500; ++i) EXPECT_NEAR(angles_to_vector({p(rng), y(rng)}).norm(), 1, 1e-14);
}

TEST(GazeVector, RejectsOutOfRange) {
  EXPECT_THROW(angles_to_vector({2.0, 0}), InvalidArgument);
  EXPECT_THROW(angles_to_vector({0, -pi}), InvalidArgument);
  EXPECT_THROW(angles_to_vector({0, 4.0}), InvalidArgument);
  EXPECT_THROW(angles_to_vector({std::nan(""), 0}), InvalidArgument);
  EXPECT_NO_THROW(angles_to_vector({0, pi}));
}

TEST(AngularError, KnownValues) {
  EXPECT_NEAR(angular_error(angles_to_vector({0, 0}), angles_to_vector({0, pi / 2})), 90, 1e-12);
  EXPECT_NEAR(angular_error(angles_to_vector({0, 0}), angles_to_vector({0, 0.1})), 5.7296, 1e-4);
  EXPECT_EQ(angular_error(angles_to_vector({0.2, -0.3}), angles_to_vector({0.2, -0.3})), 0);
  EXPECT_NEAR(angular_error(GazeVector{{0, 0, -1}}, GazeVector{{0, 0, 1}}), 180, 1e-12);
}

TEST(AngularError, ExactAtParallelAndAntiparallel) {
  // same direction at different magnitudes: a naive cosine rounds near 1
  const GazeVector a{{0.1, 0.2, -0.3}}, b{{0.3, 0.6, -0.9}};
  const double e = angular_error(a, b);
  EXPECT_FALSE(std::isnan(e));
  EXPECT_LT(e, 1e-10);
  EXPECT_EQ(angular_error(a, a), 0);
  EXPECT_EQ(angular_error(a, GazeVector{{-0.1, -0.2, 0.3}}), 180);
  const GazeVector c{{-0.3, -0.6, 0.9}};
  EXPECT_NEAR(angular_error(a, c), 180, 1e-10);
}

TEST(AngularError, MatchesArccosAwayFromTheEnds) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  for (int i = 0; i < 200; ++i) {
    const GazeVector a{{n(rng), n(rng), n(rng)}}, b{{n(rng), n(rng), n(rng)}};
    const double c = (a.g[0] * b.g[0] + a.g[1] * b.g[1] + a.g[2] * b.g[2]) / (a.norm() * b.norm());
    if (std::abs(c) > 0.99) continue;
    EXPECT_NEAR(angular_error(a, b), std::acos(std::clamp(c, -1.0, 1.0)) * 180 / pi, 1e-9);
  }
}

TEST(AngularError, SymmetricAndScaleInvariant) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> s(0.01, 100);
  for (int i = 0; i < 200; ++i) {
    const GazeVector a{{n(rng), n(rng), n(rng)}}, b{{n(rng), n(rng), n(rng)}};
    EXPECT_EQ(angular_error(a, b), angular_error(b, a));
    const double k = s(rng);
    const GazeVector ak{{a.g[0] * k, a.g[1] * k, a.g[2] * k}};
    EXPECT_NEAR(angular_error(ak, b), angular_error(a, b), 1e-6);
    const double e = angular_error(a, b);
    EXPECT_GE(e, 0);
    EXPECT_LE(e, 180);
  }
}

TEST(AngularError, ZeroVectorRejected) {
  EXPECT_THROW((angular_error(GazeVector{{0, 0, 0}}, GazeVector{})), InvalidArgument);
  EXPECT_THROW((GazeVector{{0, 0, 0}}.normalized()), InvalidArgument);
}

TEST(MeanAngularError, AveragesPairs) {
  const std::vector<GazeAngles> truth{{0, 0}, {0, 0}};
  const std::vector<GazeAngles> pred{{0, 10 * pi / 180}, {0, 20 * pi / 180}};
  EXPECT_NEAR(mean_angular_error(pred, truth), 15, 1e-12);
  EXPECT_THROW((mean_angular_error(pred, std::vector<GazeAngles>{{0, 0}})), InvalidArgument);
  EXPECT_THROW(mean_angular_error(std::vector<GazeAngles>{}, std::vector<GazeAngles>{}), InvalidArgument);
}

TEST(ValidRange, ClampsPitchWrapsYaw) {
  const auto a = to_valid_range({2.0, 3 * pi / 2});
  EXPECT_DOUBLE_EQ(a.pitch, pi / 2);
  EXPECT_NEAR(a.yaw, -pi / 2, 1e-12);
  EXPECT_NEAR(to_valid_range({0, -pi}).yaw, pi, 1e-12);
  EXPECT_THROW(to_valid_range({INFINITY, 0}), InvalidArgument);
}
