#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "crllb/quadrature.hpp"
#include "oracles.hpp"

using namespace crllb;
using std::numbers::pi;

namespace {

QuadratureSpec spec_dim(std::size_t n, int angular = 256) {
  QuadratureSpec s;
  s.dim = n;
  s.angular_nodes = angular;
  return s;
}

double one(const SphericalPoint&) { return 1.0; }

}  // namespace

TEST(QuadratureSpec, Validation) {
  QuadratureSpec s;
  EXPECT_NO_THROW(s.validate());
  s.radial_nodes = 7;
  EXPECT_THROW(s.validate(), ConfigError);
  s = QuadratureSpec{};
  s.rel_tol = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.rel_tol = 0.05;
  EXPECT_THROW(s.validate(), ConfigError);
  s = QuadratureSpec{};
  s.dim = 0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(GaussLegendre, WeightsAndPolynomialExactness) {
  for (int n : {8, 17, 64, 256}) {
    const auto& gl = gauss_legendre(n);
    double w = 0.0;
    double m = 0.0;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      w += gl.weights[k];
      m += gl.weights[k] * std::pow(gl.nodes[k], 2 * n - 2);
      EXPECT_GT(gl.nodes[k], -1.0);
      EXPECT_LT(gl.nodes[k], 1.0);
    }
    EXPECT_NEAR(w, 2.0, 1e-13);
    EXPECT_NEAR(m, 2.0 / (2 * n - 1), 1e-13);
  }
}

TEST(SphericalPoint, DirectionIsUnitAndCartesianScales) {
  const Vector angles{0.3, 1.1, 4.0};
  const Vector d = unit_direction(angles);
  EXPECT_NEAR(norm(d), 1.0, 1e-15);
  SphericalPoint p{2.5, angles, d};
  EXPECT_NEAR(norm(p.cartesian()), 2.5, 1e-14);
  const Vector d2 = unit_direction(Vector{0.7});
  EXPECT_NEAR(d2[0], std::cos(0.7), 1e-15);
  EXPECT_NEAR(d2[1], std::sin(0.7), 1e-15);
}

TEST(IntegrateBall, UnitDiskArea) {
  EXPECT_NEAR(integrate_ball(one, 1.0, spec_dim(2)), pi, 1e-12);
}

TEST(IntegrateBall, BallVolumes) {
  const double a = 1.7;
  EXPECT_NEAR(integrate_ball(one, a, spec_dim(3, 64)), 4.0 / 3.0 * pi * a * a * a, 1e-11);
  EXPECT_NEAR(integrate_ball(one, a, spec_dim(1)), 2.0 * a, 1e-13);
  for (int n = 1; n <= 4; ++n) {
    const double ref = oracle::ball_volume(n, a);
    const double got = integrate_ball(one, a, spec_dim(n, n >= 3 ? 32 : 256));
    EXPECT_NEAR(got / ref, 1.0, 1e-9) << "n=" << n;
    EXPECT_NEAR(ball_volume(n, a) / ref, 1.0, 1e-13) << "n=" << n;
  }
}

TEST(IntegrateBall, GaussianOnDisk) {
  const double got = integrate_ball([](const SphericalPoint& p) { return std::exp(-p.r * p.r / 2); },
                                    pi, spec_dim(2));
  EXPECT_NEAR(got, 2.0 * pi * (1.0 - std::exp(-pi * pi / 2.0)), 1e-12);
}

TEST(IntegrateBall, IntegrableOriginSingularity) {
  // 1/r on the unit disk integrates to 2 pi
  const double got = integrate_ball([](const SphericalPoint& p) { return 1.0 / p.r; }, 1.0,
                                    spec_dim(2));
  EXPECT_NEAR(got, 2.0 * pi, 1e-12);
}

TEST(IntegrateBall, NonFiniteIntegrandThrows) {
  EXPECT_THROW(integrate_ball([](const SphericalPoint&) { return std::nan(""); }, 1.0,
                              spec_dim(2)),
               NonFinite);
}

TEST(IntegrateBall, VectorValuedFirstMomentVanishes) {
  const Vector m = integrate_ball([](const SphericalPoint& p) { return p.cartesian(); }, 2.0,
                                  spec_dim(3, 32));
  EXPECT_NEAR(norm(m), 0.0, 1e-12);
}

TEST(IntegrateBall, SelfConvergence) {
  auto f = [](const SphericalPoint& p) {
    const Vector z = p.cartesian();
    return std::exp(-0.3 * dot(z, z)) * (1.0 + 0.2 * z[0]);
  };
  const auto est = integrate_ball_checked(f, 2.0, spec_dim(2, 64));
  EXPECT_TRUE(est.converged);
  EXPECT_LT(est.error, 1e-9 * std::abs(est.value));
}

TEST(IntegrateBoundary, CircumferenceAndSphereArea) {
  const double a = 1.3;
  EXPECT_NEAR(integrate_boundary(one, a, spec_dim(2)), 2.0 * pi * a, 1e-12);
  EXPECT_NEAR(integrate_boundary(one, a, spec_dim(3, 64)), 4.0 * pi * a * a, 1e-12);
  EXPECT_NEAR(integrate_boundary(one, a, spec_dim(1)), 2.0, 0.0);
}

TEST(IntegrateBoundary, CosineSquaredOnCircleOfRadiusPi) {
  const double got = integrate_boundary(
      [](const SphericalPoint& p) { return std::cos(p.angles[0]) * std::cos(p.angles[0]); }, pi,
      spec_dim(2));
  EXPECT_NEAR(got, pi * pi, 1e-12);
}

TEST(SinPowerIntegral, ValuesAndRecursion) {
  EXPECT_DOUBLE_EQ(sin_power_integral(0), pi);
  EXPECT_DOUBLE_EQ(sin_power_integral(1), 2.0);
  EXPECT_NEAR(sin_power_integral(2), pi / 2.0, 1e-15);
  EXPECT_NEAR(sin_power_integral(3), 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(sin_power_integral(4), 3.0 * pi / 8.0, 1e-15);
  for (int n = 2; n <= 12; ++n) {
    EXPECT_DOUBLE_EQ(sin_power_integral(n), sin_power_integral(n - 2) * (n - 1.0) / n) << n;
    const double direct = oracle::simpson([n](double t) { return std::pow(std::sin(t), n); }, 0.0, pi);
    EXPECT_NEAR(sin_power_integral(n), direct, 1e-10) << n;
  }
  EXPECT_THROW(sin_power_integral(-1), ConfigError);
}

TEST(GaussianRadialMoment, ClosedFormValues) {
  const double inf = std::numeric_limits<double>::infinity();
  // moment n is the integral of r^{n+1} e^{-r^2/2}
  EXPECT_NEAR(gaussian_radial_moment(0, 1.0, 1.0), 1.0 - std::exp(-0.5), 1e-14);
  EXPECT_NEAR(gaussian_radial_moment(1, inf, 1.0), std::sqrt(pi / 2.0), 1e-12);
  EXPECT_NEAR(gaussian_radial_moment(2, inf, 1.0), 2.0, 1e-12);
  EXPECT_NEAR(gaussian_radial_moment(2, 1.0, 1.0), 2.0 - 3.0 * std::exp(-0.5), 1e-14);
}

TEST(GaussianRadialMoment, RecursionAndDirectQuadrature) {
  for (double a : {0.3, 1.0, 2.5, 6.0}) {
    for (int n = 0; n <= 7; ++n) {
      const double direct = oracle::simpson(
          [n](double r) { return std::exp(-r * r / 2.0) * std::pow(r, n + 1); }, 0.0, a);
      EXPECT_NEAR(gaussian_radial_moment(n, a, 1.0), direct, 1e-10 * std::max(1.0, direct));
      if (n >= 2) {
        const double rec = -std::pow(a, n) * std::exp(-a * a / 2.0) +
                           n * gaussian_radial_moment(n - 2, a, 1.0);
        EXPECT_NEAR(gaussian_radial_moment(n, a, 1.0), rec, 1e-12);
      }
    }
  }
}

TEST(GaussianRadialMoment, SigmaScaling) {
  for (double s : {0.5, 2.0}) {
    for (int n = 0; n <= 4; ++n) {
      const double scaled = std::pow(s, n + 2) * gaussian_radial_moment(n, 1.5 / s, 1.0);
      EXPECT_NEAR(gaussian_radial_moment(n, 1.5, s), scaled, 1e-12 * std::max(1.0, scaled));
    }
  }
}

TEST(IntegrateInterval, SinSquaredOverPeriod) {
  const double got =
      integrate_interval([](double t) { return std::sin(t) * std::sin(t); }, 0.0, 2.0 * pi, 64);
  EXPECT_NEAR(got, pi, 1e-12);
}

TEST(UnitSphereArea, KnownValues) {
  EXPECT_DOUBLE_EQ(unit_sphere_area(1), 2.0);
  EXPECT_NEAR(unit_sphere_area(2), 2.0 * pi, 1e-15);
  EXPECT_NEAR(unit_sphere_area(3), 4.0 * pi, 1e-14);
  EXPECT_NEAR(unit_sphere_area(4), 2.0 * pi * pi, 1e-13);
}

TEST(AdaptiveIntegrate, InfiniteUpperLimit) {
  const double got = adaptive_integrate([](double t) { return std::exp(-t); }, 0.0,
                                        std::numeric_limits<double>::infinity(), 1e-14);
  EXPECT_NEAR(got, 1.0, 1e-13);
}
