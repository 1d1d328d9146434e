#pragma once

// Self-tests of the integration layer: closed-form integral identities and
// the Leibniz boundary term evaluated through explicit contour and surface
// parameterizations in 2-D and 3-D.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "crllb/bounds.hpp"
#include "crllb/linalg.hpp"
#include "crllb/models.hpp"
#include "crllb/quadrature.hpp"

namespace crllb {

struct IdentityCheck {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double residual = 0.0;  // |value - reference| / max(1, |reference|)
  double tolerance = 0.0;
  bool pass = false;
};

inline IdentityCheck make_check(std::string name, double value, double reference,
                                double tolerance) {
  const double res = std::abs(value - reference) / std::max(1.0, std::abs(reference));
  return {std::move(name), value, reference, res, tolerance, res <= tolerance};
}

/// D_L of a 2-D model from the contour form
///   int F (v1 dz2 - v2 dz1)
/// with z(t) = c + a (cos t, sin t) and v the rows of grad_x z^T.
template <LikelihoodModel M>
Matrix planar_leibniz(const M& model, const Vector& x, int nodes = 512) {
  if (model.dim_z() != 2) throw DimMismatch("planar_leibniz: model must have dim_z = 2");
  const std::size_t nx = model.dim_x();
  const Vector c = model.support_center(x);
  const Matrix g = model.observation_jacobian();
  const double a = model.support_radius();
  const auto& gl = gauss_legendre(nodes);
  Matrix acc(nx, nx);
  for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
    const double t = std::numbers::pi * (gl.nodes[k] + 1.0);
    const double w = std::numbers::pi * gl.weights[k];
    const Vector z = c + Vector{a * std::cos(t), a * std::sin(t)};
    const double dz1 = -a * std::sin(t);
    const double dz2 = a * std::cos(t);
    const double pdf = model.pdf(z, x);
    const Vector err = model.mle(z) - x;
    Vector flux(nx);
    for (std::size_t i = 0; i < nx; ++i) flux[i] = g(i, 0) * dz2 - g(i, 1) * dz1;
    acc.add_outer(w * pdf, flux, err);
  }
  return acc;
}

/// D_L of a 3-D model from the surface form
///   int F (v1 dz2 dz3 + v2 dz3 dz1 + v3 dz1 dz2)
/// with z(u, p) = c + a (sin u cos p, sin u sin p, cos u) and the oriented
/// area element dz/du x dz/dp.
template <LikelihoodModel M>
Matrix surface_leibniz(const M& model, const Vector& x, int nodes = 128) {
  if (model.dim_z() != 3) throw DimMismatch("surface_leibniz: model must have dim_z = 3");
  const std::size_t nx = model.dim_x();
  const Vector c = model.support_center(x);
  const Matrix g = model.observation_jacobian();
  const double a = model.support_radius();
  const auto& gl = gauss_legendre(nodes);
  Matrix acc(nx, nx);
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double u = 0.5 * std::numbers::pi * (gl.nodes[i] + 1.0);
    const double wu = 0.5 * std::numbers::pi * gl.weights[i];
    for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
      const double p = std::numbers::pi * (gl.nodes[j] + 1.0);
      const double wp = std::numbers::pi * gl.weights[j];
      const Vector zu{a * std::cos(u) * std::cos(p), a * std::cos(u) * std::sin(p),
                      -a * std::sin(u)};
      const Vector zp{-a * std::sin(u) * std::sin(p), a * std::sin(u) * std::cos(p), 0.0};
      const Vector area{zu[1] * zp[2] - zu[2] * zp[1], zu[2] * zp[0] - zu[0] * zp[2],
                        zu[0] * zp[1] - zu[1] * zp[0]};
      const Vector z = c + Vector{a * std::sin(u) * std::cos(p), a * std::sin(u) * std::sin(p),
                                  a * std::cos(u)};
      const double pdf = model.pdf(z, x);
      acc.add_outer(wu * wp * pdf, g * area, model.mle(z) - x);
    }
  }
  return acc;
}

/// Integral identities and Leibniz-term specializations.
inline std::vector<IdentityCheck> run_identity_checks() {
  std::vector<IdentityCheck> out;
  constexpr double kTol = 1e-10;

  for (int n = 0; n <= 8; ++n) {
    const double direct = adaptive_integrate(
        [n](double t) { return std::pow(std::sin(t), n); }, 0.0, std::numbers::pi, 1e-14);
    out.push_back(make_check("sin_power n=" + std::to_string(n), sin_power_integral(n), direct,
                             kTol));
  }
  for (int n = 2; n <= 8; ++n) {
    out.push_back(make_check("sin_power recursion n=" + std::to_string(n),
                             sin_power_integral(n),
                             (n - 1.0) / n * sin_power_integral(n - 2), kTol));
  }

  const double inf = std::numeric_limits<double>::infinity();
  for (double a : {0.5, 1.0, 2.0, 5.0, inf}) {
    for (int n = 0; n <= 5; ++n) {
      const double direct = adaptive_integrate(
          [n](double r) { return std::exp(-0.5 * r * r) * std::pow(r, n + 1); }, 0.0, a, 1e-14);
      const std::string tag = " n=" + std::to_string(n) + " a=" + (std::isinf(a) ? std::string("inf")
                                                                              : std::to_string(a));
      out.push_back(make_check("gaussian_moment" + tag, gaussian_radial_moment(n, a, 1.0),
                               direct, kTol));
      if (n >= 1) {
        const double boundary = std::isinf(a) ? 0.0 : std::pow(a, n) * std::exp(-0.5 * a * a);
        const double lower = n >= 2 ? gaussian_radial_moment(n - 2, a, 1.0)
                                    : adaptive_integrate(
                                          [](double r) { return std::exp(-0.5 * r * r); }, 0.0,
                                          a, 1e-14);
        out.push_back(make_check("gaussian_moment recursion" + tag,
                                 gaussian_radial_moment(n, a, 1.0), -boundary + n * lower, kTol));
      }
    }
  }

  out.push_back(make_check(
      "int_0^2pi sin^2",
      integrate_interval([](double t) { return std::sin(t) * std::sin(t); }, 0.0,
                         2.0 * std::numbers::pi, 64),
      std::numbers::pi, 1e-12));

  // Leibniz term: hyperspherical boundary quadrature against the contour
  // and surface forms.
  {
    const TruncLaplaceModel lap(2.0, 1.5);
    const Vector x{0.4, -0.2};
    const Matrix general = leibniz_term(lap, x);
    const Matrix planar = planar_leibniz(lap, x);
    out.push_back(make_check("planar leibniz laplace", frobenius(general - planar), 0.0, 1e-9));
  }
  {
    const RfcModel rfc(0.5);
    const Vector x{-1.0, 2.0};
    out.push_back(make_check("planar leibniz rfc",
                             frobenius(leibniz_term(rfc, x) - planar_leibniz(rfc, x)), 0.0,
                             1e-9));
  }
  {
    QuadratureSpec spec;
    spec.angular_nodes = 64;
    const TruncGaussianModel tg(3, 1.0, 1.5);
    const Vector x{0.1, 0.2, 0.3};
    out.push_back(make_check("surface leibniz tg n=3",
                             frobenius(leibniz_term(tg, x, spec) - surface_leibniz(tg, x)), 0.0,
                             1e-9));
    const LinearTgModel lin(Matrix{{1.0, 0.5}, {-0.3, 1.0}, {0.2, 0.7}}, 1.5);
    const Vector xl{0.5, -0.5};
    out.push_back(make_check("surface leibniz linear_tg",
                             frobenius(leibniz_term(lin, xl, spec) - surface_leibniz(lin, xl)),
                             0.0, 1e-9));
  }
  return out;
}

}  // namespace crllb
