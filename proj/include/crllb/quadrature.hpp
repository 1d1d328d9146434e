#pragma once

// Deterministic integration over n-balls, their boundary spheres and
// intervals. Ball and sphere integrals use tensor-product Gauss-Legendre
// rules in hyperspherical coordinates
//
//   z - c = r * (cos t1, sin t1 cos t2, ..., sin t1...sin t_{n-2} sin t_{n-1})
//
// with r in [0, a], t1..t_{n-2} in [0, pi] and t_{n-1} in [0, 2 pi]. The
// Jacobian r^{n-1} sin^{n-2} t1 ... sin t_{n-2} is folded into the weights.
// Gauss-Legendre nodes are strictly interior, so integrands with an
// integrable singularity at r = 0 are never evaluated there.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "crllb/errors.hpp"
#include "crllb/linalg.hpp"

namespace crllb {

struct QuadratureSpec {
  int radial_nodes = 256;
  int angular_nodes = 256;  // per angle
  double rel_tol = 1e-9;
  std::size_t dim = 2;

  void validate() const {
    if (radial_nodes < 8 || angular_nodes < 8) {
      throw ConfigError("quadrature node counts must be >= 8");
    }
    if (!(rel_tol > 0.0 && rel_tol <= 1e-2)) {
      throw ConfigError("quadrature rel_tol must lie in (0, 1e-2]");
    }
    if (dim < 1 || dim > kMaxDim) throw ConfigError("quadrature dim must be in 1..8");
  }

  QuadratureSpec with_dim(std::size_t n) const {
    QuadratureSpec s = *this;
    s.dim = n;
    return s;
  }
  QuadratureSpec refined() const {
    QuadratureSpec s = *this;
    s.radial_nodes *= 2;
    s.angular_nodes *= 2;
    return s;
  }
};

/// A point of the ball in hyperspherical coordinates. `direction` is the unit
/// vector n_n(angles); for n = 1 it is +1 or -1 and `angles` is empty.
struct SphericalPoint {
  double r = 0.0;
  Vector angles;
  Vector direction;

  Vector cartesian() const { return direction * r; }
};

/// Unit direction for the given angles in dimension angles.size() + 1.
inline Vector unit_direction(const Vector& angles) {
  const std::size_t n = angles.size() + 1;
  Vector d(n);
  double sin_prod = 1.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    d[i] = sin_prod * std::cos(angles[i]);
    sin_prod *= std::sin(angles[i]);
  }
  d[n - 1] = sin_prod;
  return d;
}

struct GaussLegendreRule {
  std::vector<double> nodes;    // on (-1, 1), ascending
  std::vector<double> weights;
};

namespace detail {

inline GaussLegendreRule compute_gauss_legendre(int n) {
  GaussLegendreRule rule{std::vector<double>(n), std::vector<double>(n)};
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

struct AngularNode {
  Vector angles;
  Vector direction;
  double weight;  // includes sin^{n-1-i}(t_i) Jacobian factors
};

using AngularGrid = std::vector<AngularNode>;

inline AngularGrid build_angular_grid(std::size_t dim, int nodes);

template <class Key, class Value, class Make>
std::shared_ptr<const Value> cached(Key key, Make make) {
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const Value>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto value = std::make_shared<const Value>(make());
  cache.emplace(key, value);
  return value;
}

}  // namespace detail

/// Gauss-Legendre rule with n nodes on (-1, 1); tables are computed once and
/// shared.
inline const GaussLegendreRule& gauss_legendre(int n) {
  if (n < 1) throw ConfigError("Gauss-Legendre rule needs at least one node");
  static thread_local std::map<int, std::shared_ptr<const GaussLegendreRule>> local;
  auto& slot = local[n];
  if (!slot) {
    slot = detail::cached<int, GaussLegendreRule>(
        n, [n] { return detail::compute_gauss_legendre(n); });
  }
  return *slot;
}

namespace detail {

inline AngularGrid build_angular_grid(std::size_t dim, int nodes) {
  AngularGrid grid;
  if (dim == 1) {
    grid.push_back({Vector{}, Vector{-1.0}, 1.0});
    grid.push_back({Vector{}, Vector{1.0}, 1.0});
    return grid;
  }
  const auto& gl = gauss_legendre(nodes);
  const std::size_t n_angles = dim - 1;
  std::size_t total = 1;
  for (std::size_t i = 0; i < n_angles; ++i) total *= static_cast<std::size_t>(nodes);
  grid.reserve(total);

  std::vector<int> idx(n_angles, 0);
  for (std::size_t count = 0; count < total; ++count) {
    Vector angles(n_angles);
    double w = 1.0;
    for (std::size_t i = 0; i < n_angles; ++i) {
      const double u = gl.nodes[idx[i]];
      const bool last = (i + 1 == n_angles);
      const double hi = last ? 2.0 * std::numbers::pi : std::numbers::pi;
      angles[i] = 0.5 * hi * (u + 1.0);
      w *= 0.5 * hi * gl.weights[idx[i]];
      if (!last) w *= std::pow(std::sin(angles[i]), static_cast<double>(dim - 2 - i));
    }
    grid.push_back({angles, unit_direction(angles), w});
    for (std::size_t i = 0; i < n_angles; ++i) {
      if (++idx[i] < nodes) break;
      idx[i] = 0;
    }
  }
  return grid;
}

inline std::shared_ptr<const AngularGrid> angular_grid(std::size_t dim, int nodes) {
  return cached<std::pair<std::size_t, int>, AngularGrid>(
      {dim, nodes}, [dim, nodes] { return build_angular_grid(dim, nodes); });
}

inline bool all_finite(double v) { return std::isfinite(v); }
inline bool all_finite(const Vector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}
inline bool all_finite(const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j))) return false;
  return true;
}
template <class T>
bool all_finite(const T& value) {
  return value.all_finite();
}

template <class T>
void accumulate(std::optional<T>& acc, double w, T value) {
  if constexpr (std::is_arithmetic_v<T>) {
    acc = acc ? *acc + w * value : w * value;
  } else {
    value *= w;
    if (acc) {
      *acc += value;
    } else {
      acc = std::move(value);
    }
  }
}

}  // namespace detail

/// Integral of f over the n-ball of the given radius centred at the origin,
/// n = spec.dim. f receives a SphericalPoint and may return double, Vector,
/// Matrix, or any type with `*= double`, `+=` and `all_finite()`.
template <class F>
auto integrate_ball(F&& f, double radius, const QuadratureSpec& spec) {
  using R = std::decay_t<std::invoke_result_t<F&, const SphericalPoint&>>;
  spec.validate();
  const std::size_t n = spec.dim;
  const auto grid = detail::angular_grid(n, spec.angular_nodes);
  const auto& radial = gauss_legendre(spec.radial_nodes);

  std::vector<std::pair<double, double>> rw(radial.nodes.size());
  for (std::size_t k = 0; k < rw.size(); ++k) {
    const double r = 0.5 * radius * (radial.nodes[k] + 1.0);
    rw[k] = {r, 0.5 * radius * radial.weights[k] *
                    std::pow(r, static_cast<double>(n - 1))};
  }

  std::optional<R> acc;
  SphericalPoint p;
  for (const auto& dir : *grid) {
    p.angles = dir.angles;
    p.direction = dir.direction;
    for (const auto& [r, w] : rw) {
      p.r = r;
      detail::accumulate(acc, dir.weight * w, f(std::as_const(p)));
    }
  }
  if (!detail::all_finite(*acc)) throw NonFinite("integrate_ball: non-finite integral");
  return *acc;
}

/// Surface integral of f over the sphere r = radius with measure
/// radius^{n-1} dOmega. For n = 1 the "sphere" is the two points +-radius.
template <class F>
auto integrate_boundary(F&& f, double radius, const QuadratureSpec& spec) {
  using R = std::decay_t<std::invoke_result_t<F&, const SphericalPoint&>>;
  spec.validate();
  const std::size_t n = spec.dim;
  const auto grid = detail::angular_grid(n, spec.angular_nodes);
  const double measure = std::pow(radius, static_cast<double>(n - 1));

  std::optional<R> acc;
  SphericalPoint p;
  p.r = radius;
  for (const auto& dir : *grid) {
    p.angles = dir.angles;
    p.direction = dir.direction;
    detail::accumulate(acc, dir.weight * measure, f(std::as_const(p)));
  }
  if (!detail::all_finite(*acc)) {
    throw NonFinite("integrate_boundary: non-finite integral");
  }
  return *acc;
}

/// Fixed Gauss-Legendre rule on [a, b].
template <class F>
double integrate_interval(F&& f, double a, double b, int nodes) {
  const auto& gl = gauss_legendre(nodes);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
    s += gl.weights[k] * f(mid + half * gl.nodes[k]);
  }
  return half * s;
}

/// Adaptive Gauss-Kronrod (G30/K61) integral on [a, b]; b may be +infinity.
template <class F>
double adaptive_integrate(F&& f, double a, double b, double tol = 1e-13) {
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double t) { return f(t); }, a, b, 20, tol, &error);
  if (!std::isfinite(value)) throw NonFinite("adaptive_integrate: non-finite integral");
  return value;
}

struct QuadratureEstimate {
  double value = 0.0;
  double error = 0.0;  // |I(2N) - I(N)|
  bool converged = false;
};

/// Ball integral at the requested node counts and at twice those counts; the
/// difference is the reported error and `converged` compares it with rel_tol.
template <class F>
QuadratureEstimate integrate_ball_checked(F&& f, double radius, const QuadratureSpec& spec) {
  const double coarse = integrate_ball(f, radius, spec);
  const double fine = integrate_ball(f, radius, spec.refined());
  const double err = std::abs(fine - coarse);
  return {fine, err, err <= spec.rel_tol * std::max(std::abs(fine), 1e-300)};
}

/// int_0^pi sin^n(t) dt by the recursion I(n) = (n-1)/n I(n-2),
/// I(0) = pi, I(1) = 2.
inline double sin_power_integral(int n) {
  if (n < 0) throw ConfigError("sin_power_integral: n must be >= 0");
  double value = (n % 2 == 0) ? std::numbers::pi : 2.0;
  for (int k = (n % 2 == 0) ? 2 : 3; k <= n; k += 2) {
    value *= static_cast<double>(k - 1) / k;
  }
  return value;
}

/// int_0^a r^p exp(-r^2 / (2 sigma^2)) dr for p >= 0. Powers >= 2 use the
/// integration-by-parts recursion
///   I(p) = -sigma^2 a^{p-1} e^{-a^2/2sigma^2} + (p-1) sigma^2 I(p-2),
/// with I(0) and I(1) from adaptive quadrature. a may be +infinity.
inline double gaussian_radial_integral(int p, double a, double sigma) {
  if (p < 0) throw ConfigError("gaussian_radial_integral: power must be >= 0");
  if (!(a > 0.0) || !(sigma > 0.0)) {
    throw ConfigError("gaussian_radial_integral: a and sigma must be positive");
  }
  const double s2 = sigma * sigma;
  auto base = [&](int q) {
    return adaptive_integrate(
        [&](double r) { return std::pow(r, q) * std::exp(-r * r / (2.0 * s2)); }, 0.0, a,
        1e-14);
  };
  double prev = base(p % 2);
  const double tail = std::isinf(a) ? 0.0 : std::exp(-a * a / (2.0 * s2));
  for (int q = p % 2 + 2; q <= p; q += 2) {
    const double boundary = std::isinf(a) ? 0.0 : std::pow(a, q - 1) * tail;
    prev = -s2 * boundary + (q - 1) * s2 * prev;
  }
  return prev;
}

/// int_0^a exp(-r^2 / (2 sigma^2)) r^{n+1} dr.
inline double gaussian_radial_moment(int n, double a, double sigma) {
  if (n < 0) throw ConfigError("gaussian_radial_moment: n must be >= 0");
  return gaussian_radial_integral(n + 1, a, sigma);
}

/// Surface area of the unit (n-1)-sphere in R^n, built from the angular
/// factors 2 pi prod_{i=1}^{n-2} int_0^pi sin^{n-1-i}.
inline double unit_sphere_area(std::size_t n) {
  if (n == 0) throw ConfigError("unit_sphere_area: n must be >= 1");
  if (n == 1) return 2.0;
  double area = 2.0 * std::numbers::pi;
  for (std::size_t i = 1; i + 2 <= n; ++i) {
    area *= sin_power_integral(static_cast<int>(n - 1 - i));
  }
  return area;
}

inline double ball_volume(std::size_t n, double radius) {
  return unit_sphere_area(n) * std::pow(radius, static_cast<double>(n)) /
         static_cast<double>(n);
}

}  // namespace crllb
