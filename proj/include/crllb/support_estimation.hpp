#pragma once

// Estimating both endpoints of U(x1, x2) from n samples through the order
// statistics z = (z_m, z_M). The exact FIM is singular; the truncated
// Gaussian approximation N(mu, sigma^2), mu = (x1 + x2)/2, restricted to
// [x1, x2] gives an invertible FIM J' and Leibniz terms over the triangle
// x1 <= z_m <= z_M <= x2. As sigma grows, L' = I - D'_1 - D'_2 goes to zero.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "crllb/errors.hpp"
#include "crllb/linalg.hpp"
#include "crllb/quadrature.hpp"
#include "crllb/rng.hpp"
#include "crllb/sampling.hpp"

namespace crllb {

struct UniformSupportProblem {
  double x1 = 0.0;
  double x2 = 1.0;
  int n_samples = 2;

  double width() const { return x2 - x1; }
  double midpoint() const { return 0.5 * (x1 + x2); }
  Vector x() const { return Vector{x1, x2}; }

  void validate() const {
    if (!(x2 > x1) || !std::isfinite(x1) || !std::isfinite(x2)) {
      throw ConfigError("uniform support: need finite x1 < x2");
    }
    if (n_samples < 2) throw DegenerateN("uniform support: need at least 2 samples");
  }
};

struct TgApproxConfig {
  double sigma = 1.0;
  int quad_nodes = 256;

  void validate() const {
    if (!(sigma > 0.0) || std::isnan(sigma)) throw ConfigError("tg approximation: sigma must be > 0");
    if (quad_nodes < 8) throw ConfigError("tg approximation: quad_nodes must be >= 8");
  }
};

struct OrderStatistics {
  double z_min;
  double z_max;
};

inline OrderStatistics order_statistics(std::span<const double> samples) {
  if (samples.size() < 2) throw TooFewSamples("order_statistics: need at least 2 samples");
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  return {*lo, *hi};
}

/// x1_hat = (n z_m - z_M)/(n - 1), x2_hat = (n z_M - z_m)/(n - 1).
inline Vector unbiased_endpoints(double z_min, double z_max, int n) {
  if (n < 2) throw DegenerateN("unbiased_endpoints: n must be >= 2");
  const double m = n - 1.0;
  return Vector{(n * z_min - z_max) / m, (n * z_max - z_min) / m};
}

/// Exact covariance of the unbiased endpoint estimators.
inline SymMatrix estimator_covariance(double x1, double x2, int n) {
  if (n < 2) throw DegenerateN("estimator_covariance: n must be >= 2");
  const double d2 = (x2 - x1) * (x2 - x1);
  const double den = (n - 1.0) * (n + 1.0) * (n + 2.0);
  const double diag = n * d2 / den;
  const double off = -d2 / den;
  return SymMatrix{{diag, off}, {off, diag}};
}

/// (n / (x2 - x1))^2 [[1, -1], [-1, 1]], rank one.
inline SymMatrix classical_fim(double x1, double x2, int n) {
  if (!(x2 > x1)) throw ConfigError("classical_fim: need x1 < x2");
  const double c = static_cast<double>(n) * n / ((x2 - x1) * (x2 - x1));
  return SymMatrix{{c, -c}, {-c, c}};
}

/// Density of (z_m, z_M) under the exact uniform model.
inline double sufficient_statistic_pdf(double z_min, double z_max,
                                       const UniformSupportProblem& p) {
  if (z_min < p.x1 || z_max > p.x2 || z_min > z_max) return 0.0;
  const int n = p.n_samples;
  return n * (n - 1.0) * std::pow(z_max - z_min, n - 2) / std::pow(p.width(), n);
}

// ---------------------------------------------------------------------------
// Gaussian helpers

inline double normal_pdf(double z, double mu, double sigma) {
  const double u = (z - mu) / sigma;
  return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

inline double normal_cdf(double z, double mu, double sigma) {
  return 0.5 * std::erfc(-(z - mu) / (sigma * std::numbers::sqrt2));
}

/// Phi(b) - Phi(a) for a <= b. Uses erfc in either tail and erf across the
/// mean so that neither cancellation nor underflow loses the difference.
inline double normal_cdf_diff(double a, double b, double mu, double sigma) {
  const double s = sigma * std::numbers::sqrt2;
  const double u = (a - mu) / s;
  const double v = (b - mu) / s;
  if (u >= 0.0) return 0.5 * (std::erfc(u) - std::erfc(v));
  if (v <= 0.0) return 0.5 * (std::erfc(-v) - std::erfc(-u));
  return 0.5 * (std::erf(v) - std::erf(u));
}

/// Integral of f over the triangle x1 <= s <= t <= x2 with a collapsed
/// tensor Gauss-Legendre rule. f(s, t) may return double or Matrix.
template <class F>
auto integrate_triangle(F&& f, double x1, double x2, int nodes) {
  using R = std::decay_t<std::invoke_result_t<F&, double, double>>;
  const auto& gl = gauss_legendre(nodes);
  std::optional<R> acc;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double s = x1 + 0.5 * (x2 - x1) * (gl.nodes[i] + 1.0);
    const double ws = 0.5 * (x2 - x1) * gl.weights[i];
    for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
      const double t = s + 0.5 * (x2 - s) * (gl.nodes[j] + 1.0);
      const double wt = 0.5 * (x2 - s) * gl.weights[j];
      detail::accumulate(acc, ws * wt, f(s, t));
    }
  }
  if (!detail::all_finite(*acc)) throw NonFinite("integrate_triangle: non-finite integral");
  return *acc;
}

// ---------------------------------------------------------------------------
// Truncated Gaussian approximation

/// Density of (z_m, z_M) under the truncated Gaussian approximation.
inline double tg_sufficient_pdf(double z_min, double z_max, const UniformSupportProblem& p,
                                const TgApproxConfig& cfg) {
  if (z_min < p.x1 || z_max > p.x2 || z_min > z_max) return 0.0;
  const int n = p.n_samples;
  const double mu = p.midpoint();
  const double s = cfg.sigma;
  const double mass = normal_cdf_diff(p.x1, p.x2, mu, s);
  const double inner = normal_cdf_diff(z_min, z_max, mu, s);
  return n * (n - 1.0) * normal_pdf(z_min, mu, s) * normal_pdf(z_max, mu, s) *
         std::pow(inner / mass, n - 2) / (mass * mass);
}

/// Score of the approximate density in (x1, x2), including the dependence
/// of mu on both endpoints.
inline Vector tg_score(double z_min, double z_max, const UniformSupportProblem& p,
                       const TgApproxConfig& cfg) {
  const int n = p.n_samples;
  const double mu = p.midpoint();
  const double s = cfg.sigma;
  const double s2 = s * s;
  double dmu = (z_min - mu) / s2 + (z_max - mu) / s2;
  if (n > 2) {
    dmu -= (n - 2.0) * (normal_pdf(z_max, mu, s) - normal_pdf(z_min, mu, s)) /
           normal_cdf_diff(z_min, z_max, mu, s);
  }
  const double mass = normal_cdf_diff(p.x1, p.x2, mu, s);
  const double h = 0.5 * dmu;
  return Vector{h + n * normal_pdf(p.x1, mu, s) / mass, h - n * normal_pdf(p.x2, mu, s) / mass};
}

/// J' in closed form: [[p + q, q - p], [q - p, p + q]] with
/// p = n^2 N(d; 0, s^2)^2 / [1 - 2 Phi(d; 0, s^2)]^2, d = (x1 - x2)/2, and
/// q = n / (4 s^2).
inline SymMatrix tg_fim(const UniformSupportProblem& prob, const TgApproxConfig& cfg) {
  prob.validate();
  cfg.validate();
  const double n = prob.n_samples;
  const double s = cfg.sigma;
  const double d = 0.5 * (prob.x1 - prob.x2);
  const double ratio = normal_pdf(d, 0.0, s) / normal_cdf_diff(d, -d, 0.0, s);
  const double p = n * n * ratio * ratio;
  const double q = n / (4.0 * s * s);
  return SymMatrix{{p + q, q - p}, {q - p, p + q}};
}

/// J' = E[s s^T] by quadrature over the triangle, an independent check of
/// the closed form.
inline SymMatrix tg_fim_quadrature(const UniformSupportProblem& prob, const TgApproxConfig& cfg) {
  prob.validate();
  cfg.validate();
  const Matrix m = integrate_triangle(
      [&](double zm, double zM) {
        const double pdf = tg_sufficient_pdf(zm, zM, prob, cfg);
        Matrix out(2, 2);
        const Vector g = tg_score(zm, zM, prob, cfg);
        out.add_outer(pdf, g, g);
        return out;
      },
      prob.x1, prob.x2, cfg.quad_nodes);
  return SymMatrix(m);
}

struct TgLeibniz {
  SymMatrix d1;  // segment z_m = x1
  SymMatrix d2;  // segment z_M = x2

  SymMatrix total() const { return d1 + d2; }
};

/// D'_1 and D'_2 in closed form with the remaining integrals of
/// [Phi(.) - Phi(.)]^{n-1} by adaptive quadrature.
inline TgLeibniz tg_leibniz(const UniformSupportProblem& prob, const TgApproxConfig& cfg) {
  prob.validate();
  cfg.validate();
  const int n = prob.n_samples;
  const double x1 = prob.x1;
  const double x2 = prob.x2;
  const double mu = prob.midpoint();
  const double s = cfg.sigma;
  const double mass = normal_cdf_diff(x1, x2, mu, s);
  const double m = n - 1.0;

  // integrals of ([Phi(z) - Phi(x1)] / mass)^{n-1}, kept normalized
  const double i1 = adaptive_integrate(
      [&](double z) { return std::pow(normal_cdf_diff(x1, z, mu, s) / mass, n - 1); }, x1, x2,
      1e-14);
  const double i2 = adaptive_integrate(
      [&](double z) { return std::pow(normal_cdf_diff(z, x2, mu, s) / mass, n - 1); }, x1, x2,
      1e-14);

  const double w = prob.width();
  const double a1 = n * normal_pdf(x1, mu, s) / (m * mass) * (w - i1);
  const double a2 = n * normal_pdf(x2, mu, s) / (m * mass) * (w - i2);
  return {SymMatrix{{a1, 0.0}, {0.0, 0.0}}, SymMatrix{{0.0, 0.0}, {0.0, a2}}};
}

struct TgLeibnizSegments {
  Matrix c1;  // z_m = x1, outward normal (-1, 0)
  Matrix c2;  // z_M = x2, outward normal (0, 1)
  Matrix c3;  // z_m = z_M, outward normal (1, -1)/sqrt(2)

  Matrix total() const { return c1 + c2 + c3; }
};

/// Boundary integral of grad_x z^T n p' (xhat - x)^T along each edge of the
/// triangle, evaluated directly with Gauss-Legendre nodes. Unlike the closed
/// form this keeps every matrix entry.
inline TgLeibnizSegments tg_leibniz_segments(const UniformSupportProblem& prob,
                                             const TgApproxConfig& cfg) {
  prob.validate();
  cfg.validate();
  const int n = prob.n_samples;
  const double x1 = prob.x1;
  const double x2 = prob.x2;
  const double w = prob.width();
  const Vector x = prob.x();

  struct EdgePoint {
    double zm;
    double zM;
    Matrix g;
    double speed;
  };

  auto integrate_edge = [&](auto&& param, const Vector& normal) {
    // param(t) -> (z_m, z_M, grad_x z^T) for t in [x1, x2]; dc = |dz/dt| dt
    const auto& gl = gauss_legendre(cfg.quad_nodes);
    Matrix acc(2, 2);
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      const double t = x1 + 0.5 * w * (gl.nodes[k] + 1.0);
      const auto [zm, zM, g, speed] = param(t);
      const double pdf = tg_sufficient_pdf(zm, zM, prob, cfg);
      const Vector err = unbiased_endpoints(zm, zM, n) - x;
      acc.add_outer(0.5 * w * gl.weights[k] * speed * pdf, g * normal, err);
    }
    return acc;
  };

  const double r2 = std::numbers::sqrt2 / 2.0;

  TgLeibnizSegments out;
  out.c1 = integrate_edge(
      [&](double t) {
        return EdgePoint{x1, t, Matrix{{1.0, (x2 - t) / w}, {0.0, (t - x1) / w}}, 1.0};
      },
      Vector{-1.0, 0.0});
  out.c2 = integrate_edge(
      [&](double t) {
        return EdgePoint{t, x2, Matrix{{(x2 - t) / w, 0.0}, {(t - x1) / w, 1.0}}, 1.0};
      },
      Vector{0.0, 1.0});
  out.c3 = integrate_edge(
      [&](double t) {
        return EdgePoint{t, t,
                         Matrix{{(x2 - t) / w, (x2 - t) / w}, {(t - x1) / w, (t - x1) / w}},
                         std::numbers::sqrt2};
      },
      Vector{r2, -r2});
  return out;
}

struct UniformSupportBounds {
  double sigma = 0.0;
  SymMatrix fim;        // J' closed form
  TgLeibniz leibniz;    // D'_1, D'_2 closed form
  SymMatrix l_matrix;   // I - D'_1 - D'_2
  SymMatrix crllb;      // L'^T J'^-1 L'
};

/// CRLLB of the truncated Gaussian approximation. sigma = infinity selects
/// the exact uniform model, whose FIM is singular.
inline UniformSupportBounds uniform_support_crllb(const UniformSupportProblem& prob,
                                                  const TgApproxConfig& cfg) {
  prob.validate();
  if (std::isinf(cfg.sigma)) {
    try {
      invert(classical_fim(prob.x1, prob.x2, prob.n_samples));
    } catch (const SingularMatrix&) {
    }
    throw SingularFim("uniform support: Fisher information is singular; "
                      "no meaningful CRLB or CRLLB");
  }
  UniformSupportBounds b;
  b.sigma = cfg.sigma;
  b.fim = tg_fim(prob, cfg);
  b.leibniz = tg_leibniz(prob, cfg);
  b.l_matrix = SymMatrix::identity(2) - b.leibniz.total();
  b.crllb = congruence(b.l_matrix, invert(b.fim));
  return b;
}

/// Default sigma ladder, in units of x2 - x1.
inline std::vector<double> default_sigma_ladder() { return {1.0, 10.0, 100.0, 1000.0}; }

inline std::vector<UniformSupportBounds> sigma_ladder(const UniformSupportProblem& prob,
                                                      std::span<const double> multipliers,
                                                      int quad_nodes = 256) {
  std::vector<UniformSupportBounds> rows;
  for (double m : multipliers) {
    rows.push_back(uniform_support_crllb(prob, {m * prob.width(), quad_nodes}));
  }
  return rows;
}

/// Monte Carlo of the unbiased endpoint estimators: errors xhat - x over
/// `trials` independent sets of n uniform samples.
inline MomentAccumulator simulate_endpoints(const UniformSupportProblem& prob,
                                            std::uint64_t seed, std::size_t trials,
                                            std::uint64_t stream = 0) {
  prob.validate();
  Xoshiro256 rng(seed, stream);
  MomentAccumulator acc(2);
  const Vector x = prob.x();
  for (std::size_t t = 0; t < trials; ++t) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 0; i < prob.n_samples; ++i) {
      const double z = prob.x1 + prob.width() * rng.uniform();
      lo = std::min(lo, z);
      hi = std::max(hi, z);
    }
    acc.add(unbiased_endpoints(lo, hi, prob.n_samples) - x);
  }
  return acc;
}

}  // namespace crllb
