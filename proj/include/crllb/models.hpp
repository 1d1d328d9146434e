#pragma once

// Likelihood models for additive noise with ball-shaped support:
//
//   z = f(x) + w,   p(z|x) = p_w(z - f(x)),   ||z - f(x)|| <= a.
//
// Every model exposes the same surface (see the LikelihoodModel concept):
// density, score grad_x ln p, support geometry, the boundary velocity
// grad_x z^T, the MLE, an envelope for rejection sampling and, where one is
// known, the closed-form FIM / Leibniz term / bound / MLE covariance.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "crllb/errors.hpp"
#include "crllb/linalg.hpp"
#include "crllb/quadrature.hpp"

namespace crllb {

/// Closed-form reference results of a model. All in-scope models are
/// additive, so the matrices do not depend on x.
struct ClosedFormSet {
  SymMatrix fim;
  SymMatrix leibniz;
  SymMatrix l_matrix;
  std::optional<SymMatrix> crlb;  // empty when the FIM is singular
  SymMatrix crllb;
  SymMatrix mle_cov;
  bool efficient = false;
};

template <class M>
concept LikelihoodModel = requires(const M& m, const Vector& v) {
  { m.name() } -> std::convertible_to<std::string>;
  { m.dim_x() } -> std::convertible_to<std::size_t>;
  { m.dim_z() } -> std::convertible_to<std::size_t>;
  { m.support_radius() } -> std::convertible_to<double>;
  { m.support_center(v) } -> std::same_as<Vector>;
  { m.observation_jacobian() } -> std::same_as<Matrix>;
  { m.pdf(v, v) } -> std::convertible_to<double>;
  { m.score(v, v) } -> std::same_as<std::optional<Vector>>;
  { m.boundary_normal(v, v) } -> std::same_as<Vector>;
  { m.mle(v) } -> std::same_as<Vector>;
  { m.max_density() } -> std::convertible_to<double>;
  { m.closed_form() } -> std::same_as<std::optional<ClosedFormSet>>;
};

/// Models that also provide the analytic Hessian of the log-likelihood.
template <class M>
concept HasLlfHessian = LikelihoodModel<M> && requires(const M& m, const Vector& v) {
  { m.llf_hessian(v, v) } -> std::same_as<SymMatrix>;
};

namespace detail {

/// Relative slack on the support radius so that boundary points produced by
/// c + a * n (rounded) still count as inside.
inline constexpr double kSupportSlack = 1e-12;

inline void require_dim(const Vector& v, std::size_t n, const char* what) {
  if (v.size() != n) throw DimMismatch(std::string(what) + ": dimension mismatch");
}

/// Shared geometry for models with f(x) = x: a ball of radius a around x.
class IdentityBallGeometry {
 public:
  IdentityBallGeometry(std::size_t n, double a) : n_(n), a_(a) {
    if (n < 1 || n > kMaxDim) throw ConfigError("dimension must be in 1..8");
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("support radius a must be > 0");
  }

  std::size_t dim_x() const { return n_; }
  std::size_t dim_z() const { return n_; }
  double support_radius() const { return a_; }
  Vector support_center(const Vector& x) const {
    require_dim(x, n_, "support_center");
    return x;
  }
  Matrix observation_jacobian() const { return Matrix::identity(n_); }
  Vector boundary_normal(const Vector& z, const Vector& x) const {
    Vector d = z - x;
    return d * (1.0 / norm(d));
  }
  Vector mle(const Vector& z) const {
    require_dim(z, n_, "mle");
    return z;
  }

 protected:
  /// Radius ||z - x||, or nullopt when z lies outside the support.
  std::optional<double> radius_inside(const Vector& z, const Vector& x) const {
    require_dim(z, n_, "pdf");
    require_dim(x, n_, "pdf");
    const double r = norm(z - x);
    if (r > a_ * (1.0 + kSupportSlack)) return std::nullopt;
    return r;
  }

  std::size_t n_;
  double a_;
};

}  // namespace detail

/// Raised fractional cosine noise inside a circle,
///   p(w) = k (1 + beta cos(pi ||w|| / a)),  k = (pi a^2 - 4 beta a^2 / pi)^{-1}.
/// Only a = pi is supported; the closed forms are derived for that radius.
class RfcModel : public detail::IdentityBallGeometry {
 public:
  explicit RfcModel(double beta, double a = std::numbers::pi)
      : IdentityBallGeometry(2, a), beta_(beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("rfc: beta must lie in [0, 1]");
    if (std::abs(a - std::numbers::pi) > 1e-12) {
      throw ConfigError("rfc: only a = pi is supported");
    }
    k_ = 1.0 / (std::numbers::pi * a * a - 4.0 * beta * a * a / std::numbers::pi);
  }

  std::string name() const { return "rfc"; }
  double beta() const { return beta_; }
  double normalization() const { return k_; }

  double pdf(const Vector& z, const Vector& x) const {
    const auto r = radius_inside(z, x);
    if (!r) return 0.0;
    return k_ * (1.0 + beta_ * std::cos(std::numbers::pi * *r / a_));
  }

  std::optional<Vector> score(const Vector& z, const Vector& x) const {
    const Vector d = z - x;
    const double r = norm(d);
    if (r == 0.0) return Vector(2, 0.0);
    const double u = std::numbers::pi * r / a_;
    // -d ln p / dr, times grad_x r = -(z - x) / r
    const double dlog = beta_ * (std::numbers::pi / a_) * std::sin(u) /
                        (1.0 + beta_ * std::cos(u));
    return d * (dlog / r);
  }

  double max_density() const { return k_ * (1.0 + beta_); }

  /// I(beta) = int_0^pi r sin^2 r / (1 + beta cos r) dr, which has no
  /// elementary antiderivative.
  static double radial_integral(double beta) {
    if (beta == 1.0) {
      // sin^2 r / (1 + cos r) = 1 - cos r removes the 0/0 at r = pi
      return adaptive_integrate([](double r) { return r * (1.0 - std::cos(r)); }, 0.0,
                                std::numbers::pi, 1e-14);
    }
    return adaptive_integrate(
        [beta](double r) {
          const double s = std::sin(r);
          return r * s * s / (1.0 + beta * std::cos(r));
        },
        0.0, std::numbers::pi, 1e-14);
  }

  std::optional<ClosedFormSet> closed_form() const {
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    const double b = beta_;
    const double denom = pi2 - 4.0 * b;
    const double ib = radial_integral(b);
    const double j = b * b / denom * ib;
    const double dl = pi2 * (1.0 - b) / denom;
    const double l = (pi2 - 4.0) * b / denom;
    // L^2 / J with the beta^2 factors cancelled, finite at beta = 0
    const double bound = (pi2 - 4.0) * (pi2 - 4.0) / (denom * ib);
    const double cov = (pi2 * pi2 / 4.0 + b * (12.0 - 3.0 * pi2)) / denom;
    std::optional<SymMatrix> crlb;
    if (j > 0.0) crlb = SymMatrix::scaled_identity(2, 1.0 / j);
    return ClosedFormSet{SymMatrix::scaled_identity(2, j),
                         SymMatrix::scaled_identity(2, dl),
                         SymMatrix::scaled_identity(2, l),
                         crlb,
                         SymMatrix::scaled_identity(2, bound),
                         SymMatrix::scaled_identity(2, cov),
                         false};
  }

 private:
  double beta_;
  double k_;
};

/// Truncated Laplace noise inside a circle, p(w) = k exp(-alpha ||w||).
class TruncLaplaceModel : public detail::IdentityBallGeometry {
 public:
  TruncLaplaceModel(double alpha, double a) : IdentityBallGeometry(2, a), alpha_(alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw ConfigError("laplace: alpha must be > 0");
    }
    k_ = alpha * alpha / (2.0 * std::numbers::pi * mass_factor());
  }

  std::string name() const { return "laplace"; }
  double alpha() const { return alpha_; }
  double normalization() const { return k_; }

  double pdf(const Vector& z, const Vector& x) const {
    const auto r = radius_inside(z, x);
    if (!r) return 0.0;
    return k_ * std::exp(-alpha_ * *r);
  }

  /// alpha (z - x) / ||z - x||; undefined at z = x (a null set).
  std::optional<Vector> score(const Vector& z, const Vector& x) const {
    const Vector d = z - x;
    const double r = norm(d);
    if (r == 0.0) return std::nullopt;
    return d * (alpha_ / r);
  }

  double max_density() const { return k_; }

  std::optional<ClosedFormSet> closed_form() const {
    const double t = a_ * alpha_;
    const double e = std::exp(-t);
    const double m = mass_factor();  // 1 - e^{-t} - t e^{-t}
    const double a2 = alpha_ * alpha_;
    const double j = a2 / 2.0;
    const double dl = k_ * std::numbers::pi * a_ * a_ * e;
    const double num = 2.0 * m - t * t * e;
    const double l = num / (2.0 * m);
    const double bound = num * num / (2.0 * a2 * m * m);
    const double cov = (6.0 * m - 3.0 * t * t * e - t * t * t * e) / (2.0 * a2 * m);
    return ClosedFormSet{SymMatrix::scaled_identity(2, j),
                         SymMatrix::scaled_identity(2, dl),
                         SymMatrix::scaled_identity(2, l),
                         SymMatrix::scaled_identity(2, 1.0 / j),
                         SymMatrix::scaled_identity(2, bound),
                         SymMatrix::scaled_identity(2, cov),
                         false};
  }

 private:
  double mass_factor() const {
    const double t = a_ * alpha_;
    return -std::expm1(-t) - t * std::exp(-t);
  }

  double alpha_;
  double k_;
};

/// Gaussian noise truncated to the n-ball of radius a,
///   p(w) = exp(-||w||^2 / (2 sigma^2)) / k_n,
///   k_n = |S^{n-1}| int_0^a exp(-r^2 / 2 sigma^2) r^{n-1} dr.
class TruncGaussianModel : public detail::IdentityBallGeometry {
 public:
  TruncGaussianModel(std::size_t n, double sigma, double a)
      : IdentityBallGeometry(n, a), sigma_(sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("tg: sigma must be > 0");
    radial_ = gaussian_radial_integral(static_cast<int>(n) - 1, a, sigma);
    k_ = unit_sphere_area(n) * radial_;
  }

  std::string name() const { return "tg"; }
  double sigma() const { return sigma_; }
  /// k_n, the reciprocal of the density at the centre.
  double normalization() const { return k_; }

  double pdf(const Vector& z, const Vector& x) const {
    const auto r = radius_inside(z, x);
    if (!r) return 0.0;
    return std::exp(-(*r) * (*r) / (2.0 * sigma_ * sigma_)) / k_;
  }

  std::optional<Vector> score(const Vector& z, const Vector& x) const {
    return (z - x) * (1.0 / (sigma_ * sigma_));
  }

  SymMatrix llf_hessian(const Vector&, const Vector&) const {
    return SymMatrix::scaled_identity(n_, -1.0 / (sigma_ * sigma_));
  }

  double max_density() const { return 1.0 / k_; }

  /// a^n e^{-a^2/2sigma^2} / (n int_0^a e^{-r^2/2sigma^2} r^{n-1} dr), the
  /// scalar of the Leibniz term.
  double boundary_factor() const {
    const double n = static_cast<double>(n_);
    return std::pow(a_, n) * std::exp(-a_ * a_ / (2.0 * sigma_ * sigma_)) / (n * radial_);
  }

  std::optional<ClosedFormSet> closed_form() const {
    const double s2 = sigma_ * sigma_;
    const double d = boundary_factor();
    const double cov = s2 * (1.0 - d);
    return ClosedFormSet{SymMatrix::scaled_identity(n_, cov / (s2 * s2)),
                         SymMatrix::scaled_identity(n_, d),
                         SymMatrix::scaled_identity(n_, 1.0 - d),
                         SymMatrix::scaled_identity(n_, s2 * s2 / cov),
                         SymMatrix::scaled_identity(n_, cov),
                         SymMatrix::scaled_identity(n_, cov),
                         true};
  }

 private:
  double sigma_;
  double radial_;
  double k_;
};

/// z = H x + w with w a unit-variance Gaussian truncated to the ball of
/// radius a in R^{n_z}; H is n_z x n_x with full column rank.
class LinearTgModel {
 public:
  LinearTgModel(Matrix h, double a) : h_(std::move(h)), a_(a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("linear_tg: a must be > 0");
    if (h_.rows() < h_.cols() || h_.cols() == 0) {
      throw RankDeficient("linear_tg: H must have at least as many rows as columns");
    }
    hth_ = SymMatrix(h_.transpose() * h_);
    const auto eig = eigenvalues(hth_);
    if (!(eig.front() > 1e-10 * eig.back())) {
      throw RankDeficient("linear_tg: H does not have full column rank");
    }
    hth_inv_ = invert(hth_);
    pinv_ = hth_inv_.matrix() * h_.transpose();
    const std::size_t nz = h_.rows();
    radial_ = gaussian_radial_integral(static_cast<int>(nz) - 1, a, 1.0);
    k_ = 1.0 / (unit_sphere_area(nz) * radial_);
  }

  /// The 3x2 observation matrix from six row-major entries.
  static LinearTgModel from_row_major(std::span<const double> h6, double a) {
    if (h6.size() != 6) throw ConfigError("linear_tg: H needs 6 row-major entries");
    Matrix h(3, 2);
    for (std::size_t i = 0; i < 6; ++i) h(i / 2, i % 2) = h6[i];
    return LinearTgModel(h, a);
  }

  std::string name() const { return "linear_tg"; }
  const Matrix& h() const { return h_; }
  const Matrix& pseudo_inverse() const { return pinv_; }
  /// Density coefficient (the density at the centre of the ball).
  double normalization() const { return k_; }

  std::size_t dim_x() const { return h_.cols(); }
  std::size_t dim_z() const { return h_.rows(); }
  double support_radius() const { return a_; }
  Vector support_center(const Vector& x) const {
    detail::require_dim(x, dim_x(), "support_center");
    return h_ * x;
  }
  Matrix observation_jacobian() const { return h_.transpose(); }
  Vector boundary_normal(const Vector& z, const Vector& x) const {
    Vector d = z - h_ * x;
    return d * (1.0 / norm(d));
  }
  Vector mle(const Vector& z) const {
    detail::require_dim(z, dim_z(), "mle");
    return pinv_ * z;
  }

  double pdf(const Vector& z, const Vector& x) const {
    detail::require_dim(z, dim_z(), "pdf");
    detail::require_dim(x, dim_x(), "pdf");
    const double r = norm(z - h_ * x);
    if (r > a_ * (1.0 + detail::kSupportSlack)) return 0.0;
    return k_ * std::exp(-r * r / 2.0);
  }

  std::optional<Vector> score(const Vector& z, const Vector& x) const {
    return h_.transpose() * (z - h_ * x);
  }

  SymMatrix llf_hessian(const Vector&, const Vector&) const { return hth_ * -1.0; }

  double max_density() const { return k_; }

  /// 1 - a^n e^{-a^2/2} / (n int_0^a e^{-r^2/2} r^{n-1} dr), n = n_z; for
  /// n_z = 3 this is 1 - (4 pi k / 3) a^3 e^{-a^2/2}.
  double efficiency_factor() const {
    const double n = static_cast<double>(dim_z());
    return 1.0 - std::pow(a_, n) * std::exp(-a_ * a_ / 2.0) / (n * radial_);
  }

  std::optional<ClosedFormSet> closed_form() const {
    const double c = efficiency_factor();
    const std::size_t nx = dim_x();
    return ClosedFormSet{hth_ * c,
                         SymMatrix::scaled_identity(nx, 1.0 - c),
                         SymMatrix::scaled_identity(nx, c),
                         hth_inv_ * (1.0 / c),
                         hth_inv_ * c,
                         hth_inv_ * c,
                         true};
  }

 private:
  Matrix h_;
  double a_;
  SymMatrix hth_;
  SymMatrix hth_inv_;
  Matrix pinv_;
  double radial_;
  double k_;
};

static_assert(LikelihoodModel<RfcModel>);
static_assert(LikelihoodModel<TruncLaplaceModel>);
static_assert(LikelihoodModel<TruncGaussianModel>);
static_assert(LikelihoodModel<LinearTgModel>);
static_assert(HasLlfHessian<TruncGaussianModel>);

using AnyModel = std::variant<RfcModel, TruncLaplaceModel, TruncGaussianModel, LinearTgModel>;

}  // namespace crllb
