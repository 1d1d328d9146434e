#pragma once

// FIM, Leibniz boundary term, L = I - D_L, CRLB, CRLLB = L^T J^-1 L and the
// collinearity (efficiency) diagnostic for models with ball support.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>

#include "crllb/errors.hpp"
#include "crllb/linalg.hpp"
#include "crllb/models.hpp"
#include "crllb/quadrature.hpp"
#include "crllb/sampling.hpp"

namespace crllb {

/// RFC quadrature is refused below this beta; L ~ beta and J ~ beta^2 vanish
/// individually and only their closed-form ratio is usable.
inline constexpr double kRfcMinQuadratureBeta = 1e-3;
inline constexpr double kCollinearityThreshold = 1e-6;
inline constexpr double kLeibnizZeroTol = 1e-8;

enum class Method { closed_form, quadrature };

inline const char* to_string(Method m) {
  return m == Method::closed_form ? "closed_form" : "quadrature";
}

/// Relative Frobenius differences between quadrature and closed form.
struct ClosedFormDeltas {
  double fim = 0.0;
  double leibniz = 0.0;
  double mle_cov = 0.0;
  double crllb = 0.0;

  double max() const { return std::max({fim, leibniz, mle_cov, crllb}); }
};

struct BoundReport {
  Vector x;
  SymMatrix fim;
  SymMatrix leibniz;
  SymMatrix l_matrix;
  std::optional<SymMatrix> crlb;
  bool crlb_valid = false;  // false when the Leibniz term is nonzero
  SymMatrix crllb;
  SymMatrix mle_cov;
  double collinearity_residual = 0.0;
  bool efficient = false;
  Method method = Method::quadrature;

  double mass = 1.0;                   // integral of the pdf
  Matrix l_interior;                   // E[gamma eps^T], equal to L by the identity
  double l_identity_residual = 0.0;    // ||E[gamma eps^T] - (I - D_L)||_F
  double leibniz_asymmetry = 0.0;      // ||D_L - D_L^T||_F before symmetrizing
  std::optional<ClosedFormDeltas> closed_form_deltas;
};

namespace detail {

/// Fixed-size tuple of doubles usable as an integrand value.
template <std::size_t N>
struct Sums {
  std::array<double, N> v{};
  Sums& operator*=(double s) {
    for (double& x : v) x *= s;
    return *this;
  }
  Sums& operator+=(const Sums& o) {
    for (std::size_t i = 0; i < N; ++i) v[i] += o.v[i];
    return *this;
  }
  bool all_finite() const {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  }
};

struct MomentsValue {
  double mass = 0.0;
  Matrix fim;
  Matrix cov;
  Matrix cross;  // gamma eps^T

  MomentsValue& operator*=(double s) {
    mass *= s;
    fim *= s;
    cov *= s;
    cross *= s;
    return *this;
  }
  MomentsValue& operator+=(const MomentsValue& o) {
    mass += o.mass;
    fim += o.fim;
    cov += o.cov;
    cross += o.cross;
    return *this;
  }
  bool all_finite() const {
    return std::isfinite(mass) && detail::all_finite(fim) && detail::all_finite(cov) &&
           detail::all_finite(cross);
  }
};

inline double relative_frobenius(const Matrix& a, const Matrix& ref) {
  const double scale = frobenius(ref);
  const double diff = frobenius(a - ref);
  return scale > 0.0 ? diff / scale : diff;
}

template <LikelihoodModel M>
QuadratureSpec spec_for(const M& model, const QuadratureSpec& spec) {
  return spec.with_dim(model.dim_z());
}

}  // namespace detail

/// Results of one pass over the support ball.
struct BallMoments {
  double mass = 0.0;
  SymMatrix fim;      // E[gamma gamma^T]
  SymMatrix mle_cov;  // E[eps eps^T]
  Matrix cross;       // E[gamma eps^T]
};

template <LikelihoodModel M>
BallMoments ball_moments(const M& model, const Vector& x, const QuadratureSpec& spec) {
  const std::size_t nx = model.dim_x();
  const Vector c = model.support_center(x);
  const detail::MomentsValue zero{0.0, Matrix(nx, nx), Matrix(nx, nx), Matrix(nx, nx)};
  auto value = integrate_ball(
      [&](const SphericalPoint& p) {
        detail::MomentsValue out = zero;
        const Vector z = c + p.cartesian();
        const double pdf = model.pdf(z, x);
        if (pdf == 0.0) return out;
        const Vector eps = model.mle(z) - x;
        out.mass = pdf;
        out.cov.add_outer(pdf, eps, eps);
        if (const auto g = model.score(z, x)) {
          out.fim.add_outer(pdf, *g, *g);
          out.cross.add_outer(pdf, *g, eps);
        }
        return out;
      },
      model.support_radius(), detail::spec_for(model, spec));
  return {value.mass, SymMatrix(value.fim), SymMatrix(value.cov), value.cross};
}

/// J(x) = E[gamma gamma^T] by ball quadrature.
template <LikelihoodModel M>
SymMatrix fim(const M& model, const Vector& x, const QuadratureSpec& spec = {}) {
  return ball_moments(model, x, spec).fim;
}

/// E[(mle - x)(mle - x)^T] by ball quadrature.
template <LikelihoodModel M>
SymMatrix mle_covariance(const M& model, const Vector& x, const QuadratureSpec& spec = {}) {
  return ball_moments(model, x, spec).mle_cov;
}

/// Integral of the pdf over its support.
template <LikelihoodModel M>
double normalization(const M& model, const Vector& x, const QuadratureSpec& spec = {}) {
  const Vector c = model.support_center(x);
  return integrate_ball([&](const SphericalPoint& p) { return model.pdf(c + p.cartesian(), x); },
                        model.support_radius(), detail::spec_for(model, spec));
}

/// D_L = surface integral of grad_x z^T n p (mle(z) - x)^T over the support
/// boundary. Returned unsymmetrized.
template <LikelihoodModel M>
Matrix leibniz_term(const M& model, const Vector& x, const QuadratureSpec& spec = {}) {
  const std::size_t nx = model.dim_x();
  const Vector c = model.support_center(x);
  const Matrix g = model.observation_jacobian();
  const Matrix zero(nx, nx);
  return integrate_boundary(
      [&](const SphericalPoint& p) {
        Matrix out = zero;
        const Vector z = c + p.cartesian();
        const double pdf = model.pdf(z, x);
        if (pdf == 0.0) return out;
        out.add_outer(pdf, g * model.boundary_normal(z, x), model.mle(z) - x);
        return out;
      },
      model.support_radius(), detail::spec_for(model, spec));
}

/// C = L^T J^-1 from the collinearity condition eps = C gamma.
inline Matrix collinearity_matrix(const SymMatrix& l, const SymMatrix& j) {
  return l.matrix().transpose() * invert(j).matrix();
}

/// E||eps - C gamma|| / E||eps|| by ball quadrature. With a singular J there
/// is no C; the residual is then that of C = 0, i.e. 1.
template <LikelihoodModel M>
double collinearity_residual(const M& model, const Vector& x, const SymMatrix& l,
                             const SymMatrix& j, const QuadratureSpec& spec = {}) {
  Matrix cm(model.dim_x(), model.dim_x());
  try {
    cm = collinearity_matrix(l, j);
  } catch (const SingularMatrix&) {
  }
  const Vector c = model.support_center(x);
  const auto sums = integrate_ball(
      [&](const SphericalPoint& p) {
        detail::Sums<2> out;
        const Vector z = c + p.cartesian();
        const double pdf = model.pdf(z, x);
        if (pdf == 0.0) return out;
        const auto g = model.score(z, x);
        if (!g) return out;
        const Vector eps = model.mle(z) - x;
        out.v = {pdf * norm(eps - cm * *g), pdf * norm(eps)};
        return out;
      },
      model.support_radius(), detail::spec_for(model, spec));
  return sums.v[0] / sums.v[1];
}

/// Monte Carlo version over a noise batch drawn from the model; draws where
/// the score is undefined are skipped.
template <LikelihoodModel M>
double collinearity_residual(const M& model, const Vector& x, const BoundReport& report,
                             const SampleBatch& batch) {
  Matrix cm(model.dim_x(), model.dim_x());
  try {
    cm = collinearity_matrix(report.l_matrix, report.fim);
  } catch (const SingularMatrix&) {
  }
  const Vector c = model.support_center(x);
  double num = 0.0;
  double den = 0.0;
  for (const Vector& w : batch.draws) {
    const Vector z = c + w;
    const auto g = model.score(z, x);
    if (!g) continue;
    const Vector eps = model.mle(z) - x;
    num += norm(eps - cm * *g);
    den += norm(eps);
  }
  if (!(den > 0.0)) throw TooFewSamples("collinearity_residual: empty batch");
  return num / den;
}

namespace detail {

template <LikelihoodModel M>
BoundReport closed_form_report(const M& model, const Vector& x, const ClosedFormSet& cf,
                               const QuadratureSpec& spec) {
  const std::size_t nx = model.dim_x();
  BoundReport r;
  r.x = x;
  r.fim = cf.fim;
  r.leibniz = cf.leibniz;
  r.l_matrix = cf.l_matrix;
  r.crlb = cf.crlb;
  r.crlb_valid = frobenius(cf.leibniz) <= kLeibnizZeroTol;
  r.crllb = cf.crllb;
  r.mle_cov = cf.mle_cov;
  r.method = Method::closed_form;
  r.l_interior = cf.l_matrix.matrix();
  r.l_identity_residual =
      frobenius(cf.l_matrix.matrix() - (Matrix::identity(nx) - cf.leibniz.matrix()));
  r.collinearity_residual = collinearity_residual(model, x, cf.l_matrix, cf.fim, spec);
  r.efficient = r.collinearity_residual < kCollinearityThreshold;
  return r;
}

}  // namespace detail

/// Full bound report. Method::closed_form uses the model's closed forms when
/// it has them and falls back to quadrature otherwise.
template <LikelihoodModel M>
BoundReport crllb(const M& model, const Vector& x, const QuadratureSpec& spec = {},
                  Method method = Method::quadrature) {
  detail::require_dim(x, model.dim_x(), "crllb");
  const auto cf = model.closed_form();
  if (cf && method == Method::closed_form) return detail::closed_form_report(model, x, *cf, spec);
  if constexpr (std::same_as<M, RfcModel>) {
    if (model.beta() < kRfcMinQuadratureBeta) {
      return detail::closed_form_report(model, x, *cf, spec);
    }
  }

  const std::size_t nx = model.dim_x();
  const Matrix identity = Matrix::identity(nx);
  const BallMoments mom = ball_moments(model, x, spec);
  const Matrix dl = leibniz_term(model, x, spec);

  BoundReport r;
  r.x = x;
  r.method = Method::quadrature;
  r.mass = mom.mass;
  r.fim = mom.fim;
  r.mle_cov = mom.mle_cov;
  r.leibniz = SymMatrix(dl);
  r.leibniz_asymmetry = frobenius(dl - dl.transpose());
  r.l_matrix = SymMatrix(identity - dl);
  r.l_interior = mom.cross;
  r.l_identity_residual = frobenius(mom.cross - (identity - dl));
  r.crlb_valid = frobenius(dl) <= kLeibnizZeroTol;

  try {
    const SymMatrix jinv = invert(r.fim);
    r.crlb = jinv;
    r.crllb = congruence(r.l_matrix, jinv);
  } catch (const SingularMatrix&) {
    if (!cf) {
      throw SingularFim(model.name() +
                        ": Fisher information is singular; no meaningful CRLB or CRLLB");
    }
    r.crllb = cf->crllb;
  }
  r.collinearity_residual = collinearity_residual(model, x, r.l_matrix, r.fim, spec);
  r.efficient = r.collinearity_residual < kCollinearityThreshold;

  if (cf) {
    r.closed_form_deltas = ClosedFormDeltas{
        detail::relative_frobenius(r.fim, cf->fim),
        detail::relative_frobenius(r.leibniz, cf->leibniz),
        detail::relative_frobenius(r.mle_cov, cf->mle_cov),
        detail::relative_frobenius(r.crllb, cf->crllb)};
  }
  return r;
}

struct CrlbResult {
  SymMatrix bound;
  bool valid_bound = false;
  double leibniz_norm = 0.0;
};

/// J^-1, flagged invalid as a bound when the Leibniz term does not vanish.
template <LikelihoodModel M>
CrlbResult crlb(const M& model, const Vector& x, const QuadratureSpec& spec = {}) {
  const SymMatrix j = fim(model, x, spec);
  const double dl = frobenius(leibniz_term(model, x, spec));
  try {
    return {invert(j), dl <= kLeibnizZeroTol, dl};
  } catch (const SingularMatrix&) {
    throw SingularFim(model.name() + ": Fisher information is singular; no CRLB exists");
  }
}

/// Bound for M i.i.d. measurements: the single-measurement CRLLB over M.
inline SymMatrix iid_scaled_bound(const BoundReport& report, int m) {
  if (m < 1) throw ConfigError("iid_scaled_bound: m must be >= 1");
  Matrix scaled = report.crllb.matrix();
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) /= static_cast<double>(m);
  return SymMatrix(scaled);
}

/// Scalar Leibniz term for support [l(x), u(x)]:
///   u'(x) p(u) (xhat(u) - x) - l'(x) p(l) (xhat(l) - x).
template <class L, class U, class DL, class DU, class P, class E>
double scalar_leibniz(L&& l, U&& u, DL&& dl, DU&& du, P&& pdf, E&& estimator, double x) {
  const double lo = l(x);
  const double hi = u(x);
  return du(x) * pdf(hi) * (estimator(hi) - x) - dl(x) * pdf(lo) * (estimator(lo) - x);
}

/// As above with l' and u' from central differences.
template <class L, class U, class P, class E>
double scalar_leibniz(L&& l, U&& u, P&& pdf, E&& estimator, double x) {
  const double h = 1e-4 * std::max(1.0, std::abs(x));
  auto deriv = [h](auto& f) {
    return [&f, h](double t) { return (f(t + h) - f(t - h)) / (2.0 * h); };
  };
  return scalar_leibniz(l, u, deriv(l), deriv(u), pdf, estimator, x);
}

/// Report for z = H x + w with the closed forms evaluated directly; the
/// quadrature Leibniz term is compared against (1 - c) I and the quadrature
/// MLE covariance against c (H^T H)^-1.
inline BoundReport linear_tg_bounds(const LinearTgModel& model, const Vector& x,
                                    const QuadratureSpec& spec = {}) {
  const auto cf = model.closed_form();
  BoundReport r = detail::closed_form_report(model, x, *cf, spec);
  const Matrix dl = leibniz_term(model, x, spec);
  const BallMoments mom = ball_moments(model, x, spec);
  r.mass = mom.mass;
  r.leibniz_asymmetry = frobenius(dl - dl.transpose());
  r.l_interior = mom.cross;
  r.l_identity_residual = frobenius(mom.cross - (Matrix::identity(model.dim_x()) - dl));
  r.closed_form_deltas = ClosedFormDeltas{
      detail::relative_frobenius(mom.fim, cf->fim),
      detail::relative_frobenius(dl, cf->leibniz),
      detail::relative_frobenius(mom.mle_cov, cf->mle_cov),
      detail::relative_frobenius(congruence(Matrix::identity(model.dim_x()) - dl,
                                            invert(mom.fim)),
                                 cf->crllb)};
  return r;
}

/// -E[Hessian of the log-likelihood], the alternative FIM form that is only
/// valid when the support does not depend on x.
template <HasLlfHessian M>
SymMatrix hessian_information(const M& model, const Vector& x, const QuadratureSpec& spec = {}) {
  const std::size_t nx = model.dim_x();
  const Vector c = model.support_center(x);
  const Matrix zero(nx, nx);
  const Matrix h = integrate_ball(
      [&](const SphericalPoint& p) {
        const Vector z = c + p.cartesian();
        const double pdf = model.pdf(z, x);
        if (pdf == 0.0) return zero;
        return model.llf_hessian(z, x).matrix() * (-pdf);
      },
      model.support_radius(), detail::spec_for(model, spec));
  return SymMatrix(h);
}

/// Bound check against a report's CRLLB.
template <LikelihoodModel M>
McVerdict verify_bound(const M& model, const Vector& x, const BoundReport& report,
                       std::uint64_t seed, std::size_t count) {
  return verify_bound(model, x, report.crllb, seed, count);
}

}  // namespace crllb
