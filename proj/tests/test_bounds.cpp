#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "crllb/bounds.hpp"
#include "crllb/identities.hpp"
#include "crllb/rng.hpp"
#include "oracles.hpp"

using namespace crllb;
using std::numbers::pi;

namespace {

const Vector kOrigin2(2, 0.0);

QuadratureSpec spec_for_n(std::size_t n) {
  QuadratureSpec s;
  s.dim = n;
  if (n >= 3) s.angular_nodes = 64;
  return s;
}

void expect_scaled_identity(const SymMatrix& m, double value, double tol,
                            const std::string& what = "") {
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j)
      EXPECT_NEAR(m(i, j), i == j ? value : 0.0, tol) << what << " (" << i << "," << j << ")";
}

double rel_frob(const SymMatrix& a, const SymMatrix& b) { return frobenius(a - b) / frobenius(b); }

/// Uniform noise on the unit disk with a zero score everywhere and no closed
/// form, so its FIM is the zero matrix.
class FlatDiskModel {
 public:
  std::string name() const { return "flat_disk"; }
  std::size_t dim_x() const { return 2; }
  std::size_t dim_z() const { return 2; }
  double support_radius() const { return 1.0; }
  Vector support_center(const Vector& x) const { return x; }
  Matrix observation_jacobian() const { return Matrix::identity(2); }
  double pdf(const Vector& z, const Vector& x) const {
    return norm(z - x) <= 1.0 + 1e-12 ? 1.0 / pi : 0.0;
  }
  std::optional<Vector> score(const Vector&, const Vector&) const { return Vector(2, 0.0); }
  Vector boundary_normal(const Vector& z, const Vector& x) const {
    const Vector d = z - x;
    return d * (1.0 / norm(d));
  }
  Vector mle(const Vector& z) const { return z; }
  double max_density() const { return 1.0 / pi; }
  std::optional<ClosedFormSet> closed_form() const { return std::nullopt; }
};

static_assert(LikelihoodModel<FlatDiskModel>);

}  // namespace

TEST(Fim, LaplaceIsHalfAlphaSquared) {
  const SymMatrix j = fim(TruncLaplaceModel(2.0, 3.0), kOrigin2);
  EXPECT_LT(rel_frob(j, SymMatrix::scaled_identity(2, 2.0)), 1e-6);
}

TEST(Fim, RfcBetaZeroIsZero) {
  const SymMatrix j = fim(RfcModel(0.0), kOrigin2);
  EXPECT_EQ(frobenius(j), 0.0);
}

TEST(Fim, RfcMatchesOneDimensionalOracle) {
  for (double b : {0.25, 0.5, 0.75, 1.0}) {
    const SymMatrix j = fim(RfcModel(b), kOrigin2);
    expect_scaled_identity(j, oracle::rfc_fim(b), 1e-9 * oracle::rfc_fim(b), "beta");
  }
}

TEST(LeibnizTerm, RfcClosedForm) {
  for (double b : {0.0, 0.25, 0.5, 0.75}) {
    const SymMatrix d(leibniz_term(RfcModel(b), kOrigin2));
    expect_scaled_identity(d, oracle::rfc_leibniz(b), 1e-10);
  }
  EXPECT_EQ(frobenius(leibniz_term(RfcModel(1.0), kOrigin2)), 0.0);
}

TEST(LeibnizTerm, LaplaceClosedForm) {
  for (double alpha : {0.5, 1.0, 2.0}) {
    for (double a : {0.5, 1.0, 3.0}) {
      const SymMatrix d(leibniz_term(TruncLaplaceModel(alpha, a), kOrigin2));
      expect_scaled_identity(d, oracle::laplace_leibniz(alpha, a), 1e-10);
    }
  }
}

TEST(LeibnizTerm, AgreesWithContourAndSurfaceForms) {
  const Vector x{0.3, -1.2};
  const RfcModel rfc(0.4);
  EXPECT_LT(frobenius(leibniz_term(rfc, x) - planar_leibniz(rfc, x)), 1e-10);
  const TruncGaussianModel tg3(3, 0.9, 1.2);
  const Vector x3{0.1, 0.2, 0.3};
  EXPECT_LT(frobenius(leibniz_term(tg3, x3, spec_for_n(3)) - surface_leibniz(tg3, x3)), 1e-10);
}

TEST(Crllb, RfcBetaZero) {
  const BoundReport r = crllb::crllb(RfcModel(0.0), kOrigin2);
  EXPECT_EQ(r.method, Method::closed_form);
  expect_scaled_identity(r.crllb, 1.4147, 1e-4);
  expect_scaled_identity(r.crllb, oracle::rfc_crllb(0.0), 1e-9);
  expect_scaled_identity(r.mle_cov, pi * pi / 4.0, 1e-12);
  EXPECT_FALSE(r.crlb.has_value());
  EXPECT_FALSE(r.crlb_valid);
}

TEST(Crllb, RfcSmallBetaRedirectsToClosedForm) {
  const BoundReport r = crllb::crllb(RfcModel(5e-4), kOrigin2);
  EXPECT_EQ(r.method, Method::closed_form);
  expect_scaled_identity(r.crllb, oracle::rfc_crllb(5e-4), 1e-9);
  const BoundReport q = crllb::crllb(RfcModel(2e-3), kOrigin2);
  EXPECT_EQ(q.method, Method::quadrature);
}

TEST(Crllb, RfcQuadratureMatchesOracle) {
  for (double b : {0.25, 0.5, 0.75, 1.0}) {
    const BoundReport r = crllb::crllb(RfcModel(b), kOrigin2);
    expect_scaled_identity(r.crllb, oracle::rfc_crllb(b), 1e-8);
    expect_scaled_identity(r.mle_cov, oracle::rfc_cov(b), 1e-10);
    EXPECT_TRUE(loewner_geq(r.mle_cov, r.crllb, 1e-8));
  }
}

TEST(Crllb, TruncGaussianIsEfficient) {
  for (std::size_t n : {2u, 3u}) {
    const TruncGaussianModel m(n, 1.0, 1.0);
    const BoundReport r = crllb::crllb(m, Vector(n, 0.0), spec_for_n(n));
    EXPECT_LT(rel_frob(r.crllb, r.mle_cov), 1e-6);
    EXPECT_TRUE(r.efficient);
    EXPECT_LT(r.collinearity_residual, 1e-6);
    const double cov = oracle::tg_cov(static_cast<int>(n), 1.0, 1.0);
    expect_scaled_identity(r.mle_cov, cov, 1e-10);
  }
  const BoundReport r2 = crllb::crllb(TruncGaussianModel(2, 1.0, 1.0), kOrigin2);
  expect_scaled_identity(r2.mle_cov, 0.22925, 1e-5);
}

TEST(Crllb, LaplaceLargeRadiusLimits) {
  const double alpha = 1.0;
  const BoundReport r = crllb::crllb(TruncLaplaceModel(alpha, 20.0), kOrigin2);
  // the slowest-decaying remainder is of order (a alpha)^3 e^{-a alpha} ~ 2e-5
  expect_scaled_identity(r.crllb, 2.0 / (alpha * alpha), 1e-5);
  expect_scaled_identity(r.mle_cov, 3.0 / (alpha * alpha), 1e-5);
  expect_scaled_identity(r.crllb, oracle::laplace_crllb(alpha, 20.0), 1e-12);
  EXPECT_FALSE(r.efficient);
}

TEST(Crllb, LaplaceClosedFormsOverGrid) {
  for (double t : {0.5, 1.0, 2.0, 5.0, 20.0}) {
    for (double alpha : {0.5, 2.0}) {
      const double a = t / alpha;
      const BoundReport r = crllb::crllb(TruncLaplaceModel(alpha, a), kOrigin2);
      const double ref_bound = oracle::laplace_crllb(alpha, a);
      const double ref_cov = oracle::laplace_cov(alpha, a);
      expect_scaled_identity(r.crllb, ref_bound, 1e-8 * ref_bound);
      expect_scaled_identity(r.mle_cov, ref_cov, 1e-8 * ref_cov);
    }
  }
}

TEST(Crllb, SingularFimWithoutClosedFormThrows) {
  EXPECT_THROW(crllb::crllb(FlatDiskModel{}, kOrigin2), SingularFim);
  EXPECT_THROW(crlb(FlatDiskModel{}, kOrigin2), SingularFim);
}

TEST(Crllb, DimensionMismatchThrows) {
  EXPECT_THROW(crllb::crllb(RfcModel(0.5), Vector(3, 0.0)), DimMismatch);
}

TEST(Crlb, ExamplesAndValidity) {
  const CrlbResult lap = crlb(TruncLaplaceModel(2.0, 3.0), kOrigin2);
  expect_scaled_identity(lap.bound, 0.5, 1e-6);
  EXPECT_FALSE(lap.valid_bound);
  EXPECT_GT(lap.leibniz_norm, kLeibnizZeroTol);

  const CrlbResult tg = crlb(TruncGaussianModel(2, 1.0, 40.0), kOrigin2);
  expect_scaled_identity(tg.bound, 1.0, 1e-8);
  EXPECT_TRUE(tg.valid_bound);

  const CrlbResult rfc = crlb(RfcModel(0.5), kOrigin2);
  expect_scaled_identity(rfc.bound, 1.0 / oracle::rfc_fim(0.5), 1e-8);
}

TEST(MleCovariance, Examples) {
  expect_scaled_identity(mle_covariance(RfcModel(0.0), kOrigin2), 2.4674, 1e-4);
  const double pi2 = pi * pi;
  expect_scaled_identity(mle_covariance(RfcModel(1.0), kOrigin2),
                         (pi2 * pi2 / 4.0 + 12.0 - 3.0 * pi2) / (pi2 - 4.0), 1e-10);
  expect_scaled_identity(mle_covariance(TruncGaussianModel(2, 1.0, 1.0), kOrigin2), 0.229253,
                         1e-6);
}

TEST(Collinearity, EfficiencyDichotomy) {
  const TruncGaussianModel tg(2, 0.8, 1.3);
  const BoundReport rt = crllb::crllb(tg, kOrigin2);
  EXPECT_LT(collinearity_residual(tg, kOrigin2, rt.l_matrix, rt.fim), 1e-6);
  const BoundReport lap = crllb::crllb(TruncLaplaceModel(1.0, 2.0), kOrigin2);
  EXPECT_GT(lap.collinearity_residual, 1e-2);
  EXPECT_FALSE(lap.efficient);
  const BoundReport rfc = crllb::crllb(RfcModel(0.5), kOrigin2);
  EXPECT_GT(rfc.collinearity_residual, 1e-2);
  EXPECT_FALSE(rfc.efficient);
}

TEST(Collinearity, MonteCarloResidual) {
  const TruncGaussianModel tg(2, 1.0, 1.0);
  const BoundReport rt = crllb::crllb(tg, kOrigin2);
  EXPECT_LT(collinearity_residual(tg, kOrigin2, rt, sample_noise(tg, 3, 5000)), 1e-6);
  const TruncLaplaceModel lap(1.0, 2.0);
  const BoundReport rl = crllb::crllb(lap, kOrigin2);
  EXPECT_GT(collinearity_residual(lap, kOrigin2, rl, sample_noise(lap, 3, 5000)), 1e-2);
}

TEST(CollinearityMatrix, IsLTransposeJInverse) {
  const SymMatrix l{{0.5, 0.1}, {0.1, 0.4}};
  const SymMatrix j{{2.0, 0.3}, {0.3, 1.0}};
  const Matrix c = collinearity_matrix(l, j);
  const Matrix ref = l.matrix().transpose() * invert(j).matrix();
  EXPECT_LT(frobenius(c - ref), 1e-15);
}

TEST(IidScaledBound, Examples) {
  const BoundReport tg = crllb::crllb(TruncGaussianModel(2, 1.0, 1.0), kOrigin2);
  EXPECT_EQ(iid_scaled_bound(tg, 1), tg.crllb);
  const SymMatrix q = iid_scaled_bound(tg, 4);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(q(i, j), tg.crllb(i, j) / 4.0);
  const BoundReport rfc = crllb::crllb(RfcModel(0.0), kOrigin2);
  expect_scaled_identity(iid_scaled_bound(rfc, 10), 0.14147, 1e-5);
  EXPECT_THROW(iid_scaled_bound(rfc, 0), ConfigError);
}

TEST(IidScaling, ProductFimIsTwiceSingle) {
  // two i.i.d. 1-D truncated Gaussian observations of a scalar x; the
  // product support is a square, integrated with nested Simpson rules
  const double s = 0.8;
  const double a = 1.1;
  const double k = oracle::tg_normalizer_1d(s, a);
  auto p = [&](double w) { return std::exp(-w * w / (2.0 * s * s)) / k; };
  const double product = oracle::simpson(
      [&](double w1) {
        return oracle::simpson(
            [&](double w2) {
              const double g = (w1 + w2) / (s * s);
              return g * g * p(w1) * p(w2);
            },
            -a, a, 400);
      },
      -a, a, 400);
  const TruncGaussianModel single(1, s, a);
  const double j1 = fim(single, Vector(1, 0.0))(0, 0);
  EXPECT_NEAR(product / (2.0 * j1), 1.0, 1e-6);
}

TEST(ScalarLeibniz, FixedSupportVanishes) {
  auto lo = [](double) { return -1.0; };
  auto hi = [](double) { return 1.0; };
  auto pdf = [](double) { return 0.5; };
  auto est = [](double z) { return z; };
  EXPECT_EQ(scalar_leibniz(lo, hi, pdf, est, 0.3), 0.0);
}

TEST(ScalarLeibniz, UniformShiftGivesOne) {
  const double a = 0.7;
  auto lo = [a](double x) { return x - a; };
  auto hi = [a](double x) { return x + a; };
  auto pdf = [a](double) { return 1.0 / (2.0 * a); };
  auto est = [](double z) { return z; };
  const double d = scalar_leibniz(lo, hi, pdf, est, 1.3);
  EXPECT_NEAR(d, 1.0, 1e-9);
  EXPECT_NEAR(1.0 - d, 0.0, 1e-9);
}

TEST(ScalarLeibniz, TruncGaussianMatchesBoundaryIntegrator) {
  for (double s : {0.5, 1.0, 2.0}) {
    for (double a : {0.5, 1.0, 2.0}) {
      const double x = 0.4;
      const double k = oracle::tg_normalizer_1d(s, a);
      auto lo = [a](double t) { return t - a; };
      auto hi = [a](double t) { return t + a; };
      auto pdf = [&](double z) { return std::exp(-(z - x) * (z - x) / (2.0 * s * s)) / k; };
      auto est = [](double z) { return z; };
      const double scalar = scalar_leibniz(lo, hi, pdf, est, x);
      const double expected = 2.0 * a * std::exp(-a * a / (2.0 * s * s)) / k;
      EXPECT_NEAR(scalar, expected, 1e-9);
      const Matrix general = leibniz_term(TruncGaussianModel(1, s, a), Vector(1, x));
      EXPECT_NEAR(scalar, general(0, 0), 1e-9);
    }
  }
}

TEST(LinearTgBounds, CanonicalH) {
  const auto m = LinearTgModel::from_row_major(std::vector<double>{1, 0, 0, 1, 0, 0}, 2.0);
  const BoundReport r = linear_tg_bounds(m, kOrigin2, spec_for_n(3));
  const double c = oracle::linear_tg_factor(2.0);
  expect_scaled_identity(r.crllb, c, 1e-10);
  expect_scaled_identity(r.mle_cov, c, 1e-10);
  ASSERT_TRUE(r.closed_form_deltas);
  EXPECT_LT(r.closed_form_deltas->max(), 1e-6);
  EXPECT_TRUE(r.efficient);
}

TEST(LinearTgBounds, LargeRadiusApproachesClassicalBound) {
  const std::vector<double> h{1, 0.5, 0, 1, 2, -1};
  const auto m = LinearTgModel::from_row_major(h, 12.0);
  const BoundReport r = linear_tg_bounds(m, kOrigin2, spec_for_n(3));
  const SymMatrix classical = invert(SymMatrix(m.h().transpose() * m.h()));
  EXPECT_LT(rel_frob(r.crllb, classical), 1e-10);
}

TEST(LinearTgBounds, RandomHMatchesQuadratureAndMonteCarlo) {
  Xoshiro256 rng(2024);
  std::vector<double> h(6);
  for (double& v : h) v = rng.normal();
  const auto m = LinearTgModel::from_row_major(h, 1.5);
  const Vector x{0.25, -0.5};
  const BoundReport r = linear_tg_bounds(m, x, spec_for_n(3));
  ASSERT_TRUE(r.closed_form_deltas);
  EXPECT_LT(r.closed_form_deltas->max(), 1e-6);
  const BoundReport q = crllb::crllb(m, x, spec_for_n(3));
  EXPECT_LT(rel_frob(q.crllb, r.crllb), 1e-6);
  EXPECT_LT(rel_frob(q.mle_cov, r.mle_cov), 1e-6);
  EXPECT_TRUE(q.efficient);
  const McVerdict v = compare_covariance(estimate_errors(m, x, 99, 100000), r.mle_cov);
  EXPECT_TRUE(v.pass) << v.componentwise_z_scores;
}

TEST(Invariants, LIdentityHoldsUnderQuadrature) {
  EXPECT_LT(crllb::crllb(RfcModel(0.5), kOrigin2).l_identity_residual, 1e-10);
  EXPECT_LT(crllb::crllb(TruncLaplaceModel(1.0, 2.0), kOrigin2).l_identity_residual, 1e-10);
  EXPECT_LT(crllb::crllb(TruncGaussianModel(2, 0.7, 1.5), kOrigin2).l_identity_residual, 1e-10);
  EXPECT_LT(crllb::crllb(TruncGaussianModel(3, 1.0, 1.0), Vector(3, 0.0), spec_for_n(3))
                .l_identity_residual,
            1e-10);
  const auto m = LinearTgModel::from_row_major(std::vector<double>{1, 0.5, 0, 1, 2, -1}, 1.5);
  EXPECT_LT(crllb::crllb(m, kOrigin2, spec_for_n(3)).l_identity_residual, 1e-10);
}

TEST(Invariants, RemarkOneAtRfcBetaOne) {
  const BoundReport r = crllb::crllb(RfcModel(1.0), kOrigin2);
  EXPECT_LT(frobenius(r.leibniz), 1e-10);
  EXPECT_TRUE(r.crlb_valid);
  ASSERT_TRUE(r.crlb);
  EXPECT_LT(frobenius(r.crllb - *r.crlb), 1e-8);
}

TEST(Invariants, ClosedFormAgreesWithQuadrature) {
  for (double b : {0.25, 0.5, 0.75, 1.0}) {
    const auto d = crllb::crllb(RfcModel(b), kOrigin2).closed_form_deltas;
    ASSERT_TRUE(d);
    EXPECT_LT(d->max(), 1e-6) << "beta " << b;
  }
  for (double t : {0.5, 1.0, 2.0, 5.0}) {
    const auto d = crllb::crllb(TruncLaplaceModel(1.0, t), kOrigin2).closed_form_deltas;
    ASSERT_TRUE(d);
    EXPECT_LT(d->max(), 1e-6) << "a alpha " << t;
  }
  for (std::size_t n : {2u, 3u}) {
    const auto d = crllb::crllb(TruncGaussianModel(n, 0.5, 1.0), Vector(n, 0.0), spec_for_n(n))
                       .closed_form_deltas;
    ASSERT_TRUE(d);
    EXPECT_LT(d->max(), 1e-6) << "n " << n;
  }
}

TEST(Invariants, ReportsDoNotDependOnX) {
  const Vector t{3.7, -12.5};
  const BoundReport a = crllb::crllb(TruncLaplaceModel(1.2, 1.5), kOrigin2);
  const BoundReport b = crllb::crllb(TruncLaplaceModel(1.2, 1.5), t);
  EXPECT_LT(frobenius(a.fim - b.fim), 1e-10);
  EXPECT_LT(frobenius(a.leibniz - b.leibniz), 1e-10);
  EXPECT_LT(frobenius(a.crllb - b.crllb), 1e-10);
  EXPECT_LT(frobenius(a.mle_cov - b.mle_cov), 1e-10);
}

TEST(Invariants, RadialModelsAreIsotropic) {
  const Vector x{0.4, 0.9};
  for (const BoundReport& r : {crllb::crllb(RfcModel(0.6), x), crllb::crllb(TruncLaplaceModel(2.0, 1.0), x),
                               crllb::crllb(TruncGaussianModel(2, 1.5, 0.7), x)}) {
    for (const SymMatrix* m : {&r.fim, &r.leibniz, &r.l_matrix, &r.crllb, &r.mle_cov}) {
      EXPECT_NEAR((*m)(0, 1), 0.0, 1e-9);
      EXPECT_NEAR((*m)(0, 0), (*m)(1, 1), 1e-9 * std::max(1.0, std::abs((*m)(0, 0))));
    }
  }
}

TEST(Invariants, BoundValidityAcrossModels) {
  for (double b : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const BoundReport r = crllb::crllb(RfcModel(b), kOrigin2);
    EXPECT_TRUE(loewner_geq(r.mle_cov, r.crllb, 1e-8)) << "beta " << b;
  }
  for (double t : {0.5, 1.0, 2.0, 5.0}) {
    const BoundReport r = crllb::crllb(TruncLaplaceModel(1.0, t), kOrigin2);
    EXPECT_TRUE(loewner_geq(r.mle_cov, r.crllb, 1e-8)) << "a alpha " << t;
  }
}

TEST(Invariants, HessianFormBreaksDownForTruncatedGaussian) {
  const TruncGaussianModel m(2, 1.0, 1.0);
  const SymMatrix h = hessian_information(m, kOrigin2);
  const SymMatrix j = fim(m, kOrigin2);
  expect_scaled_identity(h, 1.0, 1e-9);
  EXPECT_GT(frobenius(h - j), 10.0 * 1e-6);
  EXPECT_GT(frobenius(h - j), 1.0);
}

TEST(Invariants, ClosedFormMethodSelection) {
  const BoundReport c = crllb::crllb(TruncGaussianModel(2, 1.0, 1.0), kOrigin2, {}, Method::closed_form);
  EXPECT_EQ(c.method, Method::closed_form);
  EXPECT_FALSE(c.closed_form_deltas.has_value());
  const BoundReport q = crllb::crllb(TruncGaussianModel(2, 1.0, 1.0), kOrigin2);
  EXPECT_EQ(q.method, Method::quadrature);
  EXPECT_LT(rel_frob(c.crllb, q.crllb), 1e-9);
}
