#pragma once

// Seeded Monte Carlo: rejection sampling of the noise, mergeable moment
// accumulation of estimator errors and covariance verdicts with 5-SE bands.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "crllb/errors.hpp"
#include "crllb/linalg.hpp"
#include "crllb/models.hpp"
#include "crllb/rng.hpp"

namespace crllb {

inline constexpr double kSeBand = 5.0;
inline constexpr std::size_t kMinEstimationCount = 1000;

struct SampleBatch {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::vector<Vector> draws;  // noise realizations w = z - f(x)
  double accepted_ratio = 0.0;
};

namespace detail {

/// Rejection sampler for p_w against the uniform-ball envelope max_density.
template <LikelihoodModel M>
class NoiseSampler {
 public:
  NoiseSampler(const M& model, std::uint64_t seed, std::uint64_t stream)
      : model_(model),
        rng_(seed, stream),
        x0_(model.dim_x(), 0.0),
        c0_(model.support_center(x0_)),
        bound_(model.max_density()) {}

  Vector next() {
    const std::size_t n = model_.dim_z();
    const double a = model_.support_radius();
    for (;;) {
      Vector w = rng_.uniform_in_ball(n, a);
      ++proposed_;
      const double p = model_.pdf(c0_ + w, x0_);
      if (p > bound_ * (1.0 + 1e-12)) {
        throw EnvelopeError(model_.name() + ": density " + std::to_string(p) +
                            " exceeds declared maximum " + std::to_string(bound_));
      }
      if (rng_.uniform() * bound_ < p) {
        ++accepted_;
        return w;
      }
    }
  }

  double accepted_ratio() const {
    return proposed_ ? static_cast<double>(accepted_) / static_cast<double>(proposed_) : 0.0;
  }

 private:
  const M& model_;
  Xoshiro256 rng_;
  Vector x0_;
  Vector c0_;
  double bound_;
  std::size_t proposed_ = 0;
  std::size_t accepted_ = 0;
};

}  // namespace detail

/// count i.i.d. noise draws; deterministic in (seed, stream).
template <LikelihoodModel M>
SampleBatch sample_noise(const M& model, std::uint64_t seed, std::size_t count,
                         std::uint64_t stream = 0) {
  if (count < 1) throw ConfigError("sample_noise: count must be >= 1");
  detail::NoiseSampler<M> sampler(model, seed, stream);
  SampleBatch batch{seed, count, {}, 0.0};
  batch.draws.reserve(count);
  for (std::size_t i = 0; i < count; ++i) batch.draws.push_back(sampler.next());
  batch.accepted_ratio = sampler.accepted_ratio();
  return batch;
}

/// Raw moment sums of error vectors e: sum e_i, sum e_i e_j and
/// sum (e_i e_j)^2. Merging adds the sums, so results do not depend on how
/// a run is split into streams (up to summation order).
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  explicit MomentAccumulator(std::size_t dim)
      : dim_(dim), s_(dim), sij_(dim, dim), qij_(dim, dim) {}

  void add(const Vector& e) {
    if (e.size() != dim_) throw DimMismatch("MomentAccumulator: dimension mismatch");
    ++n_;
    s_ += e;
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) {
        const double p = e[i] * e[j];
        sij_(i, j) += p;
        qij_(i, j) += p * p;
      }
  }

  void merge(const MomentAccumulator& o) {
    if (o.dim_ != dim_) throw DimMismatch("MomentAccumulator: dimension mismatch");
    n_ += o.n_;
    s_ += o.s_;
    sij_ += o.sij_;
    qij_ += o.qij_;
  }

  std::size_t count() const { return n_; }
  std::size_t dim() const { return dim_; }

  Vector mean() const {
    require_samples(1);
    return s_ * (1.0 / static_cast<double>(n_));
  }

  /// Standard error of each mean component.
  Vector mean_std_error() const {
    require_samples(2);
    const SymMatrix c = covariance();
    Vector se(dim_);
    for (std::size_t i = 0; i < dim_; ++i) se[i] = std::sqrt(c(i, i) / static_cast<double>(n_));
    return se;
  }

  /// Unbiased sample covariance.
  SymMatrix covariance() const {
    require_samples(2);
    const double n = static_cast<double>(n_);
    Matrix c(dim_, dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) {
        c(i, j) = (sij_(i, j) - s_[i] * s_[j] / n) / (n - 1.0);
      }
    return SymMatrix(c);
  }

  /// Fourth-moment plug-in standard error of each covariance entry,
  /// sqrt((mean((e_i e_j)^2) - mean(e_i e_j)^2) / N).
  Matrix covariance_std_error() const {
    require_samples(2);
    const double n = static_cast<double>(n_);
    Matrix se(dim_, dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) {
        const double m2 = sij_(i, j) / n;
        se(i, j) = std::sqrt(std::max(0.0, qij_(i, j) / n - m2 * m2) / n);
      }
    return se;
  }

 private:
  void require_samples(std::size_t k) const {
    if (n_ < k) throw TooFewSamples("MomentAccumulator: not enough samples");
  }

  std::size_t dim_ = 0;
  std::size_t n_ = 0;
  Vector s_;
  Matrix sij_;
  Matrix qij_;
};

/// Streams count draws and accumulates the MLE error mle(z) - x.
template <LikelihoodModel M>
MomentAccumulator estimate_errors(const M& model, const Vector& x, std::uint64_t seed,
                                  std::size_t count, std::uint64_t stream = 0) {
  if (count < 2) throw TooFewSamples("estimate_errors: count must be >= 2");
  detail::NoiseSampler<M> sampler(model, seed, stream);
  const Vector c = model.support_center(x);
  MomentAccumulator acc(model.dim_x());
  for (std::size_t i = 0; i < count; ++i) acc.add(model.mle(c + sampler.next()) - x);
  return acc;
}

template <LikelihoodModel M>
SymMatrix empirical_covariance(const M& model, const Vector& x, std::uint64_t seed,
                               std::size_t count) {
  if (count < kMinEstimationCount) {
    throw TooFewSamples("empirical_covariance: count must be >= 1000");
  }
  return estimate_errors(model, x, seed, count).covariance();
}

struct McVerdict {
  SymMatrix empirical_cov;
  SymMatrix target;
  Matrix componentwise_z_scores;
  bool pass = false;
  double std_error_scale = 0.0;  // largest componentwise SE
  double min_eigen_gap = 0.0;    // min eigenvalue of empirical_cov - target
};

namespace detail {

inline McVerdict make_verdict(const MomentAccumulator& acc, const SymMatrix& target) {
  if (target.dim() != acc.dim()) throw DimMismatch("verdict: dimension mismatch");
  McVerdict v{acc.covariance(), target, Matrix(acc.dim(), acc.dim()), false, 0.0, 0.0};
  const Matrix se = acc.covariance_std_error();
  for (std::size_t i = 0; i < acc.dim(); ++i)
    for (std::size_t j = 0; j < acc.dim(); ++j) {
      v.std_error_scale = std::max(v.std_error_scale, se(i, j));
      const double diff = v.empirical_cov(i, j) - target(i, j);
      v.componentwise_z_scores(i, j) = se(i, j) > 0.0 ? diff / se(i, j)
                                       : diff == 0.0  ? 0.0
                                                      : std::copysign(HUGE_VAL, diff);
    }
  v.min_eigen_gap = min_eigenvalue(v.empirical_cov - target);
  return v;
}

}  // namespace detail

/// Equality check: pass iff every |z| <= 5.
inline McVerdict compare_covariance(const MomentAccumulator& acc, const SymMatrix& target) {
  McVerdict v = detail::make_verdict(acc, target);
  v.pass = true;
  for (std::size_t i = 0; i < acc.dim(); ++i)
    for (std::size_t j = 0; j < acc.dim(); ++j)
      if (!(std::abs(v.componentwise_z_scores(i, j)) <= kSeBand)) v.pass = false;
  return v;
}

/// Bound check: pass iff min_eigenvalue(empirical_cov - bound) >= -5 SE,
/// with SE the largest componentwise standard error.
inline McVerdict check_bound(const MomentAccumulator& acc, const SymMatrix& bound) {
  McVerdict v = detail::make_verdict(acc, bound);
  v.pass = v.min_eigen_gap >= -kSeBand * v.std_error_scale;
  return v;
}

template <LikelihoodModel M>
McVerdict verify_bound(const M& model, const Vector& x, const SymMatrix& bound,
                       std::uint64_t seed, std::size_t count) {
  if (count < kMinEstimationCount) throw TooFewSamples("verify_bound: count must be >= 1000");
  return check_bound(estimate_errors(model, x, seed, count), bound);
}

/// Mean error within 5 SE of zero in every component.
inline bool unbiased_within_band(const MomentAccumulator& acc) {
  const Vector m = acc.mean();
  const Vector se = acc.mean_std_error();
  for (std::size_t i = 0; i < acc.dim(); ++i)
    if (!(std::abs(m[i]) <= kSeBand * se[i])) return false;
  return true;
}

}  // namespace crllb
