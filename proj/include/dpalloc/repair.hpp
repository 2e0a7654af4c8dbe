//
// Copyright 2026 The dpalloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Noise-aware replacements for the standard assignment rules, for releases
// made with a Laplace mechanism of known scale.
//
//   * Posterior repair (coverage): estimate P(Covered | noisy counts) under a
//     flat prior on the non-negative decomposed counts and cover when the
//     estimate reaches a threshold p.
//   * Inflationary allocation (Title I): pad each district's weighted count
//     by Delta and shrink the total by Delta', so that with probability at
//     least 1 - delta no district receives less than its true share.
//
#ifndef DPALLOC_REPAIR_HPP_
#define DPALLOC_REPAIR_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpalloc/allocators.hpp"
#include "dpalloc/core_model.hpp"
#include "dpalloc/error.hpp"
#include "dpalloc/mechanisms.hpp"
#include "dpalloc/rng.hpp"

namespace dpalloc {

struct RepairParams {
  double p = 0.5;
  std::int64_t n_samples = 100;

  void Validate() const {
    if (!(p >= 0 && p <= 1)) {
      throw Error(ErrorCode::kDomainError, "p must lie in [0,1]");
    }
    if (n_samples < 1) {
      throw Error(ErrorCode::kDomainError, "n_samples must be >= 1");
    }
  }
};

// Rejection attempts allowed per requested posterior sample.
inline constexpr std::int64_t kRejectionCapFactor = 1000;

namespace internal {

// One draw of Laplace(center, scale) conditioned on being >= 0. For
// center <= 0 the conditional law is exactly Exponential(scale), which is
// sampled directly; otherwise draws are rejected until non-negative
// (acceptance probability >= 1/2).
template <UniformSource R>
double TruncatedLaplaceDraw(double center, double scale, R& rng,
                            std::int64_t& attempts, std::int64_t cap) {
  if (center <= 0) {
    ++attempts;
    return SampleExponential(scale, rng);
  }
  while (true) {
    if (++attempts > cap) {
      throw Error(ErrorCode::kSamplingExhausted,
                  "rejection sampler exceeded its attempt cap");
    }
    const double x = center + SampleLaplace(scale, rng);
    if (x >= 0) return x;
  }
}

}  // namespace internal

// Monte Carlo estimate of P(pred(true components)) where each component is
// independently Laplace(center_i, scale) restricted to [0, inf): the exact
// posterior under a flat prior on the non-negative orthant.
template <UniformSource R, typename Pred>
double PosteriorProbability(std::span<const double> centers, double scale,
                            std::int64_t n_samples, R& rng, Pred&& pred) {
  if (!(scale > 0)) {
    throw Error(ErrorCode::kNonPositiveScale, "posterior scale must be > 0");
  }
  if (n_samples < 1) {
    throw Error(ErrorCode::kDomainError, "n_samples must be >= 1");
  }
  const std::int64_t cap = kRejectionCapFactor * n_samples;
  std::int64_t attempts = 0;
  std::int64_t hits = 0;
  std::vector<double> draw(centers.size());
  for (std::int64_t s = 0; s < n_samples; ++s) {
    for (std::size_t i = 0; i < centers.size(); ++i) {
      draw[i] =
          internal::TruncatedLaplaceDraw(centers[i], scale, rng, attempts, cap);
    }
    if (pred(std::span<const double>(draw))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n_samples);
}

// Posterior probability that a jurisdiction released by DLaplace at `eps` is
// truly Covered.
template <UniformSource R>
double PosteriorCovered(const VraTriple& noisy, double eps,
                        std::int64_t n_samples, R& rng,
                        const VraThresholds& t = {}) {
  if (!(eps > 0)) throw Error(ErrorCode::kNonPositiveEpsilon, "");
  const VraComponents c = Decompose(noisy);
  const double centers[3] = {c.lit, c.lep_minus_lit, c.vac_minus_lep};
  return PosteriorProbability(
      centers, 1.0 / eps, n_samples, rng, [&](std::span<const double> q) {
        const VraTriple x = Recompose({q[0], q[1], q[2]});
        return VraClassify(x.vac, x.lep, x.lit, t) == CoverageLabel::kCovered;
      });
}

// Covered iff the posterior estimate is >= p (p = 0 always covers).
template <UniformSource R>
CoverageLabel RepairClassify(const VraTriple& noisy, double eps,
                             const RepairParams& params, R& rng,
                             const VraThresholds& t = {}) {
  params.Validate();
  const double post = PosteriorCovered(noisy, eps, params.n_samples, rng, t);
  return post >= params.p ? CoverageLabel::kCovered
                          : CoverageLabel::kNotCovered;
}

// Constant in front of ln(2k/delta) in the per-district slack.
enum class SlackConstant {
  kProof,  // Delta = 2 ln(2k/delta) / eps
  kBody,   // Delta = ln(2k/delta) / eps
};

struct Slacks {
  double delta_count;  // Delta
  double delta_total;  // Delta'
};

inline Slacks InflationSlacks(std::int64_t k, double eps, double delta,
                              SlackConstant constant = SlackConstant::kProof) {
  if (k < 1 || !(eps > 0) || !std::isfinite(eps) || !(delta > 0 && delta < 1)) {
    throw Error(ErrorCode::kDomainError,
                "slacks require k >= 1, eps > 0, delta in (0,1)");
  }
  const double kd = static_cast<double>(k);
  const double c = constant == SlackConstant::kProof ? 2.0 : 1.0;
  return {c * std::log(2.0 * kd / delta) / eps,
          kd * std::log(2.0 * kd * kd / delta) / eps};
}

struct InflationParams {
  std::int64_t k = 0;
  double epsilon = 0;
  double delta = 0;
  double delta_count = 0;  // Delta
  double delta_total = 0;  // Delta'
  // Sum of the inflated shares: the budget multiple this run requires.
  double budget_factor = 0;
};

struct InflationResult {
  Fractions allocation;  // unnormalised
  InflationParams params;
};

// M'(a) = (exp_a * eli~_a + Delta) / (sum_b exp_b * eli~_b - Delta').
inline InflationResult InflationaryAllocate(
    std::span<const double> noisy_eli, std::span<const double> exp, double eps,
    double delta, SlackConstant constant = SlackConstant::kProof) {
  if (noisy_eli.size() != exp.size()) {
    throw Error(ErrorCode::kLengthMismatch, "eli/exp lengths differ");
  }
  if (noisy_eli.empty()) throw Error(ErrorCode::kLengthZero, "no districts");
  const auto k = static_cast<std::int64_t>(noisy_eli.size());
  const Slacks s = InflationSlacks(k, eps, delta, constant);

  double weighted_total = 0;
  for (std::size_t a = 0; a < noisy_eli.size(); ++a) {
    weighted_total += exp[a] * noisy_eli[a];
  }
  const double denom = weighted_total - s.delta_total;
  if (!(denom > 0)) {
    throw Error(ErrorCode::kNonPositiveDenominator,
                "weighted total " + std::to_string(weighted_total) +
                    " does not exceed Delta' = " +
                    std::to_string(s.delta_total));
  }

  InflationResult r;
  r.params = {k, eps, delta, s.delta_count, s.delta_total, 0};
  r.allocation.resize(noisy_eli.size());
  for (std::size_t a = 0; a < noisy_eli.size(); ++a) {
    r.allocation[a] = (exp[a] * noisy_eli[a] + s.delta_count) / denom;
    r.params.budget_factor += r.allocation[a];
  }
  return r;
}

// True when every assignee receives at least its true share.
inline bool NoPenalty(std::span<const double> allocation,
                      std::span<const double> truth) {
  if (allocation.size() != truth.size()) {
    throw Error(ErrorCode::kLengthMismatch, "allocation/truth lengths");
  }
  for (std::size_t a = 0; a < truth.size(); ++a) {
    if (allocation[a] < truth[a]) return false;
  }
  return true;
}

}  // namespace dpalloc

#endif  // DPALLOC_REPAIR_HPP_
