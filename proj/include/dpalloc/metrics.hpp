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
// Disparity measures over Monte Carlo ensembles of outcomes.
//
// Every per-assignee mean is summed over the sorted trial values, so all
// ensemble metrics are bit-for-bit invariant under reordering of trials.
//
#ifndef DPALLOC_METRICS_HPP_
#define DPALLOC_METRICS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpalloc/allocators.hpp"
#include "dpalloc/core_model.hpp"
#include "dpalloc/error.hpp"

namespace dpalloc {

namespace metric_names {
inline constexpr const char* kClassRate = "class_rate";
inline constexpr const char* kMultErr = "mult_err";
inline constexpr const char* kMisalloc = "misalloc";
inline constexpr const char* kMaxMult = "max_mult";
inline constexpr const char* kAvgExpDev = "avg_exp_dev";
inline constexpr const char* kInversions = "inversions";
inline constexpr const char* kDistThresh = "dist_thresh";
}  // namespace metric_names

namespace internal {

inline double OrderFreeMean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double s = 0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

inline void CheckEnsemble(const TrialEnsemble& ens, std::size_t n_assignees) {
  if (ens.n_trials() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "ensemble has no trials");
  }
  if (ens[0].size() != n_assignees) {
    throw Error(ErrorCode::kShapeMismatch,
                "ensemble has " + std::to_string(ens[0].size()) +
                    " assignees, reference has " +
                    std::to_string(n_assignees));
  }
}

inline void CheckTruth(const TrialEnsemble& ens, const OutcomeVector& truth) {
  CheckEnsemble(ens, truth.size());
  if (ens.assignees() != truth.assignees) {
    throw Error(ErrorCode::kShapeMismatch, "assignee ordering differs");
  }
}

}  // namespace internal

// Per-assignee mean outcome. Labels average as Covered = 1.
inline std::vector<double> EnsembleMeans(const TrialEnsemble& ens) {
  if (ens.n_trials() == 0) return {};
  const std::size_t n = ens[0].size();
  std::vector<double> means(n);
  std::vector<double> column(ens.n_trials());
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t t = 0; t < ens.n_trials(); ++t) {
      column[t] = std::visit(
          [a](const auto& v) { return static_cast<double>(v[a]); },
          ens[t].outcomes);
    }
    means[a] = internal::OrderFreeMean(column);
  }
  return means;
}

struct ClassificationRateReport {
  std::vector<double> rates;
  Labels truth;
  std::optional<double> min_covered;
  std::optional<double> min_not_covered;
  // Expected number of truly not-covered assignees labelled Covered, and the
  // reverse, per run.
  double expected_false_positives = 0;
  double expected_false_negatives = 0;
};

inline ClassificationRateReport ClassificationRates(const TrialEnsemble& ens,
                                                    const OutcomeVector& truth) {
  internal::CheckTruth(ens, truth);
  const Labels& want = truth.labels();
  ClassificationRateReport r;
  r.truth = want;
  r.rates.assign(want.size(), 0);
  std::vector<std::int64_t> correct(want.size(), 0);
  for (const auto& trial : ens.trials()) {
    const Labels& got = trial.labels();
    for (std::size_t a = 0; a < want.size(); ++a) {
      if (got[a] == want[a]) ++correct[a];
    }
  }
  const double n = static_cast<double>(ens.n_trials());
  for (std::size_t a = 0; a < want.size(); ++a) {
    r.rates[a] = static_cast<double>(correct[a]) / n;
    auto& slot = want[a] == CoverageLabel::kCovered ? r.min_covered
                                                    : r.min_not_covered;
    slot = slot ? std::min(*slot, r.rates[a]) : r.rates[a];
    if (want[a] == CoverageLabel::kCovered) {
      r.expected_false_negatives += 1.0 - r.rates[a];
    } else {
      r.expected_false_positives += 1.0 - r.rates[a];
    }
  }
  return r;
}

// mean(o~_a) / o_a; undefined where o_a == 0.
inline std::vector<std::optional<double>> MultiplicativeError(
    const TrialEnsemble& ens, const OutcomeVector& truth) {
  internal::CheckTruth(ens, truth);
  const auto means = EnsembleMeans(ens);
  const Fractions& o = truth.fractions();
  std::vector<std::optional<double>> out(o.size());
  for (std::size_t a = 0; a < o.size(); ++a) {
    if (o[a] != 0) out[a] = means[a] / o[a];
  }
  return out;
}

struct MisallocationReport {
  // Dollars over (+) or under (-) allocated per million allocated.
  std::vector<double> gamma;
  double total_abs = 0;
  double min = 0;
  double max = 0;
};

inline MisallocationReport Misallocation(const TrialEnsemble& ens,
                                         const OutcomeVector& truth) {
  internal::CheckTruth(ens, truth);
  const auto means = EnsembleMeans(ens);
  const Fractions& o = truth.fractions();
  MisallocationReport r;
  r.gamma.resize(o.size());
  for (std::size_t a = 0; a < o.size(); ++a) {
    r.gamma[a] = (means[a] - o[a]) * 1e6;
    r.total_abs += std::fabs(r.gamma[a]);
  }
  r.min = *std::min_element(r.gamma.begin(), r.gamma.end());
  r.max = *std::max_element(r.gamma.begin(), r.gamma.end());
  return r;
}

// Mean over trials of max_a o~_a/q_a - min_b o~_b/q_b.
inline double MaxMultiplicative(const TrialEnsemble& ens,
                                const QuotaVector& quotas) {
  internal::CheckEnsemble(ens, quotas.quotas.size());
  for (double q : quotas.quotas) {
    if (!(q > 0)) throw Error(ErrorCode::kZeroQuota, "quota must be > 0");
  }
  std::vector<double> spread(ens.n_trials());
  for (std::size_t t = 0; t < ens.n_trials(); ++t) {
    const Seats& s = ens[t].seats();
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < s.size(); ++a) {
      const double ratio = static_cast<double>(s[a]) / quotas.quotas[a];
      hi = std::max(hi, ratio);
      lo = std::min(lo, ratio);
    }
    spread[t] = hi - lo;
  }
  return internal::OrderFreeMean(std::move(spread));
}

// mean(o~_a) - q_a per assignee.
inline std::vector<double> ExpectedDeviations(const TrialEnsemble& ens,
                                              const QuotaVector& quotas) {
  internal::CheckEnsemble(ens, quotas.quotas.size());
  auto means = EnsembleMeans(ens);
  for (std::size_t a = 0; a < means.size(); ++a) means[a] -= quotas.quotas[a];
  return means;
}

// (1/|A|) sum_a |mean(o~_a) - q_a|.
inline double AvgExpectedDeviation(const TrialEnsemble& ens,
                                   const QuotaVector& quotas) {
  const auto dev = ExpectedDeviations(ens, quotas);
  double s = 0;
  for (double d : dev) s += std::fabs(d);
  return s / static_cast<double>(dev.size());
}

// True for each assignee that sits in at least one inverted pair: some b with
// strictly larger entitlement and strictly smaller expected allocation, or
// strictly smaller entitlement and strictly larger expected allocation.
inline std::vector<bool> InvertedAssignees(std::span<const double> expected,
                                           std::span<const double> entitlement) {
  if (expected.size() != entitlement.size()) {
    throw Error(ErrorCode::kLengthMismatch, "expected/entitlement lengths");
  }
  const std::size_t n = expected.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return entitlement[a] < entitlement[b];
  });

  std::vector<bool> inverted(n, false);
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Sweep up: max expected among strictly smaller entitlements.
  double max_below = -kInf;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && entitlement[order[j]] == entitlement[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) {
      if (max_below > expected[order[k]]) inverted[order[k]] = true;
    }
    for (std::size_t k = i; k < j; ++k) {
      max_below = std::max(max_below, expected[order[k]]);
    }
    i = j;
  }
  // Sweep down: min expected among strictly larger entitlements.
  double min_above = kInf;
  for (std::size_t j = n; j > 0;) {
    std::size_t i = j;
    while (i > 0 && entitlement[order[i - 1]] == entitlement[order[j - 1]]) --i;
    for (std::size_t k = i; k < j; ++k) {
      if (min_above < expected[order[k]]) inverted[order[k]] = true;
    }
    for (std::size_t k = i; k < j; ++k) {
      min_above = std::min(min_above, expected[order[k]]);
    }
    j = i;
  }
  return inverted;
}

inline std::int64_t CountInversions(std::span<const double> expected,
                                    std::span<const double> entitlement) {
  const auto inv = InvertedAssignees(expected, entitlement);
  return std::count(inv.begin(), inv.end(), true);
}

// ---------------------------------------------------------------------------
// Distance to the coverage decision boundary
// ---------------------------------------------------------------------------

enum class DistanceSpace { kRaw, kEpsilonScaled };

namespace internal {

using Vec3 = std::array<double, 3>;

inline double Dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

// Closed half-space {x : a.x <= b}.
struct HalfSpace {
  Vec3 a;
  double b;

  bool Contains(const Vec3& x) const {
    const double slack =
        1e-12 * (1.0 + std::fabs(b) + std::sqrt(Dot(a, a) * Dot(x, x)));
    return Dot(a, x) <= b + slack;
  }

  Vec3 ProjectOntoPlane(const Vec3& p) const {
    const double t = (Dot(a, p) - b) / Dot(a, a);
    return {p[0] - t * a[0], p[1] - t * a[1], p[2] - t * a[2]};
  }
};

inline double Dist(const Vec3& p, const Vec3& q) {
  const Vec3 d{p[0] - q[0], p[1] - q[1], p[2] - q[2]};
  return std::sqrt(Dot(d, d));
}

// Euclidean distance from p to the intersection of two closed half-spaces.
// The projection lies on a face of the active set, so the nearest feasible
// candidate among {p, proj onto either plane, proj onto both} is exact.
inline double DistanceToIntersection(const Vec3& p, const HalfSpace& h1,
                                     const HalfSpace& h2) {
  if (h1.Contains(p) && h2.Contains(p)) return 0;
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& c : {h1.ProjectOntoPlane(p), h2.ProjectOntoPlane(p)}) {
    if (h1.Contains(c) && h2.Contains(c)) best = std::min(best, Dist(p, c));
  }
  // Both constraints active: x = p - A^T (A A^T)^{-1} (A p - b).
  const double g11 = Dot(h1.a, h1.a), g12 = Dot(h1.a, h2.a),
               g22 = Dot(h2.a, h2.a);
  const double det = g11 * g22 - g12 * g12;
  if (det > 1e-15 * g11 * g22) {
    const double r1 = Dot(h1.a, p) - h1.b, r2 = Dot(h2.a, p) - h2.b;
    const double l1 = (g22 * r1 - g12 * r2) / det;
    const double l2 = (g11 * r2 - g12 * r1) / det;
    const Vec3 c{p[0] - l1 * h1.a[0] - l2 * h2.a[0],
                 p[1] - l1 * h1.a[1] - l2 * h2.a[1],
                 p[2] - l1 * h1.a[2] - l2 * h2.a[2]};
    best = std::min(best, Dist(p, c));
  }
  return best;
}

inline double DistanceToHalfSpace(const Vec3& p, const HalfSpace& h) {
  return std::max(0.0, Dot(h.a, p) - h.b) / std::sqrt(Dot(h.a, h.a));
}

}  // namespace internal

// Euclidean distance in (vac, lep, lit) space from the point to the nearest
// point carrying the opposite coverage label. Only boundary surfaces whose
// crossing flips the label are considered:
//   Covered     -> nearest of {lit <= illit*lep} and
//                  {lep <= pct*vac and lep <= abs}
//   NotCovered  -> nearest of {lep >= pct*vac and lit >= illit*lep} and
//                  {lep >= abs and lit >= illit*lep}
inline double DistanceToThreshold(double vac, double lep, double lit,
                                  const VraThresholds& t = {}) {
  const CoverageLabel label = VraClassify(vac, lep, lit, t);
  using internal::HalfSpace;
  const internal::Vec3 p{vac, lep, lit};
  if (label == CoverageLabel::kCovered) {
    const HalfSpace not_illit{{0, -t.illit, 1}, 0};
    const HalfSpace not_share{{-t.pct, 1, 0}, 0};
    const HalfSpace not_abs{{0, 1, 0}, t.abs};
    return std::min(internal::DistanceToHalfSpace(p, not_illit),
                    internal::DistanceToIntersection(p, not_share, not_abs));
  }
  const HalfSpace share{{t.pct, -1, 0}, 0};
  const HalfSpace absolute{{0, -1, 0}, -t.abs};
  const HalfSpace illit{{0, t.illit, -1}, 0};
  return std::min(internal::DistanceToIntersection(p, share, illit),
                  internal::DistanceToIntersection(p, absolute, illit));
}

inline double DistanceToThreshold(double vac, double lep, double lit,
                                  const VraThresholds& t, DistanceSpace space,
                                  double eps) {
  const double d = DistanceToThreshold(vac, lep, lit, t);
  return space == DistanceSpace::kEpsilonScaled ? d * eps : d;
}

}  // namespace dpalloc

#endif  // DPALLOC_METRICS_HPP_
