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
#include "dpalloc/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "dpalloc/allocators.hpp"
#include "dpalloc/rng.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace dpalloc {
namespace {

constexpr auto kCov = CoverageLabel::kCovered;
constexpr auto kNot = CoverageLabel::kNotCovered;

TrialEnsemble EnsembleOf(const std::vector<AssigneeId>& ids,
                         const std::vector<OutcomeVector::Outcomes>& trials) {
  TrialEnsemble ens;
  for (const auto& t : trials) ens.Add({ids, t});
  return ens;
}

TEST(ClassificationRatesTest, HandComputed) {
  const auto ids = MakeAssigneeIds({"a", "b", "c"});
  const OutcomeVector truth{ids, Labels{kCov, kNot, kNot}};
  const auto ens = EnsembleOf(ids, {Labels{kCov, kNot, kCov},
                                    Labels{kNot, kNot, kCov},
                                    Labels{kCov, kNot, kNot},
                                    Labels{kCov, kCov, kCov}});
  const auto r = ClassificationRates(ens, truth);
  EXPECT_EQ(r.rates, (std::vector<double>{0.75, 0.75, 0.25}));
  EXPECT_EQ(r.min_covered, 0.75);
  EXPECT_EQ(r.min_not_covered, 0.25);
  EXPECT_DOUBLE_EQ(r.expected_false_positives, 0.25 + 0.75);
  EXPECT_DOUBLE_EQ(r.expected_false_negatives, 0.25);
}

TEST(ClassificationRatesTest, RejectsMismatchedOrdering) {
  const OutcomeVector truth{MakeAssigneeIds({"b", "a"}), Labels{kCov, kNot}};
  const auto ens = EnsembleOf(MakeAssigneeIds({"a", "b"}), {Labels{kCov, kNot}});
  EXPECT_DPALLOC_ERROR(ClassificationRates(ens, truth),
                       ErrorCode::kShapeMismatch);
}

TEST(MultiplicativeErrorTest, UndefinedWhereTruthIsZero) {
  const auto ids = MakeAssigneeIds({"a", "b", "c"});
  const OutcomeVector truth{ids, Fractions{0.5, 0.5, 0.0}};
  const auto ens =
      EnsembleOf(ids, {Fractions{0.2, 0.6, 0.2}, Fractions{0.4, 0.4, 0.2}});
  const auto m = MultiplicativeError(ens, truth);
  EXPECT_DOUBLE_EQ(*m[0], 0.6);
  EXPECT_DOUBLE_EQ(*m[1], 1.0);
  EXPECT_FALSE(m[2].has_value());
}

TEST(MisallocationTest, DollarsPerMillion) {
  const auto ids = MakeAssigneeIds({"a", "b"});
  const OutcomeVector truth{ids, Fractions{0.5, 0.5}};
  const auto ens = EnsembleOf(ids, {Fractions{0.25, 0.75}});
  const auto r = Misallocation(ens, truth);
  EXPECT_EQ(r.gamma, (std::vector<double>{-250000, 250000}));
  EXPECT_EQ(r.total_abs, 500000);
  EXPECT_EQ(r.min, -250000);
  EXPECT_EQ(r.max, 250000);
}

TEST(MaxMultiplicativeTest, MeanOfPerTrialSpread) {
  const auto ids = MakeAssigneeIds({"a", "b"});
  const QuotaVector q{{2.0, 1.0}, 3};
  const auto ens = EnsembleOf(ids, {Seats{2, 1}, Seats{4, 1}});
  // spreads: 0 and 1
  EXPECT_DOUBLE_EQ(MaxMultiplicative(ens, q), 0.5);
  EXPECT_DPALLOC_ERROR(MaxMultiplicative(ens, QuotaVector{{2.0, 0.0}, 3}),
                       ErrorCode::kZeroQuota);
}

TEST(AvgExpectedDeviationTest, HandComputed) {
  const auto ids = MakeAssigneeIds({"a", "b"});
  const QuotaVector q{{1.5, 2.5}, 4};
  const auto ens = EnsembleOf(ids, {Seats{1, 3}, Seats{2, 3}});
  EXPECT_EQ(ExpectedDeviations(ens, q), (std::vector<double>{0, 0.5}));
  EXPECT_DOUBLE_EQ(AvgExpectedDeviation(ens, q), 0.25);
}

TEST(MetricsTest, InvariantUnderTrialPermutation) {
  const auto ids = MakeAssigneeIds({"a", "b", "c"});
  RngStream rng = RngStream::FromSeed(31);
  std::vector<OutcomeVector::Outcomes> trials;
  for (int t = 0; t < 40; ++t) {
    Fractions f{rng.uniform(), rng.uniform(), rng.uniform()};
    trials.push_back(f);
  }
  const OutcomeVector truth{ids, Fractions{0.3, 0.3, 0.4}};
  const auto base = EnsembleOf(ids, trials);
  std::reverse(trials.begin(), trials.end());
  std::rotate(trials.begin(), trials.begin() + 7, trials.end());
  const auto perm = EnsembleOf(ids, trials);
  EXPECT_EQ(EnsembleMeans(base), EnsembleMeans(perm));
  EXPECT_EQ(MultiplicativeError(base, truth), MultiplicativeError(perm, truth));
  EXPECT_EQ(Misallocation(base, truth).gamma, Misallocation(perm, truth).gamma);
}

// Definition-level oracle: quadratic scan over all pairs.
std::vector<bool> BruteForceInverted(const std::vector<double>& expected,
                                     const std::vector<double>& ent) {
  std::vector<bool> out(expected.size(), false);
  for (std::size_t a = 0; a < expected.size(); ++a) {
    for (std::size_t b = 0; b < expected.size(); ++b) {
      if ((ent[b] > ent[a] && expected[b] < expected[a]) ||
          (ent[b] < ent[a] && expected[b] > expected[a])) {
        out[a] = true;
      }
    }
  }
  return out;
}

TEST(InversionsTest, MatchesPairwiseDefinitionWithTies) {
  RngStream rng = RngStream::FromSeed(12);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng.next_u64() % 30;
    std::vector<double> expected(n), ent(n);
    for (std::size_t a = 0; a < n; ++a) {
      // Small ranges so ties occur in both coordinates.
      ent[a] = static_cast<double>(rng.next_u64() % 6);
      expected[a] = static_cast<double>(rng.next_u64() % 6);
    }
    EXPECT_EQ(InvertedAssignees(expected, ent),
              BruteForceInverted(expected, ent));
  }
}

TEST(InversionsTest, MonotoneHasNoneAndSwapHasTwo) {
  const std::vector<double> ent{1, 2, 3, 4};
  EXPECT_EQ(CountInversions(std::vector<double>{1, 2, 3, 4}, ent), 0);
  EXPECT_EQ(CountInversions(std::vector<double>{1, 3, 2, 4}, ent), 2);
  // Equal entitlements never form a pair.
  EXPECT_EQ(CountInversions(std::vector<double>{5, 1},
                            std::vector<double>{2, 2}),
            0);
  EXPECT_DPALLOC_ERROR(CountInversions(std::vector<double>{1},
                                       std::vector<double>{1, 2}),
                       ErrorCode::kLengthMismatch);
}

// ---------------------------------------------------------------------------
// Distance to threshold. Oracle: Dykstra's alternating projections onto the
// intersection of two half-spaces {x : n.x <= b}.
// ---------------------------------------------------------------------------

using V = std::array<double, 3>;
struct H {
  V n;
  double b;
};

V Project(const V& p, const H& h) {
  const double v = h.n[0] * p[0] + h.n[1] * p[1] + h.n[2] * p[2] - h.b;
  if (v <= 0) return p;
  const double nn = h.n[0] * h.n[0] + h.n[1] * h.n[1] + h.n[2] * h.n[2];
  return {p[0] - v * h.n[0] / nn, p[1] - v * h.n[1] / nn,
          p[2] - v * h.n[2] / nn};
}

double Norm(const V& a, const V& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) +
                   (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

double Dykstra(const V& p, const H& h1, const H& h2) {
  V x = p, P{0, 0, 0}, Q{0, 0, 0};
  for (int it = 0; it < 20000; ++it) {
    const V y = Project({x[0] + P[0], x[1] + P[1], x[2] + P[2]}, h1);
    P = {x[0] + P[0] - y[0], x[1] + P[1] - y[1], x[2] + P[2] - y[2]};
    const V z = Project({y[0] + Q[0], y[1] + Q[1], y[2] + Q[2]}, h2);
    Q = {y[0] + Q[0] - z[0], y[1] + Q[1] - z[1], y[2] + Q[2] - z[2]};
    x = z;
  }
  return Norm(p, x);
}

double OracleDistance(double vac, double lep, double lit,
                      const VraThresholds& t) {
  const V p{vac, lep, lit};
  if (VraClassify(vac, lep, lit, t) == kCov) {
    const H not_illit{{0, -t.illit, 1}, 0};
    const H not_share{{-t.pct, 1, 0}, 0};
    const H not_abs{{0, 1, 0}, t.abs};
    return std::min(Norm(p, Project(p, not_illit)),
                    Dykstra(p, not_share, not_abs));
  }
  const H share{{t.pct, -1, 0}, 0};
  const H abs{{0, -1, 0}, -t.abs};
  const H illit{{0, t.illit, -1}, 0};
  return std::min(Dykstra(p, share, illit), Dykstra(p, abs, illit));
}

TEST(DistanceToThresholdTest, ClosedFormPlaneDistance) {
  // Nearest boundary is the illiteracy plane lit = 0.0131 lep.
  EXPECT_NEAR(DistanceToThreshold(1000, 100, 10), 8.68925445050644, 1e-12);
  // With a generous illiteracy margin the share plane is nearest.
  EXPECT_NEAR(DistanceToThreshold(1000, 100, 90), 49.93761694389223, 1e-9);
}

TEST(DistanceToThresholdTest, MatchesAlternatingProjectionOracle) {
  RngStream rng = RngStream::FromSeed(55);
  const VraThresholds t;
  for (int i = 0; i < 300; ++i) {
    const double vac = std::pow(10.0, 2 + 4 * rng.uniform());
    const double lep = vac * 0.2 * rng.uniform();
    const double lit = lep * 0.05 * rng.uniform();
    const double got = DistanceToThreshold(vac, lep, lit, t);
    const double want = OracleDistance(vac, lep, lit, t);
    EXPECT_NEAR(got, want, 1e-6 * (1 + want))
        << vac << " " << lep << " " << lit;
  }
}

TEST(DistanceToThresholdTest, NoOppositePointIsCloser) {
  RngStream rng = RngStream::FromSeed(56);
  const VraThresholds t;
  const double vac = 4000, lep = 230, lit = 4;  // covered, near boundaries
  ASSERT_EQ(VraClassify(vac, lep, lit, t), kCov);
  const double d = DistanceToThreshold(vac, lep, lit, t);
  for (int i = 0; i < 20000; ++i) {
    const double x = vac + 3 * d * (2 * rng.uniform() - 1);
    const double y = lep + 3 * d * (2 * rng.uniform() - 1);
    const double z = lit + 3 * d * (2 * rng.uniform() - 1);
    if (VraClassify(x, y, z, t) == kNot) {
      EXPECT_GE(Norm({vac, lep, lit}, {x, y, z}), d - 1e-9);
    }
  }
}

TEST(DistanceToThresholdTest, EpsilonScaledSpace) {
  const double raw = DistanceToThreshold(1000, 100, 10);
  EXPECT_DOUBLE_EQ(
      DistanceToThreshold(1000, 100, 10, {}, DistanceSpace::kEpsilonScaled, 0.5),
      raw * 0.5);
  EXPECT_EQ(DistanceToThreshold(1000, 100, 10, {}, DistanceSpace::kRaw, 0.5),
            raw);
}

}  // namespace
}  // namespace dpalloc
