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
#include "dpalloc/repair.hpp"

#include <cmath>
#include <vector>

#include "dpalloc/allocators.hpp"
#include "dpalloc/rng.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace dpalloc {
namespace {

using ::dpalloc::testing::ConstantUniform;

TEST(InflationSlacksTest, OracleValues) {
  const Slacks proof = InflationSlacks(10, 0.1, 0.05);
  EXPECT_NEAR(proof.delta_count, 119.82929094215963, 1e-10);
  EXPECT_NEAR(proof.delta_total, 829.4049640102028, 1e-9);
  const Slacks body = InflationSlacks(10, 0.1, 0.05, SlackConstant::kBody);
  EXPECT_NEAR(body.delta_count, 59.914645471079815, 1e-10);
  EXPECT_EQ(body.delta_total, proof.delta_total);
}

TEST(InflationSlacksTest, DomainErrors) {
  EXPECT_DPALLOC_ERROR(InflationSlacks(0, 1, 0.1), ErrorCode::kDomainError);
  EXPECT_DPALLOC_ERROR(InflationSlacks(1, 0, 0.1), ErrorCode::kDomainError);
  EXPECT_DPALLOC_ERROR(InflationSlacks(1, 1, 1.0), ErrorCode::kDomainError);
}

TEST(InflationaryAllocateTest, ZeroNoiseDominatesTrueShares) {
  const std::vector<double> eli{5000, 20000, 75000};
  const std::vector<double> exp(3, 1.0);
  const auto r = InflationaryAllocate(eli, exp, 0.1, 0.05);
  const double n = 100000;
  const Slacks s = InflationSlacks(3, 0.1, 0.05);
  double sum = 0;
  for (std::size_t a = 0; a < 3; ++a) {
    EXPECT_DOUBLE_EQ(r.allocation[a], (eli[a] + s.delta_count) /
                                          (n - s.delta_total));
    EXPECT_GE(r.allocation[a], eli[a] / n);
    sum += r.allocation[a];
  }
  EXPECT_DOUBLE_EQ(r.params.budget_factor, sum);
  EXPECT_GT(r.params.budget_factor, 1.0);
  EXPECT_EQ(r.params.k, 3);
}

TEST(InflationaryAllocateTest, DominatesStandardAllocationOnSameInput) {
  RngStream rng = RngStream::FromSeed(14);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> eli(2 + rng.next_u64() % 20), exp(eli.size());
    for (std::size_t a = 0; a < eli.size(); ++a) {
      eli[a] = 1e5 * rng.uniform();
      exp[a] = 0.5 + rng.uniform();
    }
    const double eps = 0.01 + rng.uniform();
    try {
      const auto inflated = InflationaryAllocate(eli, exp, eps, 0.05);
      const auto standard = Title1Allocate(eli, exp);
      for (std::size_t a = 0; a < eli.size(); ++a) {
        EXPECT_GE(inflated.allocation[a], standard.fractions[a]);
      }
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNonPositiveDenominator);
    }
  }
}

TEST(InflationaryAllocateTest, NonPositiveDenominator) {
  const std::vector<double> eli(50, 1000.0), exp(50, 1.0);
  // Delta' = 50 ln(2*2500/0.05)/0.01 ~ 57565 > 50000.
  EXPECT_DPALLOC_ERROR(InflationaryAllocate(eli, exp, 0.01, 0.05),
                       ErrorCode::kNonPositiveDenominator);
  EXPECT_NO_THROW(InflationaryAllocate(eli, exp, 0.1, 0.05));
}

TEST(NoPenaltyTest, ElementwiseComparison) {
  EXPECT_TRUE(NoPenalty(std::vector<double>{0.5, 0.6},
                        std::vector<double>{0.5, 0.5}));
  EXPECT_FALSE(NoPenalty(std::vector<double>{0.49, 0.6},
                         std::vector<double>{0.5, 0.5}));
}

// E[X | X >= 0] for X ~ Laplace(c, b), c > 0.
double TruncatedMean(double c, double b) {
  const double tail = 0.5 * std::exp(-c / b);
  return (c + b * tail) / (1 - tail);
}

TEST(TruncatedLaplaceDrawTest, MeansMatchAnalyticForms) {
  RngStream rng = RngStream::FromSeed(41);
  const int n = 100000;
  std::int64_t attempts = 0;
  double below = 0, above = 0;
  for (int i = 0; i < n; ++i) {
    below += internal::TruncatedLaplaceDraw(-5.0, 2.0, rng, attempts, 1 << 30);
  }
  for (int i = 0; i < n; ++i) {
    above += internal::TruncatedLaplaceDraw(1.0, 2.0, rng, attempts, 1 << 30);
  }
  // Negative center: the conditional law is Exponential(b), mean b.
  EXPECT_NEAR(below / n, 2.0, 4 * 2.0 / std::sqrt(n));
  EXPECT_NEAR(above / n, TruncatedMean(1.0, 2.0), 0.04);
}

TEST(TruncatedLaplaceDrawTest, CapRaisesSamplingExhausted) {
  ConstantUniform always_negative{1e-12};
  std::int64_t attempts = 0;
  EXPECT_DPALLOC_ERROR(internal::TruncatedLaplaceDraw(1.0, 1.0, always_negative,
                                                      attempts, 1000),
                       ErrorCode::kSamplingExhausted);
  EXPECT_EQ(attempts, 1001);
}

TEST(PosteriorProbabilityTest, SingleThresholdMatchesAnalyticCdf) {
  // P(X > T | X >= 0) = S(T) / S(0), S the Laplace(c, b) survival function.
  auto survival = [](double x, double c, double b) {
    return x < c ? 1 - 0.5 * std::exp((x - c) / b) : 0.5 * std::exp(-(x - c) / b);
  };
  RngStream rng = RngStream::FromSeed(77);
  const int n = 10000;
  for (const auto& [c, T] : {std::pair{5.0, 4.0}, {5.0, 7.0}, {-1.0, 1.5}}) {
    const double b = 2.0;
    const double centers[] = {c};
    const double got = PosteriorProbability(
        centers, b, n, rng, [&](std::span<const double> q) { return q[0] > T; });
    const double want = survival(T, c, b) / survival(0, c, b);
    const double se = std::sqrt(want * (1 - want) / n);
    EXPECT_NEAR(got, want, 3 * se) << c << " " << T;
  }
}

TEST(PosteriorCoveredTest, ExtremesAreCertain) {
  RngStream rng = RngStream::FromSeed(2);
  EXPECT_EQ(PosteriorCovered({1e6, 1e5, 1e4}, 1.0, 200, rng), 1.0);
  EXPECT_EQ(PosteriorCovered({1e6, 10, 0}, 1.0, 200, rng), 0.0);
}

TEST(RepairClassifyTest, MonotoneInP) {
  const VraTriple noisy{2000, 101, 1.5};  // near both thresholds
  bool was_covered = true;
  for (int i = 0; i <= 10; ++i) {
    RngStream rng = RngStream::FromSeed(9);
    const double p = i / 10.0;
    const bool covered =
        RepairClassify(noisy, 0.5, {p, 500}, rng) == CoverageLabel::kCovered;
    EXPECT_TRUE(was_covered || !covered) << p;
    was_covered = covered;
  }
  RngStream rng = RngStream::FromSeed(9);
  EXPECT_EQ(RepairClassify(noisy, 0.5, {0.0, 10}, rng),
            CoverageLabel::kCovered);
}

TEST(RepairParamsTest, Validation) {
  EXPECT_DPALLOC_ERROR((RepairParams{1.5, 10}.Validate()),
                       ErrorCode::kDomainError);
  EXPECT_DPALLOC_ERROR((RepairParams{0.5, 0}.Validate()),
                       ErrorCode::kDomainError);
}

}  // namespace
}  // namespace dpalloc
