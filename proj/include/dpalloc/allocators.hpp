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
// Deterministic assignment rules applied to true or noisy statistics:
// minority-language coverage, Title I proportional funding and
// round-to-nearest apportionment.
//
#ifndef DPALLOC_ALLOCATORS_HPP_
#define DPALLOC_ALLOCATORS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpalloc/core_model.hpp"
#include "dpalloc/error.hpp"

namespace dpalloc {

namespace problem_names {
inline constexpr const char* kVra = "vra";
inline constexpr const char* kTitle1 = "title1";
inline constexpr const char* kApportionment = "apportionment";
}  // namespace problem_names

inline constexpr std::int64_t kDefaultSeatTotal = 543;

struct VraThresholds {
  double pct = 0.05;
  double abs = 10000;
  double illit = 0.0131;

  void Validate() const {
    if (!(pct > 0 && pct < 1) || !(abs > 0) || !(illit > 0 && illit < 1)) {
      throw Error(ErrorCode::kDomainError, "invalid coverage thresholds");
    }
  }
};

// Covered iff (lep/vac > pct or lep > abs) and lit/lep > illit. A ratio with
// a zero denominator is false.
inline CoverageLabel VraClassify(double vac, double lep, double lit,
                                 const VraThresholds& t = {}) {
  if (!std::isfinite(vac) || !std::isfinite(lep) || !std::isfinite(lit)) {
    throw Error(ErrorCode::kNonFiniteInput, "non-finite coverage input");
  }
  const bool share = vac > 0 && lep / vac > t.pct;
  const bool absolute = lep > t.abs;
  const bool illiterate = lep > 0 && lit / lep > t.illit;
  return (share || absolute) && illiterate ? CoverageLabel::kCovered
                                           : CoverageLabel::kNotCovered;
}

inline Labels VraClassifyAll(const StatMatrix& m, const VraThresholds& t = {}) {
  const std::size_t vac = m.require_query(queries::kVac);
  const std::size_t lep = m.require_query(queries::kLep);
  const std::size_t lit = m.require_query(queries::kLit);
  Labels out(m.num_assignees());
  for (std::size_t a = 0; a < m.num_assignees(); ++a) {
    out[a] = VraClassify(m.at(a, vac), m.at(a, lep), m.at(a, lit), t);
  }
  return out;
}

struct Title1Allocation {
  Fractions fractions;
  bool degenerate = false;
};

// fraction_a = exp_a * eli_a / sum_b exp_b * eli_b. A zero denominator yields
// the uniform split, flagged as degenerate.
inline Title1Allocation Title1Allocate(std::span<const double> eli,
                                       std::span<const double> exp) {
  if (eli.size() != exp.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "eli has " + std::to_string(eli.size()) + " entries, exp " +
                    std::to_string(exp.size()));
  }
  if (eli.empty()) throw Error(ErrorCode::kLengthZero, "no assignees");
  Title1Allocation out;
  out.fractions.resize(eli.size());
  double denom = 0;
  for (std::size_t a = 0; a < eli.size(); ++a) {
    if (!std::isfinite(eli[a]) || !std::isfinite(exp[a])) {
      throw Error(ErrorCode::kNonFiniteInput, "non-finite Title I input");
    }
    out.fractions[a] = exp[a] * eli[a];
    denom += out.fractions[a];
  }
  if (denom == 0) {
    std::fill(out.fractions.begin(), out.fractions.end(),
              1.0 / static_cast<double>(eli.size()));
    out.degenerate = true;
    return out;
  }
  for (double& f : out.fractions) f /= denom;
  return out;
}

inline OutcomeVector Title1Outcome(const StatMatrix& m) {
  auto alloc = Title1Allocate(m.column(queries::kEli), m.column(queries::kExp));
  return OutcomeVector{m.assignees(), std::move(alloc.fractions),
                       alloc.degenerate};
}

struct QuotaVector {
  std::vector<double> quotas;
  std::int64_t seat_total = kDefaultSeatTotal;
};

inline double SumOf(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

// q_a = tot_a / sum(tot) * seats.
inline QuotaVector Quotas(std::span<const double> tot,
                          std::int64_t seats = kDefaultSeatTotal) {
  if (tot.empty()) throw Error(ErrorCode::kLengthZero, "no assignees");
  if (seats <= 0) throw Error(ErrorCode::kDomainError, "seats must be > 0");
  for (double t : tot) {
    if (!std::isfinite(t)) {
      throw Error(ErrorCode::kNonFiniteInput, "non-finite population");
    }
  }
  const double total = SumOf(tot);
  if (!(total > 0)) {
    throw Error(ErrorCode::kZeroTotalPopulation, "population total is zero");
  }
  QuotaVector q{std::vector<double>(tot.size()), seats};
  for (std::size_t a = 0; a < tot.size(); ++a) {
    q.quotas[a] = tot[a] / total * static_cast<double>(seats);
  }
  return q;
}

// Round each quota half away from zero, with a floor of one seat. The seat sum
// may differ from `seats`.
inline Seats Apportion(std::span<const double> tot,
                       std::int64_t seats = kDefaultSeatTotal) {
  const QuotaVector q = Quotas(tot, seats);
  Seats out(tot.size());
  for (std::size_t a = 0; a < tot.size(); ++a) {
    out[a] = std::max<std::int64_t>(std::llround(q.quotas[a]), 1);
  }
  return out;
}

inline OutcomeVector ApportionOutcome(const StatMatrix& m,
                                      std::int64_t seats = kDefaultSeatTotal) {
  return OutcomeVector{m.assignees(), Apportion(m.column(queries::kTot), seats)};
}

}  // namespace dpalloc

#endif  // DPALLOC_ALLOCATORS_HPP_
