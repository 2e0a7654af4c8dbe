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
// Differentially private release mechanisms over statistic matrices:
//
//   * VectorLaplace  - independent Laplace(sensitivity/eps) per cell.
//   * DLaplace       - noise on the disjoint decomposition (lit, lep-lit,
//                      vac-lep) of the voting-rights statistics, re-cumulated.
//   * GroupSmooth    - private partition of an ordered vector into contiguous
//                      buckets, noisy bucket totals split evenly.
//
// Mechanisms never clip. ClipNonnegative is a separate post-processing step.
//
#ifndef DPALLOC_MECHANISMS_HPP_
#define DPALLOC_MECHANISMS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpalloc/core_model.hpp"
#include "dpalloc/error.hpp"
#include "dpalloc/rng.hpp"

namespace dpalloc {

namespace mechanism_names {
inline constexpr const char* kLaplace = "laplace";
inline constexpr const char* kDLaplace = "dlaplace";
inline constexpr const char* kGroupSmooth = "groupsmooth";
}  // namespace mechanism_names

namespace internal {

inline void RequirePositiveEpsilon(double eps) {
  if (!(eps > 0) || !std::isfinite(eps)) {
    throw Error(ErrorCode::kNonPositiveEpsilon,
                "epsilon must be a positive finite number");
  }
}

}  // namespace internal

// Density of Laplace(mu, b) at x.
inline double LaplaceDensity(double x, double mu, double b) {
  return std::exp(-std::fabs(x - mu) / b) / (2.0 * b);
}

template <NoiseSource N>
NoisyRelease VectorLaplace(const StatMatrix& x, double sensitivity, double eps,
                           N& noise, std::span<const QueryId> noised = {}) {
  internal::RequirePositiveEpsilon(eps);
  if (!(sensitivity > 0)) {
    throw Error(ErrorCode::kNonPositiveScale, "sensitivity must be > 0");
  }
  const double scale = sensitivity / eps;
  std::vector<bool> mask(x.num_queries(), noised.empty());
  for (const auto& q : noised) mask[x.require_query(q)] = true;

  NoisyRelease out{x, eps, mechanism_names::kLaplace, SeedRecordOf(noise)};
  for (std::size_t a = 0; a < x.num_assignees(); ++a) {
    for (std::size_t q = 0; q < x.num_queries(); ++q) {
      if (mask[q]) out.stats.at(a, q) += noise.laplace(scale);
    }
  }
  return out;
}

// Decomposed voting-rights components for one assignee.
struct VraComponents {
  double lit;            // q1
  double lep_minus_lit;  // q2
  double vac_minus_lep;  // q3
};

struct VraTriple {
  double vac;
  double lep;
  double lit;
};

inline VraComponents Decompose(const VraTriple& t) {
  return {t.lit, t.lep - t.lit, t.vac - t.lep};
}

inline VraTriple Recompose(const VraComponents& c) {
  const double lit = c.lit;
  const double lep = lit + c.lep_minus_lit;
  const double vac = lep + c.vac_minus_lep;
  return {vac, lep, lit};
}

namespace internal {

struct VraColumns {
  std::size_t vac, lep, lit;
};

inline VraColumns RequireVraSchema(const StatMatrix& x) {
  VraColumns cols{x.require_query(queries::kVac),
                  x.require_query(queries::kLep),
                  x.require_query(queries::kLit)};
  if (x.num_queries() != 3) {
    throw Error(ErrorCode::kSchemaMismatch,
                "voting-rights release expects exactly {vac, lep, lit}");
  }
  return cols;
}

inline void CheckVraOrdering(const StatMatrix& x, const VraColumns& c) {
  for (std::size_t a = 0; a < x.num_assignees(); ++a) {
    const double vac = x.at(a, c.vac), lep = x.at(a, c.lep),
                 lit = x.at(a, c.lit);
    if (!(0 <= lit && lit <= lep && lep <= vac)) {
      throw Error(ErrorCode::kOrderingViolation,
                  x.assignees()[a].str() + ": need 0 <= lit <= lep <= vac");
    }
  }
}

}  // namespace internal

inline VraTriple VraRow(const StatMatrix& x, std::size_t a) {
  return {x.at(a, x.require_query(queries::kVac)),
          x.at(a, x.require_query(queries::kLep)),
          x.at(a, x.require_query(queries::kLit))};
}

// Noise draws are taken per assignee in the order q1, q2, q3.
template <NoiseSource N>
NoisyRelease DLaplace(const StatMatrix& vra_stats, double eps, N& noise) {
  internal::RequirePositiveEpsilon(eps);
  const auto cols = internal::RequireVraSchema(vra_stats);
  internal::CheckVraOrdering(vra_stats, cols);
  const double scale = 1.0 / eps;

  NoisyRelease out{vra_stats, eps, mechanism_names::kDLaplace,
                   SeedRecordOf(noise)};
  for (std::size_t a = 0; a < vra_stats.num_assignees(); ++a) {
    VraComponents c = Decompose({vra_stats.at(a, cols.vac),
                                 vra_stats.at(a, cols.lep),
                                 vra_stats.at(a, cols.lit)});
    c.lit += noise.laplace(scale);
    c.lep_minus_lit += noise.laplace(scale);
    c.vac_minus_lep += noise.laplace(scale);
    const VraTriple r = Recompose(c);
    out.stats.at(a, cols.vac) = r.vac;
    out.stats.at(a, cols.lep) = r.lep;
    out.stats.at(a, cols.lit) = r.lit;
  }
  return out;
}

// ---------------------------------------------------------------------------
// GroupSmooth
// ---------------------------------------------------------------------------

struct GroupSmoothParams {
  // Share of epsilon spent selecting the partition.
  double rho = 0.25;
  // Optional cap on bucket width.
  std::optional<std::size_t> max_bucket;
  // Partition-cost noise is Laplace(cost_noise_factor / eps_partition).
  double cost_noise_factor = 2.0;
  // When false the partition is chosen on exact costs (used for testing the
  // dynamic program against enumeration).
  bool perturb_costs = true;

  void Validate() const {
    if (!(rho > 0 && rho < 1)) {
      throw Error(ErrorCode::kDomainError, "rho must lie in (0,1)");
    }
    if (max_bucket && *max_bucket == 0) {
      throw Error(ErrorCode::kDomainError, "max_bucket must be >= 1");
    }
    if (!(cost_noise_factor > 0)) {
      throw Error(ErrorCode::kDomainError, "cost_noise_factor must be > 0");
    }
  }
};

// Contiguous buckets over [0, n). `ends` holds the exclusive end of each
// bucket in increasing order; the last end equals n.
struct Partition {
  std::vector<std::size_t> ends;

  std::size_t num_buckets() const { return ends.size(); }
  std::size_t size() const { return ends.empty() ? 0 : ends.back(); }

  std::vector<std::pair<std::size_t, std::size_t>> buckets() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t begin = 0;
    for (std::size_t e : ends) {
      out.emplace_back(begin, e);
      begin = e;
    }
    return out;
  }

  bool IsValidFor(std::size_t n) const {
    if (ends.empty()) return n == 0;
    std::size_t prev = 0;
    for (std::size_t e : ends) {
      if (e <= prev) return false;
      prev = e;
    }
    return prev == n;
  }

  friend bool operator==(const Partition&, const Partition&) = default;
};

// Sum of absolute deviations from the interval mean, by direct summation.
inline double IntervalDeviation(std::span<const double> x, std::size_t begin,
                                std::size_t end) {
  double sum = 0;
  for (std::size_t t = begin; t < end; ++t) sum += x[t];
  const double mean = sum / static_cast<double>(end - begin);
  double dev = 0;
  for (std::size_t t = begin; t < end; ++t) dev += std::fabs(x[t] - mean);
  return dev;
}

namespace internal {

// Fenwick tree over value ranks holding (count, sum) of inserted elements.
class RankFenwick {
 public:
  explicit RankFenwick(std::size_t n) : count_(n + 1, 0), sum_(n + 1, 0) {}

  void Add(std::size_t rank, std::int64_t dc, double ds) {
    for (std::size_t i = rank + 1; i < count_.size(); i += i & (~i + 1)) {
      count_[i] += dc;
      sum_[i] += ds;
    }
  }

  // Totals over ranks [0, k).
  std::pair<std::int64_t, double> Prefix(std::size_t k) const {
    std::int64_t c = 0;
    double s = 0;
    for (std::size_t i = k; i > 0; i -= i & (~i + 1)) {
      c += count_[i];
      s += sum_[i];
    }
    return {c, s};
  }

 private:
  std::vector<std::int64_t> count_;
  std::vector<double> sum_;
};

}  // namespace internal

struct PartitionResult {
  Partition partition;
  // Total (possibly perturbed) cost of the chosen partition.
  double cost = 0;
};

// Minimises sum over buckets of [deviation(bucket) + penalty + noise] with an
// O(n^2 log n) interval dynamic program. `cost_noise()` is called once per
// evaluated interval, with ends ascending and starts descending.
template <typename CostNoise>
PartitionResult OptimalPartition(std::span<const double> x, double penalty,
                                 std::optional<std::size_t> max_bucket,
                                 CostNoise&& cost_noise) {
  const std::size_t n = x.size();
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "empty input vector");
  const std::size_t width = max_bucket ? std::min(*max_bucket, n) : n;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<std::size_t> rank(n);
  std::vector<double> sorted(n);
  for (std::size_t r = 0; r < n; ++r) {
    rank[order[r]] = r;
    sorted[r] = x[order[r]];
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(n + 1, kInf);
  std::vector<std::size_t> prev(n + 1, 0);
  best[0] = 0;
  internal::RankFenwick tree(n);

  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t lo = j + 1 >= width ? j + 1 - width : 0;
    double total = 0;
    for (std::size_t i = j + 1; i-- > lo;) {
      tree.Add(rank[i], 1, x[i]);
      total += x[i];
      const std::int64_t len = static_cast<std::int64_t>(j - i + 1);
      const double mean = total / static_cast<double>(len);
      const std::size_t k = static_cast<std::size_t>(
          std::upper_bound(sorted.begin(), sorted.end(), mean) -
          sorted.begin());
      const auto [c_lo, s_lo] = tree.Prefix(k);
      const double dev = (total - s_lo) - s_lo +
                         mean * static_cast<double>(2 * c_lo - len);
      const double cost = dev + penalty + cost_noise();
      const double cand = best[i] + cost;
      if (cand < best[j + 1]) {
        best[j + 1] = cand;
        prev[j + 1] = i;
      }
    }
    for (std::size_t i = lo; i <= j; ++i) tree.Add(rank[i], -1, -x[i]);
  }

  PartitionResult result;
  result.cost = best[n];
  for (std::size_t e = n; e > 0; e = prev[e]) result.partition.ends.push_back(e);
  std::reverse(result.partition.ends.begin(), result.partition.ends.end());
  return result;
}

struct GroupSmoothResult {
  std::vector<double> values;
  Partition partition;
  double partition_cost = 0;
};

// Stage 1 spends rho*eps choosing a partition on noisy interval costs; stage 2
// spends the rest on Laplace(1/eps2) bucket totals, split evenly.
template <NoiseSource N>
GroupSmoothResult GroupSmooth(std::span<const double> x, double eps,
                              const GroupSmoothParams& params, N& noise) {
  internal::RequirePositiveEpsilon(eps);
  params.Validate();
  if (x.empty()) throw Error(ErrorCode::kEmptyInput, "empty input vector");

  const double eps_partition = params.rho * eps;
  const double eps_measure = (1.0 - params.rho) * eps;
  const double cost_scale = params.cost_noise_factor / eps_partition;
  const double penalty = 1.0 / eps_measure;

  GroupSmoothResult out;
  PartitionResult chosen =
      params.perturb_costs
          ? OptimalPartition(x, penalty, params.max_bucket,
                             [&] { return noise.laplace(cost_scale); })
          : OptimalPartition(x, penalty, params.max_bucket, [] { return 0.0; });
  out.partition = std::move(chosen.partition);
  out.partition_cost = chosen.cost;

  out.values.resize(x.size());
  for (const auto& [begin, end] : out.partition.buckets()) {
    double total = 0;
    for (std::size_t t = begin; t < end; ++t) total += x[t];
    total += noise.laplace(1.0 / eps_measure);
    const double share = total / static_cast<double>(end - begin);
    for (std::size_t t = begin; t < end; ++t) out.values[t] = share;
  }
  return out;
}

// GroupSmooth over selected columns of a matrix, each column treated as one
// ordered vector (assignee order). Columns are processed in the given order.
template <NoiseSource N>
NoisyRelease GroupSmoothColumns(const StatMatrix& x,
                                std::span<const QueryId> columns, double eps,
                                const GroupSmoothParams& params, N& noise) {
  NoisyRelease out{x, eps, mechanism_names::kGroupSmooth, SeedRecordOf(noise)};
  for (const auto& q : columns) {
    const std::size_t qi = x.require_query(q);
    const std::vector<double> col = x.column(q);
    const auto smoothed = GroupSmooth(col, eps, params, noise);
    for (std::size_t a = 0; a < x.num_assignees(); ++a) {
      out.stats.at(a, qi) = smoothed.values[a];
    }
  }
  return out;
}

// GroupSmooth on the decomposed voting-rights vector. The 3n components are
// laid out component-major ([q1..., q2..., q3...]) in assignee order, then
// re-cumulated exactly as DLaplace does.
template <NoiseSource N>
NoisyRelease GroupSmoothVra(const StatMatrix& vra_stats, double eps,
                            const GroupSmoothParams& params, N& noise) {
  internal::RequirePositiveEpsilon(eps);
  const auto cols = internal::RequireVraSchema(vra_stats);
  internal::CheckVraOrdering(vra_stats, cols);
  const std::size_t n = vra_stats.num_assignees();

  std::vector<double> flat(3 * n);
  for (std::size_t a = 0; a < n; ++a) {
    const VraComponents c = Decompose({vra_stats.at(a, cols.vac),
                                       vra_stats.at(a, cols.lep),
                                       vra_stats.at(a, cols.lit)});
    flat[a] = c.lit;
    flat[n + a] = c.lep_minus_lit;
    flat[2 * n + a] = c.vac_minus_lep;
  }
  const auto smoothed = GroupSmooth(flat, eps, params, noise);

  NoisyRelease out{vra_stats, eps, mechanism_names::kGroupSmooth,
                   SeedRecordOf(noise)};
  for (std::size_t a = 0; a < n; ++a) {
    const VraTriple r = Recompose({smoothed.values[a], smoothed.values[n + a],
                                   smoothed.values[2 * n + a]});
    out.stats.at(a, cols.vac) = r.vac;
    out.stats.at(a, cols.lep) = r.lep;
    out.stats.at(a, cols.lit) = r.lit;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Post-processing and utilities
// ---------------------------------------------------------------------------

inline std::vector<double> ClipNonnegative(std::vector<double> v) {
  for (double& x : v) x = std::max(x, 0.0);
  return v;
}

inline NoisyRelease ClipNonnegative(NoisyRelease r) {
  for (double& x : r.stats.mutable_values()) x = std::max(x, 0.0);
  return r;
}

// tau(eps, delta) = ln(1/delta) / eps: the count difference no eps-DP
// algorithm can distinguish except with probability delta.
inline double IndistThreshold(double eps, double delta) {
  if (!(eps > 0) || !std::isfinite(eps) || !(delta > 0 && delta <= 1)) {
    throw Error(ErrorCode::kDomainError,
                "tau requires eps > 0 and delta in (0, 1]");
  }
  return -std::log(delta) / eps;
}

}  // namespace dpalloc

#endif  // DPALLOC_MECHANISMS_HPP_
