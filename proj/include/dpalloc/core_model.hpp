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
// Assignment-problem data model: assignees, statistic matrices, noisy
// releases, outcome vectors and Monte Carlo ensembles of outcomes.
//
#ifndef DPALLOC_CORE_MODEL_HPP_
#define DPALLOC_CORE_MODEL_HPP_

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "dpalloc/error.hpp"

namespace dpalloc {

// Opaque string key. The tag keeps assignee and query ids from mixing.
template <typename Tag>
class StrongId {
 public:
  StrongId() = default;
  explicit StrongId(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const StrongId&, const StrongId&) = default;
  friend bool operator==(const StrongId&, const StrongId&) = default;

 private:
  std::string value_;
};

struct AssigneeTag {};
struct QueryTag {};
using AssigneeId = StrongId<AssigneeTag>;
using QueryId = StrongId<QueryTag>;

namespace queries {
inline const QueryId kVac{"vac"};
inline const QueryId kLep{"lep"};
inline const QueryId kLit{"lit"};
inline const QueryId kEli{"eli"};
inline const QueryId kExp{"exp"};
inline const QueryId kTot{"tot"};
}  // namespace queries

inline std::vector<AssigneeId> MakeAssigneeIds(
    std::initializer_list<const char*> names) {
  std::vector<AssigneeId> out;
  for (const char* n : names) out.emplace_back(n);
  return out;
}

// Row-major matrix X[a][q] of per-assignee statistics.
class StatMatrix {
 public:
  StatMatrix() = default;

  StatMatrix(std::vector<AssigneeId> assignees, std::vector<QueryId> queries,
             std::vector<double> values)
      : assignees_(std::move(assignees)),
        queries_(std::move(queries)),
        values_(std::move(values)) {
    if (values_.size() != assignees_.size() * queries_.size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "matrix has " + std::to_string(values_.size()) +
                      " values for " + std::to_string(assignees_.size()) +
                      "x" + std::to_string(queries_.size()));
    }
    CheckUnique(assignees_, ErrorCode::kDuplicateAssignee, "assignee");
    CheckUnique(queries_, ErrorCode::kSchemaMismatch, "query");
  }

  std::size_t num_assignees() const noexcept { return assignees_.size(); }
  std::size_t num_queries() const noexcept { return queries_.size(); }
  const std::vector<AssigneeId>& assignees() const noexcept {
    return assignees_;
  }
  const std::vector<QueryId>& queries() const noexcept { return queries_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> mutable_values() noexcept { return values_; }

  double at(std::size_t a, std::size_t q) const {
    return values_[a * queries_.size() + q];
  }
  double& at(std::size_t a, std::size_t q) {
    return values_[a * queries_.size() + q];
  }

  std::optional<std::size_t> query_index(const QueryId& q) const {
    for (std::size_t i = 0; i < queries_.size(); ++i) {
      if (queries_[i] == q) return i;
    }
    return std::nullopt;
  }

  std::size_t require_query(const QueryId& q) const {
    auto idx = query_index(q);
    if (!idx) throw Error(ErrorCode::kMissingQuery, "query '" + q.str() + "'");
    return *idx;
  }

  std::vector<double> column(const QueryId& q) const {
    const std::size_t qi = require_query(q);
    std::vector<double> out(assignees_.size());
    for (std::size_t a = 0; a < assignees_.size(); ++a) out[a] = at(a, qi);
    return out;
  }

  bool same_shape(const StatMatrix& other) const {
    return assignees_ == other.assignees_ && queries_ == other.queries_;
  }

  friend bool operator==(const StatMatrix&, const StatMatrix&) = default;

 private:
  template <typename Id>
  static void CheckUnique(const std::vector<Id>& ids, ErrorCode code,
                          const char* what) {
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
      if (id.empty()) {
        throw Error(ErrorCode::kEmptyId, std::string("empty ") + what + " id");
      }
      if (!seen.insert(id.str()).second) {
        throw Error(code, std::string("duplicate ") + what + " '" + id.str() +
                              "'");
      }
    }
  }

  std::vector<AssigneeId> assignees_;
  std::vector<QueryId> queries_;
  std::vector<double> values_;
};

enum class DataMode { kTrue, kNoisy };

// Succeeds iff every schema query is present and every value is finite; true
// data must also be non-negative.
inline void ValidateStatMatrix(const StatMatrix& m,
                               std::span<const QueryId> schema,
                               DataMode mode = DataMode::kTrue) {
  for (const auto& q : schema) m.require_query(q);
  for (std::size_t a = 0; a < m.num_assignees(); ++a) {
    for (std::size_t q = 0; q < m.num_queries(); ++q) {
      const double v = m.at(a, q);
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFiniteValue,
                    m.assignees()[a].str() + "/" + m.queries()[q].str());
      }
      if (mode == DataMode::kTrue && v < 0) {
        throw Error(ErrorCode::kNegativeTrueCount,
                    m.assignees()[a].str() + "/" + m.queries()[q].str() +
                        " = " + std::to_string(v));
      }
    }
  }
}

struct NoisyRelease {
  StatMatrix stats;
  double epsilon = 0;
  std::string mechanism;
  std::uint64_t trial_seed = 0;
};

struct PrivacyParams {
  double epsilon;
  double delta;

  PrivacyParams(double eps, double del) : epsilon(eps), delta(del) {
    if (!(epsilon > 0)) throw Error(ErrorCode::kNonPositiveEpsilon, "");
    if (!(delta > 0 && delta < 1)) {
      throw Error(ErrorCode::kDomainError, "delta must lie in (0,1)");
    }
  }
};

enum class CoverageLabel : std::uint8_t { kNotCovered = 0, kCovered = 1 };

inline const char* LabelName(CoverageLabel l) {
  return l == CoverageLabel::kCovered ? "Covered" : "NotCovered";
}

using Fractions = std::vector<double>;
using Seats = std::vector<std::int64_t>;
using Labels = std::vector<CoverageLabel>;

// One outcome per assignee. `degenerate` marks a fallback outcome (e.g. the
// uniform Title I split when every noisy count was clipped to zero).
struct OutcomeVector {
  using Outcomes = std::variant<Fractions, Seats, Labels>;

  std::vector<AssigneeId> assignees;
  Outcomes outcomes;
  bool degenerate = false;

  std::size_t size() const {
    return std::visit([](const auto& v) { return v.size(); }, outcomes);
  }
  const Fractions& fractions() const { return std::get<Fractions>(outcomes); }
  const Seats& seats() const { return std::get<Seats>(outcomes); }
  const Labels& labels() const { return std::get<Labels>(outcomes); }

  friend bool operator==(const OutcomeVector&, const OutcomeVector&) = default;
};

class TrialEnsemble {
 public:
  TrialEnsemble() = default;
  explicit TrialEnsemble(std::uint64_t base_seed) : base_seed_(base_seed) {}

  void Add(OutcomeVector trial) {
    if (!trials_.empty() && trial.assignees != trials_.front().assignees) {
      throw Error(ErrorCode::kShapeMismatch,
                  "trial assignee ordering differs from the ensemble");
    }
    if (!trials_.empty() &&
        trial.outcomes.index() != trials_.front().outcomes.index()) {
      throw Error(ErrorCode::kShapeMismatch, "trial outcome kind differs");
    }
    if (trial.degenerate) ++degenerate_trials_;
    trials_.push_back(std::move(trial));
  }

  std::size_t n_trials() const noexcept { return trials_.size(); }
  std::uint64_t base_seed() const noexcept { return base_seed_; }
  std::int64_t degenerate_trials() const noexcept {
    return degenerate_trials_;
  }
  const std::vector<OutcomeVector>& trials() const noexcept { return trials_; }
  const OutcomeVector& operator[](std::size_t i) const { return trials_[i]; }
  const std::vector<AssigneeId>& assignees() const {
    static const std::vector<AssigneeId> kEmpty;
    return trials_.empty() ? kEmpty : trials_.front().assignees;
  }

  friend bool operator==(const TrialEnsemble&, const TrialEnsemble&) = default;

 private:
  std::vector<OutcomeVector> trials_;
  std::uint64_t base_seed_ = 0;
  std::int64_t degenerate_trials_ = 0;
};

// Reproducibility record embedded in every report.
struct ConfigEcho {
  std::string problem;
  std::string mechanism;
  std::string pipeline;
  std::vector<double> epsilons;
  std::int64_t n_trials = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> params;

  friend bool operator==(const ConfigEcho&, const ConfigEcho&) = default;
};

// Metric values for one epsilon. Per-assignee vectors are aligned with
// FairnessReport::assignees; std::nullopt marks an undefined value.
struct EpsilonBlock {
  double epsilon = 0;
  std::map<std::string, std::vector<std::optional<double>>> per_assignee;
  std::map<std::string, double> aggregates;

  friend bool operator==(const EpsilonBlock&, const EpsilonBlock&) = default;
};

struct FairnessReport {
  ConfigEcho config;
  std::vector<AssigneeId> assignees;
  std::vector<EpsilonBlock> blocks;

  friend bool operator==(const FairnessReport&, const FairnessReport&) =
      default;
};

}  // namespace dpalloc

#endif  // DPALLOC_CORE_MODEL_HPP_
