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
// Seeded Monte Carlo runner.
//
// Each trial runs mechanism -> clip_nonnegative -> allocator (or a repair
// rule) on a stream derived from (base seed, epsilon index, trial index), so
// a trial's outcome depends on nothing but its own coordinates. Trials may be
// spread over any number of worker threads; results are stored by trial index
// and reduced in that order.
//
#ifndef DPALLOC_HARNESS_HPP_
#define DPALLOC_HARNESS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dpalloc/allocators.hpp"
#include "dpalloc/core_model.hpp"
#include "dpalloc/error.hpp"
#include "dpalloc/mechanisms.hpp"
#include "dpalloc/metrics.hpp"
#include "dpalloc/repair.hpp"
#include "dpalloc/rng.hpp"

namespace dpalloc {

enum class Problem { kVra, kTitle1, kApportionment };
enum class Mechanism { kLaplace, kDLaplace, kGroupSmooth };
enum class RepairMode { kNone, kVraPosterior, kTitle1Inflation };
// Ordering key used when counting inversions in Title I allocations.
enum class EntitlementKey { kWeighted, kEligibleOnly };

inline const char* ProblemName(Problem p) {
  switch (p) {
    case Problem::kVra: return problem_names::kVra;
    case Problem::kTitle1: return problem_names::kTitle1;
    case Problem::kApportionment: return problem_names::kApportionment;
  }
  return "";
}

inline const char* MechanismName(Mechanism m) {
  switch (m) {
    case Mechanism::kLaplace: return mechanism_names::kLaplace;
    case Mechanism::kDLaplace: return mechanism_names::kDLaplace;
    case Mechanism::kGroupSmooth: return mechanism_names::kGroupSmooth;
  }
  return "";
}

inline Problem ParseProblem(const std::string& s) {
  if (s == problem_names::kVra) return Problem::kVra;
  if (s == problem_names::kTitle1) return Problem::kTitle1;
  if (s == problem_names::kApportionment) return Problem::kApportionment;
  throw Error(ErrorCode::kInvalidConfig, "unknown problem '" + s + "'");
}

inline Mechanism ParseMechanism(const std::string& s) {
  if (s == mechanism_names::kLaplace) return Mechanism::kLaplace;
  if (s == mechanism_names::kDLaplace) return Mechanism::kDLaplace;
  if (s == mechanism_names::kGroupSmooth) return Mechanism::kGroupSmooth;
  throw Error(ErrorCode::kInvalidConfig, "unknown mechanism '" + s + "'");
}

inline std::vector<QueryId> SchemaFor(Problem p) {
  switch (p) {
    case Problem::kVra: return {queries::kVac, queries::kLep, queries::kLit};
    case Problem::kTitle1: return {queries::kEli, queries::kExp};
    case Problem::kApportionment: return {queries::kTot};
  }
  return {};
}

inline constexpr std::int64_t kDefaultTrials = 1000;

struct ExperimentConfig {
  Problem problem = Problem::kTitle1;
  Mechanism mechanism = Mechanism::kLaplace;
  std::vector<double> epsilons;
  std::int64_t n_trials = kDefaultTrials;
  std::uint64_t base_seed = 0;

  VraThresholds thresholds;
  std::int64_t seat_total = kDefaultSeatTotal;
  GroupSmoothParams group_smooth;

  RepairMode repair = RepairMode::kNone;
  RepairParams vra_repair;
  double inflation_delta = 0.05;
  SlackConstant slack_constant = SlackConstant::kProof;

  DistanceSpace distance_space = DistanceSpace::kRaw;
  EntitlementKey entitlement = EntitlementKey::kWeighted;

  std::string data_path;
  // Not part of the echo: results do not depend on it.
  int threads = 1;
  // Replace mechanism noise by zeros (baselines and tests).
  bool zero_noise = false;

  void Validate() const {
    if (n_trials < 1) {
      throw Error(ErrorCode::kInvalidConfig, "trials must be >= 1");
    }
    if (epsilons.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "epsilon list is empty");
    }
    for (double e : epsilons) {
      if (!(e > 0) || !std::isfinite(e)) {
        throw Error(ErrorCode::kNonPositiveEpsilon,
                    "every epsilon must be positive and finite");
      }
    }
    if (threads < 1) {
      throw Error(ErrorCode::kInvalidConfig, "threads must be >= 1");
    }
    if (seat_total < 1) {
      throw Error(ErrorCode::kInvalidConfig, "seat total must be >= 1");
    }
    thresholds.Validate();
    group_smooth.Validate();
    if (mechanism == Mechanism::kDLaplace && problem != Problem::kVra) {
      throw Error(ErrorCode::kInvalidConfig,
                  "dlaplace applies only to the vra problem");
    }
    switch (repair) {
      case RepairMode::kNone: break;
      case RepairMode::kVraPosterior:
        if (problem != Problem::kVra || mechanism != Mechanism::kDLaplace) {
          throw Error(ErrorCode::kInvalidConfig,
                      "posterior repair needs problem vra with dlaplace");
        }
        vra_repair.Validate();
        break;
      case RepairMode::kTitle1Inflation:
        if (problem != Problem::kTitle1 || mechanism != Mechanism::kLaplace) {
          throw Error(ErrorCode::kInvalidConfig,
                      "inflationary repair needs problem title1 with laplace");
        }
        if (!(inflation_delta > 0 && inflation_delta < 1)) {
          throw Error(ErrorCode::kDomainError, "delta must lie in (0,1)");
        }
        break;
    }
  }
};

inline std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string PipelineDescription(const ExperimentConfig& cfg) {
  std::string m = MechanismName(cfg.mechanism);
  if (cfg.zero_noise) m += "(zero-noise)";
  switch (cfg.repair) {
    case RepairMode::kVraPosterior:
      return m + " -> posterior_repair";
    case RepairMode::kTitle1Inflation:
      return m + " -> clip_nonnegative -> inflationary_allocate";
    case RepairMode::kNone: break;
  }
  switch (cfg.problem) {
    case Problem::kVra: return m + " -> clip_nonnegative -> vra_classify";
    case Problem::kTitle1: return m + " -> clip_nonnegative -> title1_allocate";
    case Problem::kApportionment:
      return m + " -> clip_nonnegative -> apportion";
  }
  return m;
}

inline ConfigEcho MakeConfigEcho(const ExperimentConfig& cfg) {
  ConfigEcho echo;
  echo.problem = ProblemName(cfg.problem);
  echo.mechanism = MechanismName(cfg.mechanism);
  echo.pipeline = PipelineDescription(cfg);
  echo.epsilons = cfg.epsilons;
  echo.n_trials = cfg.n_trials;
  echo.seed = cfg.base_seed;
  auto& p = echo.params;
  p["data"] = cfg.data_path;
  p["zero_noise"] = cfg.zero_noise ? "true" : "false";
  switch (cfg.problem) {
    case Problem::kVra:
      p["threshold_pct"] = FormatDouble(cfg.thresholds.pct);
      p["threshold_abs"] = FormatDouble(cfg.thresholds.abs);
      p["threshold_illit"] = FormatDouble(cfg.thresholds.illit);
      p["distance_space"] =
          cfg.distance_space == DistanceSpace::kRaw ? "raw" : "epsilon_scaled";
      break;
    case Problem::kTitle1:
      p["entitlement"] = cfg.entitlement == EntitlementKey::kWeighted
                             ? "exp*eli"
                             : "eli";
      break;
    case Problem::kApportionment:
      p["seat_total"] = std::to_string(cfg.seat_total);
      break;
  }
  if (cfg.mechanism == Mechanism::kGroupSmooth) {
    p["rho"] = FormatDouble(cfg.group_smooth.rho);
    p["cost_noise_factor"] = FormatDouble(cfg.group_smooth.cost_noise_factor);
    p["max_bucket"] = cfg.group_smooth.max_bucket
                          ? std::to_string(*cfg.group_smooth.max_bucket)
                          : "none";
  }
  if (cfg.repair == RepairMode::kVraPosterior) {
    p["p"] = FormatDouble(cfg.vra_repair.p);
    p["samples"] = std::to_string(cfg.vra_repair.n_samples);
  }
  if (cfg.repair == RepairMode::kTitle1Inflation) {
    p["delta"] = FormatDouble(cfg.inflation_delta);
    p["slack_constant"] =
        cfg.slack_constant == SlackConstant::kProof ? "proof" : "body";
  }
  return echo;
}

inline void ValidateForProblem(const StatMatrix& data, Problem problem) {
  const auto schema = SchemaFor(problem);
  ValidateStatMatrix(data, schema, DataMode::kTrue);
  if (data.num_assignees() == 0) {
    throw Error(ErrorCode::kEmptyInput, "dataset has no assignees");
  }
}

// Ground-truth outcome: the standard rule on the true statistics.
inline OutcomeVector TruthOutcome(const ExperimentConfig& cfg,
                                  const StatMatrix& data) {
  switch (cfg.problem) {
    case Problem::kVra:
      return OutcomeVector{data.assignees(),
                           VraClassifyAll(data, cfg.thresholds)};
    case Problem::kTitle1: return Title1Outcome(data);
    case Problem::kApportionment:
      return ApportionOutcome(data, cfg.seat_total);
  }
  return {};
}

struct EpsilonEnsemble {
  double epsilon = 0;
  TrialEnsemble ensemble;
  // Inflationary repair only: the budget multiple of each trial.
  std::vector<double> budget_factors;
};

namespace internal {

struct TrialResult {
  OutcomeVector outcome;
  std::optional<double> budget_factor;
};

template <NoiseSource N>
NoisyRelease Release(const ExperimentConfig& cfg, const StatMatrix& data,
                     double eps, N& noise) {
  static const QueryId kEliOnly[] = {queries::kEli};
  static const QueryId kTotOnly[] = {queries::kTot};
  switch (cfg.problem) {
    case Problem::kVra:
      switch (cfg.mechanism) {
        case Mechanism::kDLaplace: return DLaplace(data, eps, noise);
        // Undecomposed {vac, lep, lit} has sensitivity 3.
        case Mechanism::kLaplace: return VectorLaplace(data, 3.0, eps, noise);
        case Mechanism::kGroupSmooth:
          return GroupSmoothVra(data, eps, cfg.group_smooth, noise);
      }
      break;
    case Problem::kTitle1:
      // Expenditures are public; only eligible counts are noised.
      if (cfg.mechanism == Mechanism::kGroupSmooth) {
        return GroupSmoothColumns(data, kEliOnly, eps, cfg.group_smooth, noise);
      }
      return VectorLaplace(data, 1.0, eps, noise, kEliOnly);
    case Problem::kApportionment:
      if (cfg.mechanism == Mechanism::kGroupSmooth) {
        return GroupSmoothColumns(data, kTotOnly, eps, cfg.group_smooth, noise);
      }
      return VectorLaplace(data, 1.0, eps, noise, kTotOnly);
  }
  throw Error(ErrorCode::kInvalidConfig, "unsupported configuration");
}

template <NoiseSource N>
TrialResult RunTrialWith(const ExperimentConfig& cfg, const StatMatrix& data,
                         double eps, N& noise, const RngStream& trial_stream) {
  const NoisyRelease raw = Release(cfg, data, eps, noise);
  TrialResult r;
  r.outcome.assignees = data.assignees();

  if (cfg.repair == RepairMode::kVraPosterior) {
    // The posterior needs the unclipped release to invert the noise law.
    Labels labels(data.num_assignees());
    for (std::size_t a = 0; a < data.num_assignees(); ++a) {
      RngStream posterior_stream = trial_stream.fork(a);
      labels[a] = RepairClassify(VraRow(raw.stats, a), eps, cfg.vra_repair,
                                 posterior_stream, cfg.thresholds);
    }
    r.outcome.outcomes = std::move(labels);
    return r;
  }

  const NoisyRelease clipped = ClipNonnegative(raw);
  switch (cfg.problem) {
    case Problem::kVra:
      r.outcome.outcomes = VraClassifyAll(clipped.stats, cfg.thresholds);
      break;
    case Problem::kTitle1: {
      const auto eli = clipped.stats.column(queries::kEli);
      const auto exp = clipped.stats.column(queries::kExp);
      if (cfg.repair == RepairMode::kTitle1Inflation) {
        auto inflated = InflationaryAllocate(eli, exp, eps, cfg.inflation_delta,
                                             cfg.slack_constant);
        r.budget_factor = inflated.params.budget_factor;
        r.outcome.outcomes = std::move(inflated.allocation);
      } else {
        auto alloc = Title1Allocate(eli, exp);
        r.outcome.degenerate = alloc.degenerate;
        r.outcome.outcomes = std::move(alloc.fractions);
      }
      break;
    }
    case Problem::kApportionment:
      r.outcome.outcomes =
          Apportion(clipped.stats.column(queries::kTot), cfg.seat_total);
      break;
  }
  return r;
}

inline TrialResult RunTrial(const ExperimentConfig& cfg, const StatMatrix& data,
                            std::size_t eps_index, std::size_t trial_index) {
  const double eps = cfg.epsilons[eps_index];
  RngStream stream =
      DeriveTrialStream(cfg.base_seed, eps_index, trial_index);
  if (cfg.zero_noise) {
    ZeroNoise zero;
    return RunTrialWith(cfg, data, eps, zero, stream);
  }
  RngStream noise = stream;
  return RunTrialWith(cfg, data, eps, noise, stream);
}

}  // namespace internal

inline std::vector<EpsilonEnsemble> RunEnsemble(const ExperimentConfig& cfg,
                                                const StatMatrix& data) {
  cfg.Validate();
  ValidateForProblem(data, cfg.problem);

  std::vector<EpsilonEnsemble> out;
  const auto n_trials = static_cast<std::size_t>(cfg.n_trials);
  for (std::size_t ei = 0; ei < cfg.epsilons.size(); ++ei) {
    std::vector<std::optional<internal::TrialResult>> slots(n_trials);
    std::vector<std::exception_ptr> errors(n_trials);

    auto worker = [&](std::size_t first, std::size_t stride) {
      for (std::size_t t = first; t < n_trials; t += stride) {
        try {
          slots[t] = internal::RunTrial(cfg, data, ei, t);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      }
    };
    const auto n_workers = static_cast<std::size_t>(
        std::min<std::int64_t>(cfg.threads, cfg.n_trials));
    if (n_workers <= 1) {
      worker(0, 1);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < n_workers; ++w) {
        pool.emplace_back(worker, w, n_workers);
      }
    }
    // Report the lowest-index failure so errors are schedule independent.
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    EpsilonEnsemble ee{cfg.epsilons[ei], TrialEnsemble(cfg.base_seed), {}};
    for (auto& slot : slots) {
      if (slot->budget_factor) ee.budget_factors.push_back(*slot->budget_factor);
      ee.ensemble.Add(std::move(slot->outcome));
    }
    out.push_back(std::move(ee));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

using MetricSelection = std::set<std::string>;

inline MetricSelection DefaultMetrics(Problem p) {
  switch (p) {
    case Problem::kVra:
      return {metric_names::kClassRate, metric_names::kDistThresh};
    case Problem::kTitle1:
      return {metric_names::kMultErr, metric_names::kMisalloc,
              metric_names::kInversions};
    case Problem::kApportionment:
      return {metric_names::kMaxMult, metric_names::kAvgExpDev};
  }
  return {};
}

namespace internal {

inline std::vector<std::optional<double>> Defined(const std::vector<double>& v) {
  return {v.begin(), v.end()};
}

inline void AggregateVra(const EpsilonEnsemble& ee, const OutcomeVector& truth,
                         const ExperimentConfig& cfg, const StatMatrix& data,
                         const MetricSelection& sel, EpsilonBlock& block) {
  if (sel.count(metric_names::kClassRate)) {
    const auto r = ClassificationRates(ee.ensemble, truth);
    block.per_assignee[metric_names::kClassRate] = Defined(r.rates);
    if (r.min_covered) {
      block.aggregates["class_rate_min_covered"] = *r.min_covered;
    }
    if (r.min_not_covered) {
      block.aggregates["class_rate_min_not_covered"] = *r.min_not_covered;
    }
    block.aggregates["expected_false_positives"] = r.expected_false_positives;
    block.aggregates["expected_false_negatives"] = r.expected_false_negatives;
  }
  if (sel.count(metric_names::kDistThresh)) {
    std::vector<double> d(data.num_assignees());
    for (std::size_t a = 0; a < d.size(); ++a) {
      const VraTriple x = VraRow(data, a);
      d[a] = DistanceToThreshold(x.vac, x.lep, x.lit, cfg.thresholds,
                                 cfg.distance_space, ee.epsilon);
    }
    block.per_assignee[metric_names::kDistThresh] = Defined(d);
  }
}

inline void AggregateTitle1(const EpsilonEnsemble& ee,
                            const OutcomeVector& truth,
                            const ExperimentConfig& cfg,
                            const StatMatrix& data, const MetricSelection& sel,
                            EpsilonBlock& block) {
  if (sel.count(metric_names::kMultErr)) {
    auto m = MultiplicativeError(ee.ensemble, truth);
    std::optional<double> lo, hi;
    for (const auto& v : m) {
      if (!v) continue;
      lo = lo ? std::min(*lo, *v) : *v;
      hi = hi ? std::max(*hi, *v) : *v;
    }
    if (lo) block.aggregates["mult_err_min"] = *lo;
    if (hi) block.aggregates["mult_err_max"] = *hi;
    block.per_assignee[metric_names::kMultErr] = std::move(m);
  }
  if (sel.count(metric_names::kMisalloc)) {
    const auto r = Misallocation(ee.ensemble, truth);
    block.per_assignee[metric_names::kMisalloc] = Defined(r.gamma);
    block.aggregates["misalloc_total"] = r.total_abs;
    block.aggregates["misalloc_min"] = r.min;
    block.aggregates["misalloc_max"] = r.max;
  }
  if (sel.count(metric_names::kInversions)) {
    const auto eli = data.column(queries::kEli);
    const auto exp = data.column(queries::kExp);
    std::vector<double> entitlement(eli.size());
    for (std::size_t a = 0; a < eli.size(); ++a) {
      entitlement[a] =
          cfg.entitlement == EntitlementKey::kWeighted ? exp[a] * eli[a]
                                                       : eli[a];
    }
    block.aggregates[metric_names::kInversions] = static_cast<double>(
        CountInversions(EnsembleMeans(ee.ensemble), entitlement));
  }
  block.aggregates["degenerate_trials"] =
      static_cast<double>(ee.ensemble.degenerate_trials());
  if (!ee.budget_factors.empty()) {
    block.aggregates["budget_factor_mean"] =
        OrderFreeMean(ee.budget_factors);
  }
}

inline void AggregateApportionment(const EpsilonEnsemble& ee,
                                   const OutcomeVector& truth,
                                   const ExperimentConfig& cfg,
                                   const StatMatrix& data,
                                   const MetricSelection& sel,
                                   EpsilonBlock& block) {
  const QuotaVector quotas = Quotas(data.column(queries::kTot), cfg.seat_total);
  TrialEnsemble baseline;
  baseline.Add(truth);
  if (sel.count(metric_names::kMaxMult)) {
    block.aggregates[metric_names::kMaxMult] =
        MaxMultiplicative(ee.ensemble, quotas);
    block.aggregates["max_mult_baseline"] = MaxMultiplicative(baseline, quotas);
  }
  if (sel.count(metric_names::kAvgExpDev)) {
    block.per_assignee[metric_names::kAvgExpDev] =
        Defined(ExpectedDeviations(ee.ensemble, quotas));
    block.aggregates[metric_names::kAvgExpDev] =
        AvgExpectedDeviation(ee.ensemble, quotas);
    block.aggregates["avg_exp_dev_baseline"] =
        AvgExpectedDeviation(baseline, quotas);
  }
}

}  // namespace internal

inline FairnessReport Aggregate(const std::vector<EpsilonEnsemble>& ensembles,
                                const OutcomeVector& truth,
                                const ExperimentConfig& cfg,
                                const StatMatrix& data,
                                const MetricSelection& selection) {
  FairnessReport report;
  report.config = MakeConfigEcho(cfg);
  if (selection.empty()) return report;
  if (truth.assignees != data.assignees()) {
    throw Error(ErrorCode::kShapeMismatch, "truth/data assignee ordering");
  }
  report.assignees = truth.assignees;
  for (const auto& ee : ensembles) {
    if (ee.ensemble.assignees() != truth.assignees) {
      throw Error(ErrorCode::kShapeMismatch, "ensemble/truth ordering");
    }
    EpsilonBlock block;
    block.epsilon = ee.epsilon;
    switch (cfg.problem) {
      case Problem::kVra:
        internal::AggregateVra(ee, truth, cfg, data, selection, block);
        break;
      case Problem::kTitle1:
        internal::AggregateTitle1(ee, truth, cfg, data, selection, block);
        break;
      case Problem::kApportionment:
        internal::AggregateApportionment(ee, truth, cfg, data, selection,
                                         block);
        break;
    }
    report.blocks.push_back(std::move(block));
  }
  return report;
}

inline FairnessReport Aggregate(const std::vector<EpsilonEnsemble>& ensembles,
                                const OutcomeVector& truth,
                                const ExperimentConfig& cfg,
                                const StatMatrix& data) {
  return Aggregate(ensembles, truth, cfg, data, DefaultMetrics(cfg.problem));
}

// Validate, run every epsilon, and aggregate with the default metric suite.
inline FairnessReport RunExperiment(const ExperimentConfig& cfg,
                                    const StatMatrix& data) {
  const auto ensembles = RunEnsemble(cfg, data);
  return Aggregate(ensembles, TruthOutcome(cfg, data), cfg, data);
}

}  // namespace dpalloc

#endif  // DPALLOC_HARNESS_HPP_
