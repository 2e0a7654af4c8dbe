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
// dpalloc: command-line front end.
//
//   dpalloc run --problem P --mechanism M --epsilon e1[,e2...] --trials N
//               --seed S --data in.csv --out report [--format json|csv-long]
//   dpalloc repair vra --p P --samples N ...
//   dpalloc repair title1 --delta D ...
//   dpalloc synth --profile NAME --n N --seed S --out data.csv
//   dpalloc tau --epsilon E --delta D
//
// Exit status: 0 success, 2 input error, 3 degenerate configuration.
//
#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpalloc/dpalloc.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitDegenerate = 3;

struct RunFlags {
  std::string problem;
  std::string mechanism;
  std::vector<double> epsilons;
  std::int64_t trials = dpalloc::kDefaultTrials;
  std::uint64_t seed = 0;
  std::string data;
  std::optional<double> rho;
  std::optional<std::int64_t> max_bucket;
  std::int64_t seats = dpalloc::kDefaultSeatTotal;
  std::string out;
  std::string format = "json";
  int threads = 1;
  std::string entitlement = "weighted";
  bool scaled_distance = false;

  double p = 0.5;
  std::int64_t samples = 100;
  double delta = 0.05;
  std::string slack = "proof";
};

void AddRunFlags(CLI::App* cmd, RunFlags& f, bool with_problem,
                 bool with_mechanism) {
  if (with_problem) {
    cmd->add_option("--problem", f.problem, "vra | title1 | apportionment")
        ->required()
        ->check(CLI::IsMember({"vra", "title1", "apportionment"}));
  }
  auto* mech = cmd->add_option("--mechanism", f.mechanism,
                               "laplace | dlaplace | groupsmooth")
                   ->check(CLI::IsMember({"laplace", "dlaplace",
                                          "groupsmooth"}));
  if (with_mechanism) mech->required();
  cmd->add_option("--epsilon", f.epsilons, "privacy loss, comma separated")
      ->required()
      ->delimiter(',');
  cmd->add_option("--trials", f.trials, "trials per epsilon")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "base seed")->capture_default_str();
  cmd->add_option("--data", f.data, "input CSV")->required();
  cmd->add_option("--rho", f.rho, "GroupSmooth budget share for partitioning");
  cmd->add_option("--max-bucket", f.max_bucket, "GroupSmooth bucket cap");
  cmd->add_option("--seats", f.seats, "apportionment house size")
      ->capture_default_str();
  cmd->add_option("--out", f.out, "output path")->required();
  cmd->add_option("--format", f.format, "json | csv-long")
      ->check(CLI::IsMember({"json", "csv-long"}))
      ->capture_default_str();
  cmd->add_option("--threads", f.threads, "worker threads")
      ->capture_default_str();
  cmd->add_option("--entitlement", f.entitlement,
                  "Title I inversion key: weighted (exp*eli) | eli")
      ->check(CLI::IsMember({"weighted", "eli"}))
      ->capture_default_str();
  cmd->add_flag("--scaled-distance", f.scaled_distance,
                "report distance to threshold in units of 1/epsilon");
}

dpalloc::ExperimentConfig ToConfig(const RunFlags& f) {
  dpalloc::ExperimentConfig cfg;
  cfg.problem = dpalloc::ParseProblem(f.problem);
  cfg.mechanism = dpalloc::ParseMechanism(f.mechanism);
  cfg.epsilons = f.epsilons;
  cfg.n_trials = f.trials;
  cfg.base_seed = f.seed;
  cfg.data_path = f.data;
  if (f.rho) cfg.group_smooth.rho = *f.rho;
  if (f.max_bucket) {
    if (*f.max_bucket < 1) {
      throw dpalloc::Error(dpalloc::ErrorCode::kInvalidConfig,
                           "--max-bucket must be >= 1");
    }
    cfg.group_smooth.max_bucket = static_cast<std::size_t>(*f.max_bucket);
  }
  cfg.seat_total = f.seats;
  cfg.threads = f.threads;
  cfg.entitlement = f.entitlement == "eli" ? dpalloc::EntitlementKey::kEligibleOnly
                                           : dpalloc::EntitlementKey::kWeighted;
  cfg.distance_space = f.scaled_distance ? dpalloc::DistanceSpace::kEpsilonScaled
                                         : dpalloc::DistanceSpace::kRaw;
  cfg.vra_repair = {f.p, f.samples};
  cfg.inflation_delta = f.delta;
  cfg.slack_constant = f.slack == "body" ? dpalloc::SlackConstant::kBody
                                         : dpalloc::SlackConstant::kProof;
  return cfg;
}

void Execute(const dpalloc::ExperimentConfig& cfg, const RunFlags& f) {
  const dpalloc::StatMatrix data = dpalloc::LoadCsv(f.data, cfg.problem);
  const dpalloc::FairnessReport report = dpalloc::RunExperiment(cfg, data);
  dpalloc::EmitReport(report, dpalloc::ParseReportFormat(f.format), f.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private statistics in resource allocation"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "run a Monte Carlo experiment");
  AddRunFlags(run, run_flags, /*with_problem=*/true, /*with_mechanism=*/true);

  auto* repair = app.add_subcommand("repair", "run with a repaired allocator");
  repair->require_subcommand(1);

  RunFlags vra_flags;
  vra_flags.mechanism = dpalloc::mechanism_names::kDLaplace;
  auto* repair_vra = repair->add_subcommand("vra", "posterior coverage repair");
  AddRunFlags(repair_vra, vra_flags, false, false);
  repair_vra->add_option("--p", vra_flags.p, "coverage posterior threshold")
      ->capture_default_str();
  repair_vra->add_option("--samples", vra_flags.samples,
                         "posterior samples per jurisdiction")
      ->capture_default_str();

  RunFlags t1_flags;
  t1_flags.mechanism = dpalloc::mechanism_names::kLaplace;
  auto* repair_t1 = repair->add_subcommand("title1", "inflationary allocation");
  AddRunFlags(repair_t1, t1_flags, false, false);
  repair_t1->add_option("--delta", t1_flags.delta, "failure probability")
      ->capture_default_str();
  repair_t1->add_option("--slack", t1_flags.slack,
                        "per-district slack constant: proof (2x) | body (1x)")
      ->check(CLI::IsMember({"proof", "body"}))
      ->capture_default_str();

  std::string profile;
  std::optional<std::int64_t> synth_n;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  synth->add_option("--profile", profile,
                    "michigan-like | florida-like | india-like")
      ->required()
      ->check(CLI::IsMember({"michigan-like", "florida-like", "india-like"}));
  synth->add_option("--n", synth_n, "number of assignees");
  synth->add_option("--seed", synth_seed, "seed")->capture_default_str();
  synth->add_option("--out", synth_out, "output CSV")->required();

  double tau_eps = 0;
  double tau_delta = 0;
  auto* tau = app.add_subcommand("tau", "print the indistinguishability count");
  tau->add_option("--epsilon", tau_eps, "privacy loss")->required();
  tau->add_option("--delta", tau_delta, "probability bound")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*run) {
      Execute(ToConfig(run_flags), run_flags);
    } else if (*repair_vra) {
      vra_flags.problem = dpalloc::problem_names::kVra;
      auto cfg = ToConfig(vra_flags);
      cfg.repair = dpalloc::RepairMode::kVraPosterior;
      Execute(cfg, vra_flags);
    } else if (*repair_t1) {
      t1_flags.problem = dpalloc::problem_names::kTitle1;
      auto cfg = ToConfig(t1_flags);
      cfg.repair = dpalloc::RepairMode::kTitle1Inflation;
      Execute(cfg, t1_flags);
    } else if (*synth) {
      const auto p = dpalloc::ParseSynthProfile(profile);
      const auto m = dpalloc::SynthGenerate(
          p, synth_n.value_or(dpalloc::DefaultSynthSize(p)), synth_seed);
      dpalloc::WriteCsv(m, synth_out);
    } else if (*tau) {
      std::cout << dpalloc::FormatDouble(
                       dpalloc::IndistThreshold(tau_eps, tau_delta))
                << "\n";
    }
  } catch (const dpalloc::Error& e) {
    std::cerr << "dpalloc: " << e.what() << "\n";
    return dpalloc::IsDegenerateConfiguration(e.code()) ? kExitDegenerate
                                                        : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "dpalloc: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
