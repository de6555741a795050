/*
 * Copyright 2026 the arock authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "arock/config.hpp"
#include "arock/runner.hpp"
#include "arock/selfcheck.hpp"

namespace {

// exit codes: 0 success, 1 an invariant check failed, 2 bad input
constexpr int kCheckFailed = 1;
constexpr int kBadInput = 2;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_trials) {
  cmd->add_option("--config", args.config_path, "run configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory (default: current)");
  cmd->add_option("--seed", args.seed, "override the config's seed");
  if (with_trials) cmd->add_option("--trials", args.trials, "override the config's trial count");
}

int run_verify(std::uint64_t seed) {
  bool all_passed = true;
  for (const arock::CheckResult& check : arock::run_selfchecks(seed)) {
    all_passed = all_passed && check.passed;
    std::cout << (check.passed ? "[ ok ] " : "[FAIL] ") << check.name << ": " << check.detail
              << "\n";
  }
  std::cout << (all_passed ? "all checks passed\n" : "some checks FAILED\n");
  return all_passed ? 0 : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asynchronous block fixed-point iteration toolkit"};
  app.require_subcommand(1);

  CommonArgs plan_args, sim_args, timing_args, live_args;
  CLI::App* plan_cmd = app.add_subcommand("plan", "compute a step-size / rate plan");
  add_common(plan_cmd, plan_args, false);
  CLI::App* sim_cmd = app.add_subcommand("simulate", "run the iteration and write its trace");
  add_common(sim_cmd, sim_args, false);
  CLI::App* timing_cmd = app.add_subcommand("timing", "simulate the wall-clock timing model");
  add_common(timing_cmd, timing_args, true);
  CLI::App* live_cmd = app.add_subcommand("live", "run the multi-threaded executor");
  add_common(live_cmd, live_args, false);

  std::uint64_t verify_seed = 20260819;
  CLI::App* verify_cmd = app.add_subcommand("verify", "run the library's invariant checks");
  verify_cmd->add_option("--seed", verify_seed, "seed for the randomized checks");

  arock::ReportInputs report_in;
  std::string report_out = ".";
  CLI::App* report_cmd = app.add_subcommand("report", "compare traces against predictions");
  report_cmd->add_option("--trace", report_in.trace_paths, "trace CSV (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--plan", report_in.plan_path, "plan.txt from the plan subcommand")
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--timing", report_in.timing_path, "timing.csv from the timing subcommand")
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--eps", report_in.eps, "target squared-error reduction (default 1e-6)");
  report_cmd->add_option("--out", report_out, "output directory (default: current)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify_cmd->parsed()) return run_verify(verify_seed);
    if (report_cmd->parsed())
      return arock::emit_report(report_in, report_out, std::cout) ? 0 : kCheckFailed;

    const CommonArgs& args = plan_cmd->parsed()     ? plan_args
                             : sim_cmd->parsed()    ? sim_args
                             : timing_cmd->parsed() ? timing_args
                                                    : live_args;
    arock::Config cfg = arock::Config::parse_file(args.config_path);
    const arock::CliOverrides overrides{args.seed, args.trials};
    bool ok = false;
    if (plan_cmd->parsed()) {
      ok = arock::plan_from_config(std::move(cfg), args.out_dir, std::cout);
    } else if (sim_cmd->parsed()) {
      ok = arock::simulate_from_config(std::move(cfg), args.out_dir, overrides, std::cout);
    } else if (timing_cmd->parsed()) {
      ok = arock::timing_from_config(std::move(cfg), args.out_dir, overrides, std::cout);
    } else {
      ok = arock::live_from_config(std::move(cfg), args.out_dir, overrides, std::cout);
    }
    return ok ? 0 : kCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
}
