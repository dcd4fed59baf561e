// Command-line driver: one subcommand per pipeline stage, plus `all`.
//
// Exit codes: 0 ok, 2 missing upstream artifact, 3 training diverged,
// 1 anything else (bad config, parse errors, ...).

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "alirector/common/error.hpp"
#include "alirector/common/log.hpp"
#include "alirector/pipeline/stages.hpp"

namespace {

using alirector::pipeline::RunContext;
using alirector::pipeline::RunOptions;

void add_common(CLI::App& cmd, RunOptions& opts) {
  cmd.add_option("-c,--config", opts.config_path, "flat key=value config file");
  cmd.add_option("-s,--seed", opts.seed, "run seed (overrides `seed` in the config)");
  cmd.add_option("--run-dir", opts.run_dir, "output directory for this run");
  cmd.add_flag("-f,--force", opts.force, "rerun even if outputs are up to date");
  cmd.add_option("--init-from", opts.init_from, "initial weights for training stages")
      ->check(CLI::ExistingFile);
  cmd.add_option("--set", opts.overrides, "config override, key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"alirector: alignment-enhanced correction pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "warnings and errors only");

  RunOptions opts;
  std::vector<std::string> stages = alirector::pipeline::kStages;
  stages.push_back("all");
  for (const std::string& stage : stages) {
    CLI::App* cmd = app.add_subcommand(stage, stage == "all" ? "gen-data through evaluate"
                                                            : "run the " + stage + " stage");
    add_common(*cmd, opts);
    if (stage == "ablate") {
      cmd->add_option("--mode", opts.modes, "ablation modes (default: all five)");
    } else if (stage == "predict") {
      cmd->add_option("--model", opts.modes, "corrector, alirector or vanilla (default: all found)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  auto& log = alirector::logger();
  if (verbose) log.set_level(spdlog::level::debug);
  if (quiet) log.set_level(spdlog::level::warn);

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    const RunContext ctx = RunContext::resolve(opts);
    if (stage == "all") {
      for (const auto& r : alirector::pipeline::run_pipeline(ctx)) {
        std::cout << r.stage << (r.skipped ? " (cached) " : " ") << r.output_dir.string() << "\n";
      }
    } else {
      const auto r = alirector::pipeline::run_stage(stage, ctx);
      std::cout << r.metrics_json;
    }
    return 0;
  } catch (const alirector::DependencyError& e) {
    log.error("{}", e.what());
    return 2;
  } catch (const alirector::DivergenceError& e) {
    log.error("{}", e.what());
    return 3;
  } catch (const std::exception& e) {
    log.error("{}", e.what());
    return 1;
  }
}
