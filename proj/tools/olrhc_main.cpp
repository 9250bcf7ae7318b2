// Experiment harness: `olrhc run` and `olrhc check`.
#include "olrhc/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iostream>

namespace {

enum Exit { kOk = 0, kConfig = 1, kRuntime = 2, kCheck = 3 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string controller;
  std::optional<int> workers;
};

olrhc::ExperimentSpec load(const Options& o) {
  auto spec = olrhc::load_experiment(o.config);
  if (!o.out.empty()) spec.output = o.out;
  if (o.seed) spec.seeds = {*o.seed};
  if (!o.controller.empty()) spec.controller = olrhc::parse_controller(o.controller);
  return spec;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const olrhc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const olrhc::ContractError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online receding-horizon control experiments"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "experiment spec (JSON)")->required();
    sub->add_option("--out", opt.out, "output directory (overrides the spec)");
    sub->add_option("--seed", opt.seed, "run only this seed");
    sub->add_option("--controller", opt.controller, "online-rhc | etc | oracle | hindsight");
    sub->add_option("--workers", opt.workers, "worker threads (default: PE_RHC_WORKERS or 1)");
  };
  auto* run = app.add_subcommand("run", "run every (T, seed) pair and write CSV logs plus summary.json");
  auto* check = app.add_subcommand("check", "run the invariant suite and print a pass/fail table");
  auto* schema = app.add_subcommand("schema", "print the summary.json schema");
  add_common(run);
  add_common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (schema->parsed()) {
    std::cout << olrhc::summary_schema();
    return kOk;
  }
  if (run->parsed()) {
    return guarded([&] {
      const auto spec = load(opt);
      const int workers = olrhc::resolve_workers(opt.workers);
      const auto summary = olrhc::run_batch(spec, workers);
      std::cout << "wrote " << summary.runs.size() << " runs to " << spec.output.string() << '\n';
      return static_cast<int>(kOk);
    });
  }
  return guarded([&] {
    const auto spec = load(opt);
    const int workers = olrhc::resolve_workers(opt.workers);
    const auto rows = olrhc::run_checks(spec, workers);
    bool all = true;
    for (const auto& r : rows) {
      std::printf("%-18s %s  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.detail.c_str());
      all = all && r.pass;
    }
    return static_cast<int>(all ? kOk : kCheck);
  });
}
