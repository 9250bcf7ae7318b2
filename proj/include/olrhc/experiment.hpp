#pragma once

#include "olrhc/controller.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace olrhc {

/// Raised for malformed or inconsistent experiment specs (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ControllerKind { OnlineRhc, Etc, Oracle, Hindsight };

ControllerKind parse_controller(const std::string& name);
std::string to_string(ControllerKind k);

struct ExperimentSpec {
  Scenario scenario;
  ControllerKind controller = ControllerKind::OnlineRhc;
  std::vector<int> T;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output = "out";
  RunConfig base;  // T and seed are filled per run
};

/// Parses the JSON text of an experiment spec. Unknown keys are rejected.
/// Relative "system_file" references resolve against base_dir.
ExperimentSpec parse_experiment(const std::string& json_text, const std::filesystem::path& base_dir = ".");
ExperimentSpec load_experiment(const std::filesystem::path& path);

struct RunResult {
  int T = 0;
  std::uint64_t seed = 0;
  double total_cost = 0.0;
  double hindsight_cost = 0.0;
  double regret = 0.0;
  double violation = 0.0;
  int intervals = 0;
  int intervals_covered = 0;
  int intervals_poe_pass = 0;
  bool all_covered = true;
  std::filesystem::path csv;
};

struct BatchSummary {
  std::optional<double> slope_regret;
  std::optional<double> slope_violation;
  std::optional<double> coverage_rate;
  std::optional<double> poe_pass_rate;
  std::vector<RunResult> runs;
};

/// Executes one (T, seed) run and returns its log.
TrajectoryLog execute_run(const ExperimentSpec& spec, int T, std::uint64_t seed);

/// Runs every (T, seed) pair on a pool of `workers` threads, writes run_{T}_{seed}.csv
/// for each and summary.json, and returns the summary. Output is independent of
/// completion order.
BatchSummary run_batch(const ExperimentSpec& spec, int workers);

void write_csv(std::ostream& os, const TrajectoryLog& log);
std::string summary_json(const BatchSummary& s, ControllerKind controller);

/// JSON schema for summary.json.
const std::string& summary_schema();

struct CheckRow {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Invariant suite: PoE, coverage, feasibility split, window integrity, DP equivalence.
std::vector<CheckRow> run_checks(const ExperimentSpec& spec, int workers);

/// Worker count from a flag value, else PE_RHC_WORKERS, else 1.
int resolve_workers(std::optional<int> flag);

}  // namespace olrhc
