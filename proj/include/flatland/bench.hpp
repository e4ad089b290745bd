#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "flatland/executor.hpp"
#include "flatland/lns.hpp"
#include "flatland/planner.hpp"

namespace flatland {

struct SolverConfig {
  std::vector<PriorityStrategy> portfolio = kDefaultPortfolio;
  int lns_iterations = -1;  // -1 selects the agent-count schedule
  LnsMode lns_mode = LnsMode::DelayOnly;
  std::uint64_t seed = 0;
  int neighborhood_size = 8;
  bool parallel = true;
};

struct SolveOutcome {
  Solution solution;
  long long portfolio_delay = 0;
  std::string portfolio_choice;
  int lns_iterations = 0;
  bool budget_exceeded = false;
  double planning_ms = 0;
};

// Portfolio PP followed by LNS, both bounded by `budget_ms` (0 = unbounded).
SolveOutcome solve(const Environment& env, const SolverConfig& config, int budget_ms, std::ostream* trace = nullptr);

// One episode: per-agent ACT/delay, reward, replans and wall-clock planning time.
nlohmann::json episode_record(const std::string& instance_id, const Environment& env, ExecutionMode mode,
                              std::uint64_t seed, const ControllerReport& report);

// Keys of an episode record that depend on wall-clock time.
inline const std::vector<std::string> kTimingFields = {"planning_ms", "solve_ms", "episode_ms"};

struct SuiteInstance {
  std::string id;
  std::optional<std::filesystem::path> file;
  int level = 0;
  std::uint64_t instance_seed = 0;
};

// JSON suite file:
//   { "name": "...",
//     "instances": [ {"id": "a", "file": "a.flatland"} | {"id": "b", "level": 1, "instance_seed": 3} ],
//     "seeds": [1, 2],
//     "modes": ["mcp-only", "lns-pr"],
//     "malfunction_rate": 0.002,                   (optional override)
//     "solver": {"portfolio": [...], "lns_iterations": 50, "lns_mode": "delay", "seed": 0,
//                "neighborhood_size": 8},
//     "replan": {"r": 20, "p": 20},
//     "budget_ms": 60000, "total_budget_ms": 0 }
struct BenchmarkSuite {
  std::string name;
  std::vector<SuiteInstance> instances;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<ExecutionMode> modes = {ExecutionMode::McpOnly};
  std::optional<double> malfunction_rate;
  SolverConfig solver;
  int r = 20;
  int p = 20;
  int budget_ms = 60000;
  int total_budget_ms = 0;
};

BenchmarkSuite parse_suite(const nlohmann::json& j, const std::filesystem::path& base_dir);
BenchmarkSuite load_suite(const std::filesystem::path& path);

Instance suite_instance(const BenchmarkSuite& suite, const SuiteInstance& si);

struct BenchOutput {
  std::vector<nlohmann::json> records;  // ordered by instance, then seed, then mode
  std::string csv;
};

BenchOutput run_suite(const BenchmarkSuite& suite, int jobs = 1);

// Per-instance rows with one column group per mode, then one aggregate row per
// level; aggregates are exact means over the episode records.
std::string summary_csv(const BenchmarkSuite& suite, const std::vector<nlohmann::json>& records);

}  // namespace flatland
