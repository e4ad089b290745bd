#pragma once

#include <chrono>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "flatland/interval_table.hpp"
#include "flatland/path.hpp"
#include "flatland/scenario.hpp"

namespace flatland {

using Clock = std::chrono::steady_clock;

// Per-agent paths plus metrics that are always recomputed from the paths.
struct Solution {
  std::vector<std::optional<Path>> paths;
  std::vector<long long> delays;
  long long total_delay = 0;
  int planned = 0;
  int success = 0;  // planned arrival before tmax
  int makespan = 0;
  double reward_estimate = 1.0;
};

// Predicted arrival time under malfunction-free execution, scored like the
// simulator: unfinished or unplanned agents are charged tmax + distance.
int predicted_act(const Environment& env, int agent, const std::optional<Path>& path);
void evaluate(const Environment& env, Solution& solution);
Solution make_solution(const Environment& env, std::vector<std::optional<Path>> paths);
Solution empty_solution(const Environment& env);

// Independent validator: path shape (adjacency over rails, speed, edt, start,
// goal) plus vertex and swap conflicts checked per timestep.
std::vector<std::string> find_conflicts(const Environment& env, const Solution& solution);

enum class PriorityStrategy { ByIndex, ByEarliestArrival, BySlack, BySlackReversed };

const char* strategy_name(PriorityStrategy s);
std::optional<PriorityStrategy> parse_strategy(std::string_view s);

// Slack in timesteps: eat - edt - distance (cells); kUnreachable-like for
// unreachable goals.
long long slack(const Environment& env, int agent);
std::vector<int> order(const Environment& env, PriorityStrategy strategy);

struct PlanOptions {
  std::optional<Clock::time_point> deadline;
};

struct PlanRun {
  Solution solution;
  bool timed_out = false;
};

PlanRun prioritized_plan(const Environment& env, std::span<const int> order, const PlanOptions& options = {});

inline const std::vector<PriorityStrategy> kDefaultPortfolio = {
    PriorityStrategy::ByIndex, PriorityStrategy::ByEarliestArrival, PriorityStrategy::BySlack,
    PriorityStrategy::BySlackReversed};

struct PortfolioResult {
  Solution solution;
  int chosen = -1;  // index into the strategy list, -1 when every run timed out
  std::vector<std::optional<long long>> run_delays;  // nullopt for discarded runs
};

PortfolioResult portfolio_plan(const Environment& env, std::span<const PriorityStrategy> strategies,
                               std::optional<Clock::time_point> deadline = std::nullopt, bool parallel = true);

class PlanFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "flatland-plan 1", "agents <m>", then per agent either "agent <id> unplanned"
// or "agent <id> <k>" followed by k rows "<x> <y> <N|E|S|W> <enter> <leave>",
// and a closing "end".
void write_plan(std::ostream& out, const Environment& env, const Solution& solution);
// Throws PlanFileError("plan/instance mismatch: ...") when the plan does not fit.
Solution read_plan(std::istream& in, const Environment& env);

}  // namespace flatland
