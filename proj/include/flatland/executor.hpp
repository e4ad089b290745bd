#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flatland/lns.hpp"
#include "flatland/planner.hpp"
#include "flatland/sim.hpp"

namespace flatland {

// Planned visit order of every cell, plus execution progress.
struct McpState {
  struct Slot {
    int agent;
    int visit;  // index into the agent's path
    int enter_t;
  };
  std::vector<std::vector<Slot>> cells;  // per cell, sorted by planned enter_t
  std::vector<int> served;               // per cell: slots whose train has left
  std::vector<std::vector<int>> slot_of;  // per agent, per visit: position in its cell list
  std::vector<int> cursor;               // per agent: current visit, -1 before entry
};

class DesyncError : public std::runtime_error {
 public:
  explicit DesyncError(const std::string& what) : std::runtime_error("desync: " + what) {}
};

McpState build_mcp(const Environment& env, const Solution& solution);
// Progress taken from a live state whose trajectory follows the solution's
// paths (every executed visit matches a path prefix).
McpState build_mcp(const Environment& env, const Solution& solution, const SimState& sim);

// Commands for timestep sim.t: a train advances only at or after its planned
// departure time and once every earlier visitor of the next cell has left (or
// is leaving in the same step).
void mcp_commands(const Environment& env, const SimState& sim, const McpState& mcp, const Solution& solution,
                  std::span<Command> out);
// Advances cursors after a step; throws DesyncError when a train is off its path.
void mcp_sync(const Environment& env, const SimState& sim, McpState& mcp, const Solution& solution);

struct ReplanResult {
  Solution solution;
  McpState mcp;
  bool replanned = false;
  long long projected_delay = 0;  // before the LNS iterations
  long long final_delay = 0;
};

// Projects the live state forward (MCP, no further malfunctions) into a
// conflict-free incumbent, runs `iterations` delay-based LNS iterations from the
// live start states, and rebuilds the MCP.
ReplanResult partial_replan(const Environment& env, const SimState& sim, const Solution& solution, const McpState& mcp,
                            int iterations, std::uint64_t seed, int neighborhood_size = 8);

enum class ExecutionMode { McpOnly, LnsPr, PerMalfunctionPr };

const char* mode_name(ExecutionMode m);
std::optional<ExecutionMode> parse_mode(std::string_view s);

struct ReplanConfig {
  int r = 20;
  int p = 20;
  ExecutionMode mode = ExecutionMode::LnsPr;
  std::uint64_t seed = 0;
  int neighborhood_size = 8;
};

// Replan instants floor(i * tmax / r), i = 1..r, keeping those inside the
// episode (0 < t < tmax).
std::vector<int> replan_times(int tmax, int r);

struct ControllerReport {
  EpisodeOutcome outcome;
  int replans = 0;
  double planning_ms = 0;
};

ControllerReport run_controller(const Environment& env, const Solution& solution, const ReplanConfig& config,
                                const MalfunctionSchedule& schedule, const EpisodeOptions& options = {});

}  // namespace flatland
