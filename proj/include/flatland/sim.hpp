#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flatland/path.hpp"
#include "flatland/scenario.hpp"

namespace flatland {

enum class Command : std::uint8_t { MoveForward, MoveLeft, MoveRight, Stop };

char command_char(Command c);  // F, L, R, S
std::optional<Command> parse_command(char c);

enum class AgentStatus : std::uint8_t { OffMap, OnMap, Done };

char status_char(AgentStatus s);  // O, M, D

struct AgentRuntime {
  AgentStatus status = AgentStatus::OffMap;
  int cell = -1;  // cell index while OnMap
  Orientation orientation = Orientation::North;
  int counter = 0;
  int malfunction_left = 0;
  int arrival = -1;  // ACT once Done
  // Cells visited so far; the open visit of an OnMap agent has leave_t == -1.
  std::vector<Visit> history;
  friend bool operator==(const AgentRuntime&, const AgentRuntime&) = default;
};

// Live episode state. `t` is the number of timesteps already executed, i.e. the
// index of the next timestep; positions are those at the end of timestep t - 1.
struct SimState {
  int t = 0;
  std::vector<AgentRuntime> agents;
  std::shared_ptr<const MalfunctionSchedule> schedule;
  std::vector<std::size_t> next_event;
  std::vector<int> occupancy;  // cell index -> agent, or -1
  long long ignored_commands = 0;

  int count(AgentStatus s) const;
  bool all_done() const { return count(AgentStatus::Done) == static_cast<int>(agents.size()); }
};

SimState initial_state(const Environment& env, MalfunctionSchedule schedule = {});

struct StepEvents {
  std::vector<MalfunctionEvent> onsets;
  std::vector<int> arrivals;
};

// Executes timestep state.t. Order: malfunction onsets, intents (entry and the
// speed-counter rule: increment, then move when the counter equals cmax),
// simultaneous conflict resolution with cascading cancellation, arrivals,
// malfunction countdown, t + 1.
StepEvents step(const Environment& env, SimState& state, std::span<const Command> commands);

// Outgoing heading a command would take in the agent's current cell after the
// invalid-branch fallback, or nullopt when it resolves to Stop.
std::optional<Orientation> resolve_heading(Transitions cell, Orientation facing, Command c);
// Command that selects `heading` at a cell while facing `facing`.
Command command_towards(Orientation facing, Orientation heading);

struct AgentScore {
  bool finished = false;  // reached its goal (at any time)
  int act = 0;            // actual or estimated arrival time
  long long delay = 0;    // max(act - eat, 0)
};

struct EpisodeResult {
  std::vector<AgentScore> agents;
  int success = 0;  // arrivals strictly before tmax
  long long total_delay = 0;
  double reward = 1.0;
  double success_rate() const {
    return agents.empty() ? 0.0 : static_cast<double>(success) / static_cast<double>(agents.size());
  }
};

// Unfinished agents are charged tmax + distance from their current state (or
// start state if they never entered).
EpisodeResult score(const Environment& env, const SimState& state);
double normalized_reward(long long total_delay, int agents, int tmax);

class Controller {
 public:
  virtual ~Controller() = default;
  // `revealed` lists malfunctions that began in the previous timestep; their
  // durations become known now. `out` is pre-filled with Stop.
  virtual void decide(const SimState& state, std::span<const MalfunctionEvent> revealed,
                      std::span<Command> out) = 0;
};

struct EpisodeOptions {
  int horizon = 0;                    // 0 means tmax
  std::ostream* trajectory = nullptr;  // "flatland-trajectory 1" log
  std::ostream* commands = nullptr;    // "flatland-commands 1" record of issued commands
};

struct EpisodeOutcome {
  EpisodeResult result;
  SimState final_state;
  bool aborted = false;
  std::string error;
};

EpisodeOutcome run_episode(const Environment& env, Controller& controller,
                           const MalfunctionSchedule& schedule, const EpisodeOptions& options = {});

// Trajectory log rows: "<t> <agent> <O|M|D> <x> <y> <N|E|S|W> <counter> <malfunction_left>"
// written after every executed timestep t; off-map positions are -1 -1.
void write_trajectory_header(std::ostream& out, int agents);
void write_trajectory_step(std::ostream& out, const Environment& env, const SimState& state, int t);

// Replays a "flatland-commands 1" file: header, "agents <m>", then rows
// "<t> <m command characters>". Missing timesteps issue Stop.
class ReplayController : public Controller {
 public:
  ReplayController(std::istream& in, int agents);
  void decide(const SimState& state, std::span<const MalfunctionEvent> revealed,
              std::span<Command> out) override;

 private:
  std::vector<std::vector<Command>> rows_;
};

}  // namespace flatland
