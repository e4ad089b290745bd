#pragma once

#include <optional>

#include "flatland/distance.hpp"
#include "flatland/interval_table.hpp"
#include "flatland/path.hpp"
#include "flatland/scenario.hpp"

namespace flatland {

// Mid-episode start: the agent is already in `state`, entered at `enter_time`,
// and cannot leave before `earliest_move` (malfunction and speed counter
// already accounted for).
struct StartOverride {
  int state = 0;
  int enter_time = 0;
  int earliest_move = 0;
};

// Timestep of the earliest possible cell change for an on-map agent observed
// at time `now` with the given counter and remaining malfunction.
int earliest_move_time(int now, int cmax, int counter, int malfunction_left);

struct PlanRequest {
  int agent = 0;
  int start_state = 0;
  int goal_cell = 0;
  int cmax = 1;
  int earliest_entry = 0;  // off-map start only
  std::optional<StartOverride> override;
  int horizon = 0;  // no cell is entered after this timestep
  const DistanceField* field = nullptr;
};

// Off-map request for an agent of `env` with horizon tmax + max malfunction duration.
PlanRequest make_request(const Environment& env, int agent);
int default_horizon(const Environment& env);

enum class PlanFailure { None, Unreachable, Blocked };

const char* failure_name(PlanFailure f);

struct PlanResult {
  std::optional<Path> path;
  PlanFailure failure = PlanFailure::None;
  long long expansions = 0;
};

// Minimum-arrival-time path against the reservations in `table`.
PlanResult plan(const RailMap& map, const SafeIntervalTable& table, const PlanRequest& request);

}  // namespace flatland
