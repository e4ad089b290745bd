#pragma once

#include <vector>

#include "flatland/rail_map.hpp"

namespace flatland {

// One cell occupancy: the train is in `cell` for timesteps [enter_t, leave_t).
// `orientation` is the heading it had when it entered.
struct Visit {
  int cell = 0;
  Orientation orientation = Orientation::North;
  int enter_t = 0;
  int leave_t = 0;
  friend bool operator==(const Visit&, const Visit&) = default;
};

// Timed occupancy of one train from entry to arrival. The last visit is the
// goal cell, held for the single arrival timestep [arrival, arrival + 1), after
// which the train is off the map.
struct Path {
  int agent = 0;
  std::vector<Visit> visits;

  int entry_time() const { return visits.front().enter_t; }
  int planned_arrival() const { return visits.back().enter_t; }
  friend bool operator==(const Path&, const Path&) = default;
};

}  // namespace flatland
