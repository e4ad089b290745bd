#pragma once

#include <limits>
#include <map>
#include <span>
#include <vector>

#include "flatland/rail_map.hpp"

namespace flatland {

// Sentinel for "goal cannot be reached"; larger than any real distance so it
// sorts last in every ordering.
inline constexpr int kUnreachable = std::numeric_limits<int>::max();

// Cell-traversal counts from every (cell, orientation) state to one goal cell,
// ignoring other trains and speed. Built by a backward breadth-first search over
// reversed rail edges.
class DistanceField {
 public:
  DistanceField() = default;
  DistanceField(const RailMap& map, Cell goal);

  Cell goal() const { return goal_; }
  int at_state(int state_index) const { return dist_[static_cast<std::size_t>(state_index)]; }
  int at(const RailMap& map, RailState s) const { return at_state(map.state_index(s)); }
  bool reachable(int state_index) const { return at_state(state_index) != kUnreachable; }

 private:
  Cell goal_;
  std::vector<int> dist_;
};

// One field per distinct goal, built eagerly; immutable afterwards and safe to
// share across threads.
class DistanceCache {
 public:
  DistanceCache() = default;
  DistanceCache(const RailMap& map, std::span<const Cell> goals);

  const DistanceField& field(Cell goal) const;
  bool contains(Cell goal) const { return fields_.count(goal) != 0; }

 private:
  std::map<Cell, DistanceField> fields_;
};

// Uncached convenience query.
int distance(const RailMap& map, RailState from, Cell goal);

}  // namespace flatland
