#include "flatland/distance.hpp"

#include <deque>

namespace flatland {

DistanceField::DistanceField(const RailMap& map, Cell goal)
    : goal_(goal), dist_(static_cast<std::size_t>(map.state_count()), kUnreachable) {
  if (!map.in_bounds(goal)) throw RailError("goal outside map");
  std::deque<int> queue;
  const int g = map.index(goal);
  for (int o = 0; o < 4; ++o) {
    dist_[static_cast<std::size_t>(g * 4 + o)] = 0;
    queue.push_back(g * 4 + o);
  }
  // Predecessors of (cell, heading) are states in the cell behind it whose
  // transitions allow that heading.
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    const int cell = s / 4;
    const Orientation heading = orientation_from(s % 4);
    const int prev = map.neighbor(cell, opposite(heading));
    if (prev < 0) continue;
    const Transitions t = map.at(prev);
    const int d = dist_[static_cast<std::size_t>(s)] + 1;
    for (Orientation in : kOrientations) {
      if (!t.allows(in, heading)) continue;
      const int p = prev * 4 + to_int(in);
      if (dist_[static_cast<std::size_t>(p)] != kUnreachable) continue;
      dist_[static_cast<std::size_t>(p)] = d;
      queue.push_back(p);
    }
  }
}

DistanceCache::DistanceCache(const RailMap& map, std::span<const Cell> goals) {
  for (Cell g : goals)
    if (!fields_.count(g)) fields_.emplace(g, DistanceField(map, g));
}

const DistanceField& DistanceCache::field(Cell goal) const {
  auto it = fields_.find(goal);
  if (it == fields_.end()) throw RailError("no distance field for goal");
  return it->second;
}

int distance(const RailMap& map, RailState from, Cell goal) {
  DistanceField f(map, goal);
  return f.at(map, from);
}

}  // namespace flatland
