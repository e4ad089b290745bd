#include "flatland/interval_table.hpp"

#include <algorithm>

namespace flatland {

SafeIntervalTable::SafeIntervalTable(int cells)
    : occ_(static_cast<std::size_t>(cells)), entries_(static_cast<std::size_t>(cells)) {}

namespace {

bool overlaps(const std::vector<SafeIntervalTable::Occupancy>& occ, int begin, int end) {
  auto it = std::partition_point(occ.begin(), occ.end(),
                                 [&](const SafeIntervalTable::Occupancy& o) { return o.end <= begin; });
  return it != occ.end() && it->begin < end;
}

}  // namespace

bool SafeIntervalTable::conflicts(const Path& path) const {
  const auto& v = path.visits;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (overlaps(occ_[static_cast<std::size_t>(v[k].cell)], v[k].enter_t, v[k].leave_t)) return true;
    if (k > 0 && edge_used(v[k].cell, v[k - 1].cell, v[k].enter_t)) return true;
  }
  // Two visits of one path to the same cell never overlap, so only the
  // reservations need checking.
  return false;
}

void SafeIntervalTable::insert(const Path& path) {
  if (conflicts(path)) throw TableConflict();
  const auto& v = path.visits;
  for (std::size_t k = 0; k < v.size(); ++k) {
    auto& occ = occ_[static_cast<std::size_t>(v[k].cell)];
    auto it = std::partition_point(occ.begin(), occ.end(), [&](const Occupancy& o) { return o.begin < v[k].enter_t; });
    occ.insert(it, Occupancy{v[k].enter_t, v[k].leave_t, path.agent});
    if (k > 0) {
      auto& ent = entries_[static_cast<std::size_t>(v[k].cell)];
      auto jt = std::partition_point(ent.begin(), ent.end(), [&](const Entry& e) { return e.t <= v[k].enter_t; });
      ent.insert(jt, Entry{v[k].enter_t, v[k - 1].cell, path.agent});
    }
  }
}

void SafeIntervalTable::remove(const Path& path) {
  const auto& v = path.visits;
  for (std::size_t k = 0; k < v.size(); ++k) {
    auto& occ = occ_[static_cast<std::size_t>(v[k].cell)];
    auto it = std::find_if(occ.begin(), occ.end(), [&](const Occupancy& o) {
      return o.agent == path.agent && o.begin == v[k].enter_t;
    });
    if (it != occ.end()) occ.erase(it);
    if (k > 0) {
      auto& ent = entries_[static_cast<std::size_t>(v[k].cell)];
      auto jt = std::find_if(ent.begin(), ent.end(),
                             [&](const Entry& e) { return e.agent == path.agent && e.t == v[k].enter_t; });
      if (jt != ent.end()) ent.erase(jt);
    }
  }
}

bool SafeIntervalTable::free_at(int cell, int t) const { return !overlaps(occ_[static_cast<std::size_t>(cell)], t, t + 1); }

int SafeIntervalTable::occupant(int cell, int t) const {
  const auto& occ = occ_[static_cast<std::size_t>(cell)];
  auto it = std::partition_point(occ.begin(), occ.end(), [&](const Occupancy& o) { return o.end <= t; });
  return it != occ.end() && it->begin <= t ? it->agent : -1;
}

bool SafeIntervalTable::edge_used(int from, int to, int t) const {
  const auto& ent = entries_[static_cast<std::size_t>(to)];
  auto it = std::partition_point(ent.begin(), ent.end(), [&](const Entry& e) { return e.t < t; });
  for (; it != ent.end() && it->t == t; ++it)
    if (it->from == from) return true;
  return false;
}

std::vector<Interval> SafeIntervalTable::free_intervals(int cell) const {
  std::vector<Interval> out;
  for_each_free(cell, -1, kForever, [&](Interval iv) { out.push_back(iv); });
  return out;
}

SafeIntervalTable build_table(int cells, std::span<const Path> paths) {
  SafeIntervalTable table(cells);
  for (const Path& p : paths) table.insert(p);
  return table;
}

}  // namespace flatland
