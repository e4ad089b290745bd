#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "flatland/path.hpp"

namespace flatland {

// Upper bound of the last free interval of every cell.
inline constexpr int kForever = std::numeric_limits<int>::max() / 2;

struct Interval {
  int begin = 0;
  int end = kForever;  // exclusive
  friend bool operator==(const Interval&, const Interval&) = default;
};

class TableConflict : public std::runtime_error {
 public:
  TableConflict() : std::runtime_error("input paths conflict") {}
};

// Reservations of a set of conflict-free paths: per-cell occupied intervals and
// per-cell entry events, from which free intervals and swap checks follow.
class SafeIntervalTable {
 public:
  struct Occupancy {
    int begin;
    int end;
    int agent;
  };
  struct Entry {
    int t;     // timestep the agent arrives in the cell
    int from;  // cell it came from
    int agent;
  };

  SafeIntervalTable() = default;
  explicit SafeIntervalTable(int cells);

  int cell_count() const { return static_cast<int>(occ_.size()); }

  // Throws TableConflict on any vertex overlap or swap with a reserved path;
  // the table is unchanged in that case.
  void insert(const Path& path);
  void remove(const Path& path);
  bool conflicts(const Path& path) const;

  bool free_at(int cell, int t) const;
  // Some reserved agent moves from -> to, arriving at t.
  bool edge_used(int from, int to, int t) const;

  // Calls f(Interval) for every maximal free interval I of `cell` with
  // I.end > from and I.begin <= to, in increasing order.
  template <class F>
  void for_each_free(int cell, int from, int to, F&& f) const;
  std::vector<Interval> free_intervals(int cell) const;

  const std::vector<Occupancy>& occupancy(int cell) const { return occ_[static_cast<std::size_t>(cell)]; }
  // Agent occupying `cell` at t, or -1.
  int occupant(int cell, int t) const;

 private:
  std::vector<std::vector<Occupancy>> occ_;
  std::vector<std::vector<Entry>> entries_;
};

SafeIntervalTable build_table(int cells, std::span<const Path> paths);

template <class F>
void SafeIntervalTable::for_each_free(int cell, int from, int to, F&& f) const {
  const auto& occ = occ_[static_cast<std::size_t>(cell)];
  const std::size_t n = occ.size();
  std::size_t lo = 0, hi = n;
  while (lo < hi) {  // first occupancy ending after `from`
    const std::size_t mid = (lo + hi) / 2;
    if (occ[mid].end <= from)
      lo = mid + 1;
    else
      hi = mid;
  }
  std::size_t i = lo;
  int l = i == 0 ? 0 : occ[i - 1].end;
  for (;;) {
    while (i < n && occ[i].begin <= l) l = std::max(l, occ[i++].end);
    if (l > to) return;
    const int u = i < n ? occ[i].begin : kForever;
    if (u > from) f(Interval{l, u});
    if (i == n) return;
    l = occ[i++].end;
  }
}

}  // namespace flatland
