#pragma once

#include <optional>
#include <string>
#include <set>
#include <tuple>
#include <vector>

#include "flatland/interval_table.hpp"
#include "flatland/layout.hpp"
#include "flatland/planner.hpp"
#include "flatland/rail_map.hpp"
#include "flatland/rng.hpp"
#include "flatland/scenario.hpp"
#include "flatland/sipp.hpp"
#include "flatland/sim.hpp"

namespace fixtures {

using namespace flatland;
using O = Orientation;

inline TrainSpec train(int id, Cell start, O ori, Cell goal, int cmax, int edt, int eat) {
  return TrainSpec{id, start, ori, goal, cmax, edt, eat};
}

inline Instance make_instance(RailMap map, std::vector<TrainSpec> trains, int tmax, double rate = 0.0) {
  Instance inst;
  inst.map = std::move(map);
  inst.trains = std::move(trains);
  inst.tmax = tmax;
  inst.malfunction = {rate, 10, 50};
  return inst;
}

// Straight east-west track on row 0, `length` cells; both ends are dead ends.
inline RailMap corridor(int length) {
  RailMap map(length, 1);
  for (int x = 0; x < length; ++x) map.set({x, 0}, connect_sides(O::East, O::West));
  return map;
}

// Loop around the border of a w x h grid.
inline RailMap ring(int w, int h) {
  RailMap map(w, h);
  for (int x = 1; x < w - 1; ++x) {
    map.set({x, 0}, connect_sides(O::East, O::West));
    map.set({x, h - 1}, connect_sides(O::East, O::West));
  }
  for (int y = 1; y < h - 1; ++y) {
    map.set({0, y}, connect_sides(O::North, O::South));
    map.set({w - 1, y}, connect_sides(O::North, O::South));
  }
  map.set({0, 0}, connect_sides(O::East, O::South));
  map.set({w - 1, 0}, connect_sides(O::West, O::South));
  map.set({0, h - 1}, connect_sides(O::North, O::East));
  map.set({w - 1, h - 1}, connect_sides(O::North, O::West));
  return map;
}

// 5x5 "plus": a horizontal track on row 2 and a vertical one on column 2
// meeting at a diamond crossing in the centre.
inline RailMap plus_map() {
  RailMap map(5, 5);
  for (int i = 0; i < 5; ++i) {
    map.set({i, 2}, connect_sides(O::East, O::West));
    map.set({2, i}, connect_sides(O::North, O::South));
  }
  map.set({2, 2}, connect_sides(O::East, O::West) | connect_sides(O::North, O::South));
  return map;
}

// Two trains crossing the centre of the plus map at the same time. Agent 0
// has enough slack to absorb a one-step wait, agent 1 has none, so planning in
// index order is strictly worse than the reverse order.
inline Instance bottleneck() {
  return make_instance(plus_map(), {train(0, {0, 2}, O::East, {4, 2}, 1, 0, 10), train(1, {2, 0}, O::South, {2, 4}, 1, 0, 4)},
                       40);
}

// 20 trains between 3 cities on a 24x24 lattice with tight deadlines and a
// narrow departure window; prioritized planning in index order leaves large
// delays that reordering recovers.
inline Instance congested(std::uint64_t seed) {
  GeneratorConfig c = level_preset(1);
  c.width = c.height = 24;
  c.cities = 3;
  c.trains = 20;
  c.slack_margin_fraction = 0.1;
  c.departure_window = 0.15;
  c.malfunction.rate = 0.0;
  return generate_instance(c, seed);
}

// Two routes between the left and right ends of a 7x5 grid: a straight main
// line on row 2 and a loop through rows 0..2 via switches at x=1 and x=5.
inline RailMap two_route_map() {
  RailMap map(7, 5);
  for (int x = 0; x < 7; ++x) map.set({x, 2}, connect_sides(O::East, O::West));
  map.set({1, 2}, connect_sides(O::East, O::West) | connect_sides(O::West, O::North));
  map.set({5, 2}, connect_sides(O::East, O::West) | connect_sides(O::East, O::North));
  map.set({1, 1}, connect_sides(O::South, O::North));
  map.set({1, 0}, connect_sides(O::South, O::East));
  for (int x = 2; x < 5; ++x) map.set({x, 0}, connect_sides(O::East, O::West));
  map.set({5, 0}, connect_sides(O::West, O::South));
  map.set({5, 1}, connect_sides(O::North, O::South));
  return map;
}

// Random lattice map (loops, switches, diamond crossings) of size w x h.
inline RailMap random_lattice(Rng& rng, int w, int h) {
  auto lines = [&](int extent) {
    std::vector<int> v{0};
    for (int x = 2; x <= extent - 3; ++x)
      if (x - v.back() >= 2 && rng.bernoulli(0.35)) v.push_back(x);
    if (extent - 1 - v.back() < 2) v.pop_back();
    v.push_back(extent - 1);
    return v;
  };
  LatticeLayout l;
  l.width = w;
  l.height = h;
  l.columns = lines(w);
  l.rows = lines(h);
  return build_lattice(l);
}

// Every (cell, orientation) with at least one outgoing transition.
inline std::vector<RailState> rail_states(const RailMap& map) {
  std::vector<RailState> out;
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x)
      for (O o : kOrientations)
        if (map.at(Cell{x, y}).outgoing(o)) out.push_back({{x, y}, o});
  return out;
}

// Independent forward breadth-first search over (cell, orientation) states.
inline int bfs_distance(const RailMap& map, RailState from, Cell goal) {
  if (from.cell == goal) return 0;
  std::vector<int> dist(static_cast<std::size_t>(map.state_count()), -1);
  std::vector<RailState> frontier{from};
  dist[static_cast<std::size_t>(map.state_index(from))] = 0;
  for (int d = 1; !frontier.empty(); ++d) {
    std::vector<RailState> next;
    for (const RailState& s : frontier)
      for (const RailState& n : successors(map, s)) {
        if (n.cell == goal) return d;
        int& v = dist[static_cast<std::size_t>(map.state_index(n))];
        if (v < 0) {
          v = d;
          next.push_back(n);
        }
      }
    frontier = std::move(next);
  }
  return kUnreachable;
}

// Free intervals by scanning every timestep of [0, horizon); the last interval
// is reported open-ended as kForever.
inline std::vector<Interval> brute_free_intervals(const std::vector<std::pair<int, int>>& occupied, int horizon) {
  std::vector<char> busy(static_cast<std::size_t>(horizon), 0);
  for (auto [b, e] : occupied)
    for (int t = b; t < e && t < horizon; ++t) busy[static_cast<std::size_t>(t)] = 1;
  std::vector<Interval> out;
  int t = 0;
  while (t < horizon) {
    while (t < horizon && busy[static_cast<std::size_t>(t)]) ++t;
    if (t >= horizon) break;
    int u = t;
    while (u < horizon && !busy[static_cast<std::size_t>(u)]) ++u;
    out.push_back({t, u == horizon ? kForever : u});
    t = u;
  }
  return out;
}

// Brute-force time-expanded search. States per timestep layer are "off map"
// or (cell, orientation, counter 0..cmax-1); a layer-t state is the train's
// position at the end of timestep t. Returns the minimum arrival timestep.
inline std::optional<int> time_expanded_arrival(const RailMap& map, const std::vector<Path>& reserved, RailState start,
                                                Cell goal, int cmax, int edt, int horizon) {
  std::set<std::pair<int, int>> busy;            // (cell, t)
  std::set<std::tuple<int, int, int>> entering;  // (from, to, t)
  for (const Path& p : reserved)
    for (std::size_t k = 0; k < p.visits.size(); ++k) {
      const Visit& v = p.visits[k];
      for (int t = v.enter_t; t < v.leave_t; ++t) busy.insert({v.cell, t});
      if (k > 0) entering.insert({p.visits[k - 1].cell, v.cell, v.enter_t});
    }
  auto free_at = [&](int cell, int t) { return !busy.count({cell, t}); };
  const int start_cell = map.index(start.cell);
  const int goal_cell = map.index(goal);
  using State = std::tuple<int, int, int>;  // cell, orientation, counter
  std::set<State> layer;
  bool off_map = true;
  for (int t = 0; t <= horizon; ++t) {
    std::set<State> next;
    for (const auto& [cell, ori, k] : layer) {
      if (free_at(cell, t)) next.insert({cell, ori, std::min(k + 1, cmax - 1)});
      if (k + 1 < cmax) continue;
      std::array<int, 4> succ{};
      const int n = map.successor_states(cell * 4 + ori, succ);
      for (int i = 0; i < n; ++i) {
        const int c2 = succ[static_cast<std::size_t>(i)] / 4;
        if (!free_at(c2, t) || entering.count({c2, cell, t})) continue;
        if (c2 == goal_cell) return t;
        next.insert({c2, succ[static_cast<std::size_t>(i)] % 4, 0});
      }
    }
    if (off_map && t >= edt && free_at(start_cell, t)) next.insert({start_cell, to_int(start.orientation), 0});
    layer = std::move(next);
  }
  return std::nullopt;
}

// Small randomized planning problem: a lattice map of at most 8x8, up to two
// reserved paths and one agent to plan against them.
struct OracleCase {
  RailMap map;
  std::vector<Path> reserved;
  RailState start;
  Cell goal;
  int cmax = 1;
  int edt = 0;
  int horizon = 60;
};

inline PlanRequest request_for(const RailMap& map, const DistanceField& field, int agent, RailState start, int cmax,
                               int edt, int horizon) {
  PlanRequest r;
  r.agent = agent;
  r.start_state = map.state_index(start);
  r.goal_cell = map.index(field.goal());
  r.cmax = cmax;
  r.earliest_entry = edt;
  r.horizon = horizon;
  r.field = &field;
  return r;
}

inline OracleCase oracle_case(Rng& rng) {
  OracleCase c;
  const int w = static_cast<int>(rng.uniform_int(5, 8));
  const int h = static_cast<int>(rng.uniform_int(5, 8));
  c.map = random_lattice(rng, w, h);
  const auto states = rail_states(c.map);
  auto pick = [&](RailState& start, Cell& goal) {
    for (;;) {
      start = states[rng.index(states.size())];
      goal = states[rng.index(states.size())].cell;
      if (goal != start.cell && bfs_distance(c.map, start, goal) != kUnreachable) return;
    }
  };
  const int reserved = static_cast<int>(rng.uniform_int(0, 2));
  SafeIntervalTable table(c.map.cell_count());
  for (int a = 1; a <= reserved; ++a) {
    RailState s;
    Cell g;
    pick(s, g);
    DistanceField f(c.map, g);
    PlanRequest r = request_for(c.map, f, a, s, static_cast<int>(rng.uniform_int(1, 4)),
                                static_cast<int>(rng.uniform_int(0, 8)), c.horizon);
    PlanResult res = plan(c.map, table, r);
    if (!res.path) continue;
    table.insert(*res.path);
    c.reserved.push_back(*res.path);
  }
  pick(c.start, c.goal);
  c.cmax = static_cast<int>(rng.uniform_int(1, 4));
  c.edt = static_cast<int>(rng.uniform_int(0, 8));
  return c;
}

// Structural soundness of a planned path against a reservation table.
inline std::vector<std::string> path_problems(const RailMap& map, const SafeIntervalTable& table, const Path& p,
                                              const PlanRequest& req) {
  std::vector<std::string> out;
  if (p.visits.empty()) return {"empty path"};
  if (!req.override) {
    if (p.visits.front().cell != req.start_state / 4) out.push_back("wrong start cell");
    if (p.entry_time() < req.earliest_entry) out.push_back("entered before edt");
  }
  if (p.visits.back().cell != req.goal_cell) out.push_back("does not end at the goal");
  if (p.visits.back().leave_t != p.visits.back().enter_t + 1) out.push_back("goal visit is not one step");
  for (std::size_t k = 0; k + 1 < p.visits.size(); ++k) {
    const Visit& a = p.visits[k];
    const Visit& b = p.visits[k + 1];
    if (a.leave_t != b.enter_t) out.push_back("visits not contiguous");
    if (k > 0 || !req.override) {
      if (b.enter_t - a.enter_t < req.cmax) out.push_back("too fast");
    }
    if (!map.at(a.cell).allows(a.orientation, b.orientation) || map.neighbor(a.cell, b.orientation) != b.cell)
      out.push_back("not a rail move");
    if (b.enter_t > req.horizon) out.push_back("beyond horizon");
  }
  if (table.conflicts(p)) out.push_back("conflicts with reservations");
  return out;
}

// Uniformly random commands, biased towards MoveForward.
class RandomController : public Controller {
 public:
  explicit RandomController(std::uint64_t seed) : rng_(seed, 17) {}
  void decide(const SimState&, std::span<const MalfunctionEvent>, std::span<Command> out) override {
    for (Command& c : out) {
      const auto r = rng_.uniform_int(0, 5);
      c = r <= 2 ? Command::MoveForward : static_cast<Command>(r - 2);
    }
  }

 private:
  Rng rng_;
};

// Invariants between two consecutive states: no shared cells, no swaps,
// moves only along rail transitions, counters in range, agents conserved and
// the occupancy index consistent. Returns one message per violation.
inline std::vector<std::string> step_violations(const Environment& env, const SimState& before, const SimState& after) {
  std::vector<std::string> out;
  const int m = env.agent_count();
  const RailMap& map = env.map();
  auto who = [&](int a) { return "t=" + std::to_string(before.t) + " agent " + std::to_string(a) + ": "; };
  if (after.t != before.t + 1) out.push_back("time did not advance by one");
  if (static_cast<int>(after.agents.size()) != m) out.push_back("agent count changed");
  std::vector<int> seen(static_cast<std::size_t>(map.cell_count()), -1);
  for (int a = 0; a < m; ++a) {
    const AgentRuntime& x = before.agents[static_cast<std::size_t>(a)];
    const AgentRuntime& y = after.agents[static_cast<std::size_t>(a)];
    const TrainSpec& spec = env.train(a);
    if (x.status == AgentStatus::Done && y.status != AgentStatus::Done) out.push_back(who(a) + "left Done");
    if (x.status == AgentStatus::OnMap && y.status == AgentStatus::OffMap) out.push_back(who(a) + "vanished");
    if (y.status == AgentStatus::OffMap && y.cell != -1) out.push_back(who(a) + "off-map agent has a cell");
    if (y.counter < 0 || y.counter > spec.cmax) out.push_back(who(a) + "counter out of range");
    if (y.malfunction_left < 0) out.push_back(who(a) + "negative malfunction");
    if (y.status == AgentStatus::OnMap) {
      int& s = seen[static_cast<std::size_t>(y.cell)];
      if (s >= 0) out.push_back(who(a) + "vertex conflict with agent " + std::to_string(s));
      s = a;
      if (after.occupancy[static_cast<std::size_t>(y.cell)] != a) out.push_back(who(a) + "occupancy index stale");
    }
    if (x.status == AgentStatus::OffMap && y.status == AgentStatus::OnMap) {
      if (y.cell != map.index(spec.start) || before.t < spec.edt) out.push_back(who(a) + "bad entry");
      continue;
    }
    if (x.status != AgentStatus::OnMap) continue;
    const int to = y.status == AgentStatus::Done ? y.history.back().cell : y.cell;
    if (to == x.cell) {
      if (y.status == AgentStatus::OnMap && y.orientation != x.orientation) out.push_back(who(a) + "turned in place");
      continue;
    }
    bool struck = false;
    if (before.schedule)
      for (const MalfunctionEvent& e : (*before.schedule)[static_cast<std::size_t>(a)]) struck = struck || e.start == before.t;
    if (x.malfunction_left > 0 || struck) out.push_back(who(a) + "moved while malfunctioning");
    if (x.counter + 1 < spec.cmax) out.push_back(who(a) + "moved too early");
    const Transitions tr = map.at(x.cell);
    bool legal = false;
    for (Orientation o : kOrientations)
      if (tr.allows(x.orientation, o) && map.neighbor(x.cell, o) == to) legal = true;
    if (!legal) out.push_back(who(a) + "illegal move");
    if (y.status == AgentStatus::Done && to != env.goal_index(a)) out.push_back(who(a) + "done away from goal");
    for (int b = 0; b < m; ++b) {
      if (b == a) continue;
      const AgentRuntime& xb = before.agents[static_cast<std::size_t>(b)];
      const AgentRuntime& yb = after.agents[static_cast<std::size_t>(b)];
      if (xb.status == AgentStatus::OnMap && xb.cell == to && yb.status == AgentStatus::OnMap && yb.cell == x.cell)
        out.push_back(who(a) + "swap with agent " + std::to_string(b));
    }
  }
  for (int c = 0; c < map.cell_count(); ++c) {
    const int o = after.occupancy[static_cast<std::size_t>(c)];
    if (o >= 0 && seen[static_cast<std::size_t>(c)] != o) out.push_back("occupancy of cell " + std::to_string(c) + " has no agent");
  }
  const int total = after.count(AgentStatus::OffMap) + after.count(AgentStatus::OnMap) + after.count(AgentStatus::Done);
  if (total != m) out.push_back("agents not conserved");
  return out;
}

}  // namespace fixtures
