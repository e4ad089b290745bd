#include "flatland/sipp.hpp"

#include <algorithm>
#include <queue>
#include <unordered_map>

namespace flatland {

int earliest_move_time(int now, int cmax, int counter, int malfunction_left) {
  return now + malfunction_left + std::max(cmax - counter, 1) - 1;
}

int default_horizon(const Environment& env) { return env.tmax() + env.instance().malfunction.max_duration; }

PlanRequest make_request(const Environment& env, int agent) {
  PlanRequest r;
  r.agent = agent;
  r.start_state = env.start_state_index(agent);
  r.goal_cell = env.goal_index(agent);
  r.cmax = env.train(agent).cmax;
  r.earliest_entry = env.train(agent).edt;
  r.horizon = default_horizon(env);
  r.field = &env.field(agent);
  return r;
}

const char* failure_name(PlanFailure f) {
  switch (f) {
    case PlanFailure::None: return "none";
    case PlanFailure::Unreachable: return "unreachable";
    case PlanFailure::Blocked: return "blocked";
  }
  return "?";
}

namespace {

struct Node {
  int state;
  int l;
  int u;
  int t;
  int parent;
};

struct QueueItem {
  long long f;
  int t;
  int node;
};

// Lower f first, then larger t, then earlier node.
struct Worse {
  bool operator()(const QueueItem& a, const QueueItem& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.t != b.t) return a.t < b.t;
    return a.node > b.node;
  }
};

std::uint64_t key(int state, int l) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(state)) << 32) | static_cast<std::uint32_t>(l);
}

}  // namespace

PlanResult plan(const RailMap& map, const SafeIntervalTable& table, const PlanRequest& req) {
  PlanResult res;
  const DistanceField& field = *req.field;
  const int c = req.cmax;
  if (!field.reachable(req.start_state)) {
    res.failure = PlanFailure::Unreachable;
    return res;
  }

  std::vector<Node> nodes;
  std::priority_queue<QueueItem, std::vector<QueueItem>, Worse> open;
  std::unordered_map<std::uint64_t, int> best;
  auto push = [&](int state, Interval iv, int t, int parent) {
    auto [it, fresh] = best.try_emplace(key(state, iv.begin), t);
    if (!fresh) {
      if (it->second <= t) return;
      it->second = t;
    }
    nodes.push_back({state, iv.begin, iv.end, t, parent});
    const long long h = static_cast<long long>(c) * field.at_state(state);
    open.push({t + h, t, static_cast<int>(nodes.size()) - 1});
  };

  const int start_cell = req.start_state / 4;
  if (req.override) {
    const StartOverride& o = *req.override;
    const int cell = o.state / 4;
    table.for_each_free(cell, o.enter_time, o.enter_time, [&](Interval iv) {
      if (iv.end >= o.earliest_move) push(o.state, iv, o.earliest_move - c, -1);
    });
  } else {
    table.for_each_free(start_cell, req.earliest_entry, req.horizon, [&](Interval iv) {
      const int t = std::max(req.earliest_entry, iv.begin);
      if (t <= req.horizon && t + c <= iv.end) push(req.start_state, iv, t, -1);
    });
  }

  int goal_node = -1;
  std::array<int, 4> succ{};
  while (!open.empty()) {
    const QueueItem item = open.top();
    open.pop();
    const Node n = nodes[static_cast<std::size_t>(item.node)];
    if (best[key(n.state, n.l)] < n.t) continue;
    ++res.expansions;
    const int cell = n.state / 4;
    if (cell == req.goal_cell) {
      goal_node = item.node;
      break;
    }
    const int earliest = n.t + c;
    const int latest = std::min(n.u, req.horizon);
    if (earliest > latest) continue;
    const int k = map.successor_states(n.state, succ);
    for (int i = 0; i < k; ++i) {
      const int s2 = succ[static_cast<std::size_t>(i)];
      if (!field.reachable(s2)) continue;
      const int cell2 = s2 / 4;
      const bool goal = cell2 == req.goal_cell;
      table.for_each_free(cell2, earliest, latest, [&](Interval iv) {
        const int t2 = std::max(earliest, iv.begin);
        if (t2 > latest) return;
        if (!goal && t2 + c > iv.end) return;
        if (table.edge_used(cell2, cell, t2)) return;
        push(s2, iv, t2, item.node);
      });
    }
  }

  if (goal_node < 0) {
    res.failure = PlanFailure::Blocked;
    return res;
  }
  std::vector<int> chain;
  for (int i = goal_node; i >= 0; i = nodes[static_cast<std::size_t>(i)].parent) chain.push_back(i);
  std::reverse(chain.begin(), chain.end());
  Path path;
  path.agent = req.agent;
  path.visits.reserve(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const Node& n = nodes[static_cast<std::size_t>(chain[i])];
    const int leave = i + 1 < chain.size() ? nodes[static_cast<std::size_t>(chain[i + 1])].t : n.t + 1;
    path.visits.push_back({n.state / 4, orientation_from(n.state % 4), n.t, leave});
  }
  if (req.override) path.visits.front().enter_t = req.override->enter_time;
  res.path = std::move(path);
  return res;
}

}  // namespace flatland
