#include "flatland/planner.hpp"

#include <algorithm>
#include <climits>
#include <future>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "flatland/sim.hpp"
#include "flatland/sipp.hpp"

namespace flatland {

int predicted_act(const Environment& env, int agent, const std::optional<Path>& path) {
  const int tmax = env.tmax();
  if (!path) return tmax + env.scoring_distance(agent, env.start_state_index(agent));
  if (path->planned_arrival() < tmax) return path->planned_arrival();
  // Position at the end of the last executed timestep, tmax - 1.
  for (const Visit& v : path->visits)
    if (v.enter_t <= tmax - 1 && tmax - 1 < v.leave_t)
      return tmax + env.scoring_distance(agent, v.cell * 4 + to_int(v.orientation));
  return tmax + env.scoring_distance(agent, env.start_state_index(agent));
}

void evaluate(const Environment& env, Solution& s) {
  const int m = env.agent_count();
  s.paths.resize(static_cast<std::size_t>(m));
  s.delays.assign(static_cast<std::size_t>(m), 0);
  s.total_delay = 0;
  s.planned = 0;
  s.success = 0;
  s.makespan = 0;
  for (int a = 0; a < m; ++a) {
    const auto& p = s.paths[static_cast<std::size_t>(a)];
    const int act = predicted_act(env, a, p);
    const long long d = std::max<long long>(static_cast<long long>(act) - env.train(a).eat, 0);
    s.delays[static_cast<std::size_t>(a)] = d;
    s.total_delay += d;
    if (p) {
      ++s.planned;
      if (p->planned_arrival() < env.tmax()) ++s.success;
      s.makespan = std::max(s.makespan, p->planned_arrival());
    }
  }
  s.reward_estimate = normalized_reward(s.total_delay, m, env.tmax());
}

Solution make_solution(const Environment& env, std::vector<std::optional<Path>> paths) {
  Solution s;
  s.paths = std::move(paths);
  evaluate(env, s);
  return s;
}

Solution empty_solution(const Environment& env) { return make_solution(env, {}); }

std::vector<std::string> find_conflicts(const Environment& env, const Solution& solution) {
  std::vector<std::string> out;
  const RailMap& map = env.map();
  const int m = env.agent_count();
  if (static_cast<int>(solution.paths.size()) != m) {
    out.push_back("solution has " + std::to_string(solution.paths.size()) + " agents, instance has " +
                  std::to_string(m));
    return out;
  }
  std::unordered_map<long long, int> cell_time;  // (cell, t) -> agent
  std::unordered_set<long long> moves;            // (from, to, t)
  const long long cells = map.cell_count();
  auto ct = [&](int cell, int t) { return static_cast<long long>(t) * cells + cell; };
  auto mv = [&](int from, int to, int t) { return (static_cast<long long>(t) * cells + from) * cells + to; };

  for (int a = 0; a < m; ++a) {
    const auto& p = solution.paths[static_cast<std::size_t>(a)];
    if (!p) continue;
    const std::string who = "agent " + std::to_string(a) + ": ";
    const TrainSpec& spec = env.train(a);
    const auto& v = p->visits;
    if (p->agent != a) out.push_back(who + "path labelled for agent " + std::to_string(p->agent));
    if (v.empty()) {
      out.push_back(who + "empty path");
      continue;
    }
    if (v.front().cell != map.index(spec.start) || v.front().orientation != spec.initial_orientation)
      out.push_back(who + "does not enter at its start state");
    if (v.front().enter_t < spec.edt) out.push_back(who + "enters before edt");
    if (v.back().cell != map.index(spec.goal)) out.push_back(who + "does not end at its goal");
    if (v.back().leave_t != v.back().enter_t + 1) out.push_back(who + "goal visit must last one timestep");
    bool shape_ok = true;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (v[k].cell < 0 || v[k].cell >= map.cell_count()) {
        out.push_back(who + "cell out of range");
        shape_ok = false;
        break;
      }
      if (v[k].leave_t <= v[k].enter_t) out.push_back(who + "empty or negative visit");
      if (k + 1 < v.size()) {
        if (v[k].cell == map.index(spec.goal)) out.push_back(who + "passes through its goal");
        if (v[k].leave_t != v[k + 1].enter_t) out.push_back(who + "gap between visits");
        if (v[k + 1].enter_t - v[k].enter_t < spec.cmax) out.push_back(who + "faster than cmax");
        const RailState here{map.cell_of(v[k].cell), v[k].orientation};
        const RailState next{map.cell_of(v[k + 1].cell), v[k + 1].orientation};
        bool adjacent = false;
        if (map.traversable(here.cell))
          for (const RailState& s : successors(map, here)) adjacent = adjacent || s == next;
        if (!adjacent) out.push_back(who + "non-rail move at t=" + std::to_string(v[k + 1].enter_t));
      }
    }
    if (!shape_ok) continue;
    for (std::size_t k = 0; k < v.size(); ++k) {
      for (int t = v[k].enter_t; t < v[k].leave_t; ++t) {
        auto [it, fresh] = cell_time.try_emplace(ct(v[k].cell, t), a);
        if (!fresh && it->second != a)
          out.push_back("vertex conflict: agents " + std::to_string(it->second) + " and " + std::to_string(a) +
                        " at cell " + std::to_string(v[k].cell) + " t=" + std::to_string(t));
      }
      if (k > 0) moves.insert(mv(v[k - 1].cell, v[k].cell, v[k].enter_t));
    }
  }
  for (int a = 0; a < m; ++a) {
    const auto& p = solution.paths[static_cast<std::size_t>(a)];
    if (!p) continue;
    for (std::size_t k = 1; k < p->visits.size(); ++k) {
      const Visit& x = p->visits[k - 1];
      const Visit& y = p->visits[k];
      if (x.cell < 0 || y.cell < 0 || x.cell >= cells || y.cell >= cells) continue;
      if (moves.count(mv(y.cell, x.cell, y.enter_t)))
        out.push_back("swap conflict: agent " + std::to_string(a) + " at t=" + std::to_string(y.enter_t));
    }
  }
  return out;
}

const char* strategy_name(PriorityStrategy s) {
  switch (s) {
    case PriorityStrategy::ByIndex: return "index";
    case PriorityStrategy::ByEarliestArrival: return "earliest-arrival";
    case PriorityStrategy::BySlack: return "slack";
    case PriorityStrategy::BySlackReversed: return "slack-reversed";
  }
  return "?";
}

std::optional<PriorityStrategy> parse_strategy(std::string_view s) {
  for (PriorityStrategy p : kDefaultPortfolio)
    if (s == strategy_name(p)) return p;
  return std::nullopt;
}

long long slack(const Environment& env, int agent) {
  const int d = env.start_distance(agent);
  if (d == kUnreachable) return LLONG_MAX;
  return static_cast<long long>(env.train(agent).eat) - env.train(agent).edt - d;
}

std::vector<int> order(const Environment& env, PriorityStrategy strategy) {
  const int m = env.agent_count();
  std::vector<int> ids(static_cast<std::size_t>(m));
  std::iota(ids.begin(), ids.end(), 0);
  switch (strategy) {
    case PriorityStrategy::ByIndex:
      break;
    case PriorityStrategy::ByEarliestArrival:
      std::stable_sort(ids.begin(), ids.end(),
                       [&](int a, int b) { return env.free_flow_arrival(a) < env.free_flow_arrival(b); });
      break;
    case PriorityStrategy::BySlack:
      std::sort(ids.begin(), ids.end(), [&](int a, int b) {
        const long long sa = slack(env, a), sb = slack(env, b);
        if (sa != sb) return sa < sb;
        if (env.train(a).cmax != env.train(b).cmax) return env.train(a).cmax < env.train(b).cmax;
        return a < b;
      });
      break;
    case PriorityStrategy::BySlackReversed:
      std::sort(ids.begin(), ids.end(), [&](int a, int b) {
        const long long sa = slack(env, a), sb = slack(env, b);
        if (sa != sb) return sa < sb;
        if (env.train(a).cmax != env.train(b).cmax) return env.train(a).cmax > env.train(b).cmax;
        return a > b;
      });
      break;
  }
  return ids;
}

PlanRun prioritized_plan(const Environment& env, std::span<const int> agents, const PlanOptions& options) {
  PlanRun run;
  SafeIntervalTable table(env.map().cell_count());
  std::vector<std::optional<Path>> paths(static_cast<std::size_t>(env.agent_count()));
  for (int a : agents) {
    if (options.deadline && Clock::now() > *options.deadline) {
      run.timed_out = true;
      break;
    }
    PlanResult r = plan(env.map(), table, make_request(env, a));
    if (!r.path) continue;
    table.insert(*r.path);
    paths[static_cast<std::size_t>(a)] = std::move(r.path);
  }
  run.solution = make_solution(env, std::move(paths));
  return run;
}

PortfolioResult portfolio_plan(const Environment& env, std::span<const PriorityStrategy> strategies,
                               std::optional<Clock::time_point> deadline, bool parallel) {
  PortfolioResult res;
  std::vector<PlanRun> runs(strategies.size());
  auto run_one = [&](std::size_t i) {
    const std::vector<int> ids = order(env, strategies[i]);
    return prioritized_plan(env, ids, PlanOptions{deadline});
  };
  if (parallel && strategies.size() > 1) {
    std::vector<std::future<PlanRun>> futures;
    for (std::size_t i = 0; i < strategies.size(); ++i) futures.push_back(std::async(std::launch::async, run_one, i));
    for (std::size_t i = 0; i < strategies.size(); ++i) runs[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < strategies.size(); ++i) runs[i] = run_one(i);
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].timed_out) {
      res.run_delays.push_back(std::nullopt);
      continue;
    }
    res.run_delays.push_back(runs[i].solution.total_delay);
    if (res.chosen < 0) {
      res.chosen = static_cast<int>(i);
      continue;
    }
    const Solution& best = runs[static_cast<std::size_t>(res.chosen)].solution;
    const Solution& cand = runs[i].solution;
    if (cand.total_delay < best.total_delay || (cand.total_delay == best.total_delay && cand.planned > best.planned))
      res.chosen = static_cast<int>(i);
  }
  res.solution = res.chosen >= 0 ? std::move(runs[static_cast<std::size_t>(res.chosen)].solution) : empty_solution(env);
  return res;
}

void write_plan(std::ostream& out, const Environment& env, const Solution& solution) {
  const RailMap& map = env.map();
  out << "flatland-plan 1\nagents " << solution.paths.size() << '\n';
  for (std::size_t a = 0; a < solution.paths.size(); ++a) {
    const auto& p = solution.paths[a];
    if (!p) {
      out << "agent " << a << " unplanned\n";
      continue;
    }
    out << "agent " << a << ' ' << p->visits.size() << '\n';
    for (const Visit& v : p->visits) {
      const Cell c = map.cell_of(v.cell);
      out << c.x << ' ' << c.y << ' ' << orientation_char(v.orientation) << ' ' << v.enter_t << ' ' << v.leave_t
          << '\n';
    }
  }
  out << "end\n";
}

Solution read_plan(std::istream& in, const Environment& env) {
  auto mismatch = [](const std::string& why) { return PlanFileError("plan/instance mismatch: " + why); };
  const RailMap& map = env.map();
  std::string line;
  auto next = [&](const char* what) -> std::istringstream {
    while (std::getline(in, line))
      if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
    throw mismatch(std::string("truncated plan, expected ") + what);
  };
  std::string word;
  int version = 0;
  if (!(next("header") >> word >> version) || word != "flatland-plan" || version != 1)
    throw mismatch("not a flatland-plan 1 file");
  int m = -1;
  if (!(next("agent count") >> word >> m) || word != "agents") throw mismatch("missing agent count");
  if (m != env.agent_count())
    throw mismatch("plan has " + std::to_string(m) + " agents, instance has " + std::to_string(env.agent_count()));
  std::vector<std::optional<Path>> paths(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) {
    std::istringstream ss = next("agent record");
    int id = -1;
    std::string count;
    if (!(ss >> word >> id >> count) || word != "agent" || id != a) throw mismatch("bad record for agent " + std::to_string(a));
    if (count == "unplanned") continue;
    int k = 0;
    try {
      k = std::stoi(count);
    } catch (const std::exception&) {
      throw mismatch("bad visit count for agent " + std::to_string(a));
    }
    if (k < 1) throw mismatch("bad visit count for agent " + std::to_string(a));
    Path p;
    p.agent = a;
    for (int i = 0; i < k; ++i) {
      std::istringstream vs = next("visit");
      Cell c;
      std::string o;
      Visit v;
      if (!(vs >> c.x >> c.y >> o >> v.enter_t >> v.leave_t) || !map.in_bounds(c) || !parse_orientation(o))
        throw mismatch("bad visit for agent " + std::to_string(a));
      v.cell = map.index(c);
      v.orientation = *parse_orientation(o);
      p.visits.push_back(v);
    }
    if (p.visits.front().cell != map.index(env.train(a).start) || p.visits.back().cell != env.goal_index(a))
      throw mismatch("agent " + std::to_string(a) + " path does not join its start and goal");
    paths[static_cast<std::size_t>(a)] = std::move(p);
  }
  if (!(next("end") >> word) || word != "end") throw mismatch("missing end marker");
  return make_solution(env, std::move(paths));
}

}  // namespace flatland
