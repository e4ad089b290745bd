#include "flatland/executor.hpp"

#include <algorithm>

namespace flatland {

namespace {

McpState lists_from(const Environment& env, const Solution& solution) {
  McpState mcp;
  const int m = env.agent_count();
  mcp.cells.resize(static_cast<std::size_t>(env.map().cell_count()));
  mcp.served.assign(mcp.cells.size(), 0);
  mcp.slot_of.resize(static_cast<std::size_t>(m));
  mcp.cursor.assign(static_cast<std::size_t>(m), -1);
  for (int a = 0; a < m; ++a) {
    const auto& p = solution.paths[static_cast<std::size_t>(a)];
    if (!p) continue;
    for (int k = 0; k < static_cast<int>(p->visits.size()); ++k) {
      const Visit& v = p->visits[static_cast<std::size_t>(k)];
      mcp.cells[static_cast<std::size_t>(v.cell)].push_back({a, k, v.enter_t});
    }
    mcp.slot_of[static_cast<std::size_t>(a)].assign(p->visits.size(), -1);
  }
  for (auto& list : mcp.cells) {
    std::sort(list.begin(), list.end(), [](const McpState::Slot& x, const McpState::Slot& y) {
      return x.enter_t != y.enter_t ? x.enter_t < y.enter_t : x.agent < y.agent;
    });
    for (int q = 0; q < static_cast<int>(list.size()); ++q)
      mcp.slot_of[static_cast<std::size_t>(list[static_cast<std::size_t>(q)].agent)]
                 [static_cast<std::size_t>(list[static_cast<std::size_t>(q)].visit)] = q;
  }
  return mcp;
}

// Marks visit k of agent a as left; cells must be vacated in list order.
void serve(McpState& mcp, const Path& path, int a, int k) {
  const int cell = path.visits[static_cast<std::size_t>(k)].cell;
  int& s = mcp.served[static_cast<std::size_t>(cell)];
  if (mcp.slot_of[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)] != s)
    throw DesyncError("agent " + std::to_string(a) + " left cell " + std::to_string(cell) + " out of order");
  ++s;
}

}  // namespace

McpState build_mcp(const Environment& env, const Solution& solution) { return lists_from(env, solution); }

McpState build_mcp(const Environment& env, const Solution& solution, const SimState& sim) {
  McpState mcp = lists_from(env, solution);
  const int m = env.agent_count();
  // Visits are served in global time order, so replay them sorted by leave time.
  struct Done {
    int leave;
    int agent;
    int visit;
  };
  std::vector<Done> done;
  for (int a = 0; a < m; ++a) {
    const auto& p = solution.paths[static_cast<std::size_t>(a)];
    const AgentRuntime& ag = sim.agents[static_cast<std::size_t>(a)];
    if (!p) {
      if (ag.status != AgentStatus::OffMap)
        throw DesyncError("agent " + std::to_string(a) + " is on the map without a path");
      continue;
    }
    const auto& h = ag.history;
    if (h.size() > p->visits.size())
      throw DesyncError("agent " + std::to_string(a) + " history longer than its path");
    for (std::size_t k = 0; k < h.size(); ++k)
      if (h[k].cell != p->visits[k].cell)
        throw DesyncError("agent " + std::to_string(a) + " history differs from its path");
    int completed = 0;
    if (ag.status == AgentStatus::Done) {
      if (h.size() != p->visits.size()) throw DesyncError("agent " + std::to_string(a) + " finished early");
      completed = static_cast<int>(h.size());
      mcp.cursor[static_cast<std::size_t>(a)] = completed - 1;
    } else if (ag.status == AgentStatus::OnMap) {
      completed = static_cast<int>(h.size()) - 1;
      mcp.cursor[static_cast<std::size_t>(a)] = completed;
    }
    for (int k = 0; k < completed; ++k) done.push_back({h[static_cast<std::size_t>(k)].leave_t, a, k});
  }
  std::sort(done.begin(), done.end(), [](const Done& x, const Done& y) {
    return x.leave != y.leave ? x.leave < y.leave : x.agent < y.agent;
  });
  for (const Done& d : done) {
    const Path& p = *solution.paths[static_cast<std::size_t>(d.agent)];
    ++mcp.served[static_cast<std::size_t>(p.visits[static_cast<std::size_t>(d.visit)].cell)];
  }
  for (const Done& d : done) {
    const Path& p = *solution.paths[static_cast<std::size_t>(d.agent)];
    const int cell = p.visits[static_cast<std::size_t>(d.visit)].cell;
    if (mcp.slot_of[static_cast<std::size_t>(d.agent)][static_cast<std::size_t>(d.visit)] >=
        mcp.served[static_cast<std::size_t>(cell)])
      throw DesyncError("visit order of cell " + std::to_string(cell) + " contradicts the executed trajectory");
  }
  return mcp;
}

void mcp_commands(const Environment& env, const SimState& sim, const McpState& mcp, const Solution& solution,
                  std::span<Command> out) {
  const int m = env.agent_count();
  const int t = sim.t;
  std::vector<char> go(static_cast<std::size_t>(m), 0);
  std::vector<int> depends(static_cast<std::size_t>(m), -1);
  std::vector<Command> move(static_cast<std::size_t>(m), Command::Stop);

  for (int a = 0; a < m; ++a) {
    const auto& p = solution.paths[static_cast<std::size_t>(a)];
    const AgentRuntime& ag = sim.agents[static_cast<std::size_t>(a)];
    if (!p || ag.status == AgentStatus::Done || ag.malfunction_left > 0) continue;
    const int cur = mcp.cursor[static_cast<std::size_t>(a)];
    if (cur + 1 >= static_cast<int>(p->visits.size())) continue;
    const Visit& next = p->visits[static_cast<std::size_t>(cur + 1)];
    const int cmax = env.train(a).cmax;
    if (ag.status == AgentStatus::OffMap) {
      move[static_cast<std::size_t>(a)] = Command::MoveForward;
      if (t < env.train(a).edt) continue;
    } else {
      move[static_cast<std::size_t>(a)] = command_towards(ag.orientation, next.orientation);
      if (ag.counter + 1 < cmax) {
        out[static_cast<std::size_t>(a)] = move[static_cast<std::size_t>(a)];  // charge the speed counter
        continue;
      }
    }
    if (t < next.enter_t) continue;
    const int q = mcp.slot_of[static_cast<std::size_t>(a)][static_cast<std::size_t>(cur + 1)];
    const int served = mcp.served[static_cast<std::size_t>(next.cell)];
    if (served == q) {
      go[static_cast<std::size_t>(a)] = 1;
    } else if (served == q - 1) {
      const McpState::Slot& pred = mcp.cells[static_cast<std::size_t>(next.cell)][static_cast<std::size_t>(q - 1)];
      const AgentRuntime& pa = sim.agents[static_cast<std::size_t>(pred.agent)];
      if (pa.status == AgentStatus::OnMap && pa.cell == next.cell &&
          mcp.cursor[static_cast<std::size_t>(pred.agent)] == pred.visit) {
        go[static_cast<std::size_t>(a)] = 1;
        depends[static_cast<std::size_t>(a)] = pred.agent;
      }
    }
  }
  // Greatest fixed point: following is allowed only behind a train that moves.
  for (bool changed = true; changed;) {
    changed = false;
    for (int a = 0; a < m; ++a) {
      const int d = depends[static_cast<std::size_t>(a)];
      if (go[static_cast<std::size_t>(a)] && d >= 0 && !go[static_cast<std::size_t>(d)]) {
        go[static_cast<std::size_t>(a)] = 0;
        changed = true;
      }
    }
  }
  for (int a = 0; a < m; ++a)
    if (go[static_cast<std::size_t>(a)]) out[static_cast<std::size_t>(a)] = move[static_cast<std::size_t>(a)];
}

void mcp_sync(const Environment& env, const SimState& sim, McpState& mcp, const Solution& solution) {
  // A goal visit is entered and vacated in the same step, so it is served
  // after every other departure of that step.
  std::vector<int> arrived;
  for (int a = 0; a < env.agent_count(); ++a) {
    const auto& p = solution.paths[static_cast<std::size_t>(a)];
    const AgentRuntime& ag = sim.agents[static_cast<std::size_t>(a)];
    int& cur = mcp.cursor[static_cast<std::size_t>(a)];
    if (!p) {
      if (ag.status != AgentStatus::OffMap) throw DesyncError("agent " + std::to_string(a) + " moved without a path");
      continue;
    }
    const int last = static_cast<int>(p->visits.size()) - 1;
    switch (ag.status) {
      case AgentStatus::OffMap:
        if (cur != -1) throw DesyncError("agent " + std::to_string(a) + " left the map early");
        break;
      case AgentStatus::OnMap: {
        if (cur == -1) {
          if (ag.cell != p->visits.front().cell) throw DesyncError("agent " + std::to_string(a) + " entered elsewhere");
          cur = 0;
        } else if (ag.cell != p->visits[static_cast<std::size_t>(cur)].cell) {
          if (cur + 1 > last || ag.cell != p->visits[static_cast<std::size_t>(cur + 1)].cell)
            throw DesyncError("agent " + std::to_string(a) + " is off its planned path");
          serve(mcp, *p, a, cur);
          ++cur;
        }
        break;
      }
      case AgentStatus::Done:
        if (cur == last) break;
        if (cur + 1 != last) throw DesyncError("agent " + std::to_string(a) + " finished off its planned path");
        serve(mcp, *p, a, cur);
        cur = last;
        arrived.push_back(a);
        break;
    }
  }
  for (int a : arrived) serve(mcp, *solution.paths[static_cast<std::size_t>(a)], a, mcp.cursor[static_cast<std::size_t>(a)]);
}

ReplanResult partial_replan(const Environment& env, const SimState& sim, const Solution& solution, const McpState& mcp,
                            int iterations, std::uint64_t seed, int neighborhood_size) {
  ReplanResult res{solution, mcp};
  res.projected_delay = res.final_delay = solution.total_delay;
  if (iterations <= 0) return res;
  const int m = env.agent_count();

  // Malfunction-free projection of the current plan from the live state.
  SimState proj = sim;
  proj.schedule = std::make_shared<const MalfunctionSchedule>(static_cast<std::size_t>(m));
  proj.next_event.assign(static_cast<std::size_t>(m), 0);
  McpState pm = mcp;
  auto pending = [&] {
    for (int a = 0; a < m; ++a)
      if (solution.paths[static_cast<std::size_t>(a)] && proj.agents[static_cast<std::size_t>(a)].status != AgentStatus::Done)
        return true;
    return false;
  };
  const int cap = sim.t + 4 * env.tmax() + env.instance().malfunction.max_duration;
  std::vector<Command> cmds(static_cast<std::size_t>(m));
  while (pending() && proj.t < cap) {
    std::fill(cmds.begin(), cmds.end(), Command::Stop);
    mcp_commands(env, proj, pm, solution, cmds);
    step(env, proj, cmds);
    mcp_sync(env, proj, pm, solution);
  }
  if (pending()) return res;

  std::vector<std::optional<Path>> paths(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a)
    if (solution.paths[static_cast<std::size_t>(a)])
      paths[static_cast<std::size_t>(a)] = Path{a, proj.agents[static_cast<std::size_t>(a)].history};
  Solution projected = make_solution(env, std::move(paths));
  res.projected_delay = projected.total_delay;

  std::vector<AgentStart> starts(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) {
    const AgentRuntime& ag = sim.agents[static_cast<std::size_t>(a)];
    AgentStart& s = starts[static_cast<std::size_t>(a)];
    const TrainSpec& spec = env.train(a);
    switch (ag.status) {
      case AgentStatus::Done:
        s.frozen = true;
        break;
      case AgentStatus::OffMap:
        s.earliest_entry = std::max(spec.edt, sim.t + ag.malfunction_left);
        break;
      case AgentStatus::OnMap:
        s.override = StartOverride{ag.cell * 4 + to_int(ag.orientation), ag.history.back().enter_t,
                                   earliest_move_time(sim.t, spec.cmax, ag.counter, ag.malfunction_left)};
        s.prefix.assign(ag.history.begin(), ag.history.end() - 1);
        break;
    }
  }
  LnsConfig cfg;
  cfg.iteration_limit = iterations;
  cfg.mode = LnsMode::DelayOnly;
  cfg.seed = seed;
  cfg.neighborhood_size = neighborhood_size;
  cfg.now = sim.t;
  cfg.horizon = std::max(default_horizon(env), projected.makespan + 1);
  Lns lns(env, std::move(projected), cfg, std::move(starts));
  lns.run();
  res.solution = lns.incumbent();
  res.final_delay = res.solution.total_delay;
  res.mcp = build_mcp(env, res.solution, sim);
  res.replanned = true;
  return res;
}

const char* mode_name(ExecutionMode m) {
  switch (m) {
    case ExecutionMode::McpOnly: return "mcp-only";
    case ExecutionMode::LnsPr: return "lns-pr";
    case ExecutionMode::PerMalfunctionPr: return "per-malfunction-pr";
  }
  return "?";
}

std::optional<ExecutionMode> parse_mode(std::string_view s) {
  for (ExecutionMode m : {ExecutionMode::McpOnly, ExecutionMode::LnsPr, ExecutionMode::PerMalfunctionPr})
    if (s == mode_name(m)) return m;
  return std::nullopt;
}

std::vector<int> replan_times(int tmax, int r) {
  std::vector<int> out;
  for (int i = 1; i <= r; ++i) {
    const int t = static_cast<int>(static_cast<long long>(i) * tmax / r);
    if (t > 0 && t < tmax && (out.empty() || out.back() != t)) out.push_back(t);
  }
  return out;
}

namespace {

class ExecutionController : public Controller {
 public:
  ExecutionController(const Environment& env, const Solution& solution, const ReplanConfig& config)
      : env_(env), config_(config), solution_(solution), mcp_(build_mcp(env, solution)) {
    if (config.mode == ExecutionMode::LnsPr) times_ = replan_times(env.tmax(), config.r);
  }

  void decide(const SimState& state, std::span<const MalfunctionEvent> revealed, std::span<Command> out) override {
    if (state.t > 0) mcp_sync(env_, state, mcp_, solution_);
    bool replan = false;
    if (config_.mode == ExecutionMode::LnsPr)
      replan = std::binary_search(times_.begin(), times_.end(), state.t);
    else if (config_.mode == ExecutionMode::PerMalfunctionPr)
      replan = !revealed.empty();
    if (replan && config_.p > 0) {
      const auto t0 = Clock::now();
      ReplanResult r = partial_replan(env_, state, solution_, mcp_, config_.p,
                                      Rng::mix(config_.seed, static_cast<std::uint64_t>(state.t)),
                                      config_.neighborhood_size);
      if (r.replanned) {
        solution_ = std::move(r.solution);
        mcp_ = std::move(r.mcp);
      }
      ++replans_;
      planning_ms_ += std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    }
    mcp_commands(env_, state, mcp_, solution_, out);
  }

  int replans() const { return replans_; }
  double planning_ms() const { return planning_ms_; }

 private:
  const Environment& env_;
  ReplanConfig config_;
  Solution solution_;
  McpState mcp_;
  std::vector<int> times_;
  int replans_ = 0;
  double planning_ms_ = 0;
};

}  // namespace

ControllerReport run_controller(const Environment& env, const Solution& solution, const ReplanConfig& config,
                                const MalfunctionSchedule& schedule, const EpisodeOptions& options) {
  ExecutionController ctrl(env, solution, config);
  ControllerReport rep;
  rep.outcome = run_episode(env, ctrl, schedule, options);
  rep.replans = ctrl.replans();
  rep.planning_ms = ctrl.planning_ms();
  return rep;
}

}  // namespace flatland
