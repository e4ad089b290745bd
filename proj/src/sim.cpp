#include "flatland/sim.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <ostream>
#include <sstream>

namespace flatland {

char command_char(Command c) {
  switch (c) {
    case Command::MoveForward: return 'F';
    case Command::MoveLeft: return 'L';
    case Command::MoveRight: return 'R';
    case Command::Stop: return 'S';
  }
  return '?';
}

std::optional<Command> parse_command(char c) {
  switch (c) {
    case 'F': return Command::MoveForward;
    case 'L': return Command::MoveLeft;
    case 'R': return Command::MoveRight;
    case 'S': return Command::Stop;
    default: return std::nullopt;
  }
}

char status_char(AgentStatus s) {
  switch (s) {
    case AgentStatus::OffMap: return 'O';
    case AgentStatus::OnMap: return 'M';
    case AgentStatus::Done: return 'D';
  }
  return '?';
}

int SimState::count(AgentStatus s) const {
  return static_cast<int>(
      std::count_if(agents.begin(), agents.end(), [s](const AgentRuntime& a) { return a.status == s; }));
}

SimState initial_state(const Environment& env, MalfunctionSchedule schedule) {
  SimState st;
  const int m = env.agent_count();
  st.agents.resize(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) st.agents[static_cast<std::size_t>(a)].orientation = env.train(a).initial_orientation;
  schedule.resize(static_cast<std::size_t>(m));
  st.schedule = std::make_shared<const MalfunctionSchedule>(std::move(schedule));
  st.next_event.assign(static_cast<std::size_t>(m), 0);
  st.occupancy.assign(static_cast<std::size_t>(env.map().cell_count()), -1);
  return st;
}

std::optional<Orientation> resolve_heading(Transitions cell, Orientation facing, Command c) {
  Orientation desired = facing;
  switch (c) {
    case Command::MoveForward: break;
    case Command::MoveLeft: desired = turn_left(facing); break;
    case Command::MoveRight: desired = turn_right(facing); break;
    case Command::Stop: return std::nullopt;
  }
  const std::uint8_t allowed = cell.outgoing(facing);
  if (allowed & (1u << to_int(desired))) return desired;
  if (std::popcount(allowed) == 1) return orientation_from(std::countr_zero(allowed));
  return std::nullopt;
}

Command command_towards(Orientation facing, Orientation heading) {
  if (heading == turn_left(facing)) return Command::MoveLeft;
  if (heading == turn_right(facing)) return Command::MoveRight;
  return Command::MoveForward;
}

namespace {

struct Intent {
  int agent;
  int from;  // -1 for an entry
  int to;
  Orientation heading;
  bool cancelled = false;
};

}  // namespace

StepEvents step(const Environment& env, SimState& st, std::span<const Command> commands) {
  const RailMap& map = env.map();
  const int t = st.t;
  const int m = static_cast<int>(st.agents.size());
  StepEvents events;

  // Malfunction onsets. Events that fall inside an earlier one, or strike a
  // retired agent, are dropped.
  for (int a = 0; a < m; ++a) {
    AgentRuntime& ag = st.agents[static_cast<std::size_t>(a)];
    const auto& list = (*st.schedule)[static_cast<std::size_t>(a)];
    std::size_t& cur = st.next_event[static_cast<std::size_t>(a)];
    while (cur < list.size() && list[cur].start < t) ++cur;
    if (cur < list.size() && list[cur].start == t) {
      if (ag.status != AgentStatus::Done && ag.malfunction_left == 0) {
        ag.malfunction_left = list[cur].duration;
        events.onsets.push_back(list[cur]);
      }
      ++cur;
    }
  }

  std::vector<Intent> moves;
  std::vector<Intent> entries;
  for (int a = 0; a < m; ++a) {
    AgentRuntime& ag = st.agents[static_cast<std::size_t>(a)];
    const Command cmd = a < static_cast<int>(commands.size()) ? commands[static_cast<std::size_t>(a)] : Command::Stop;
    if (ag.status == AgentStatus::Done) {
      if (cmd != Command::Stop) ++st.ignored_commands;
      continue;
    }
    if (ag.malfunction_left > 0 || cmd == Command::Stop) continue;
    const TrainSpec& spec = env.train(a);
    if (ag.status == AgentStatus::OffMap) {
      if (cmd == Command::MoveForward && t >= spec.edt)
        entries.push_back({a, -1, map.index(spec.start), spec.initial_orientation});
      continue;
    }
    auto heading = resolve_heading(map.at(ag.cell), ag.orientation, cmd);
    if (!heading) continue;
    if (ag.counter < spec.cmax) ++ag.counter;
    if (ag.counter == spec.cmax) moves.push_back({a, ag.cell, map.neighbor(ag.cell, *heading), *heading});
  }

  std::vector<int> move_of(static_cast<std::size_t>(m), -1);
  for (std::size_t i = 0; i < moves.size(); ++i) move_of[static_cast<std::size_t>(moves[i].agent)] = static_cast<int>(i);

  // Claim pass: two movers targeting one cell both fail.
  {
    std::vector<std::size_t> by_target(moves.size());
    for (std::size_t i = 0; i < moves.size(); ++i) by_target[i] = i;
    std::sort(by_target.begin(), by_target.end(), [&](std::size_t x, std::size_t y) {
      return moves[x].to != moves[y].to ? moves[x].to < moves[y].to : x < y;
    });
    for (std::size_t i = 0; i < by_target.size();) {
      std::size_t j = i;
      while (j < by_target.size() && moves[by_target[j]].to == moves[by_target[i]].to) ++j;
      if (j - i > 1)
        for (std::size_t k = i; k < j; ++k) moves[by_target[k]].cancelled = true;
      i = j;
    }
  }
  for (Intent& mv : moves) {
    if (mv.to < 0) {
      mv.cancelled = true;
      continue;
    }
    const int z = st.occupancy[static_cast<std::size_t>(mv.to)];
    if (z < 0) continue;
    const int zi = move_of[static_cast<std::size_t>(z)];
    if (zi >= 0 && moves[static_cast<std::size_t>(zi)].to == mv.from) {
      mv.cancelled = true;
      moves[static_cast<std::size_t>(zi)].cancelled = true;
    }
  }
  // Cascade: a move into a cell whose occupant stays is cancelled.
  for (bool changed = true; changed;) {
    changed = false;
    for (Intent& mv : moves) {
      if (mv.cancelled) continue;
      const int z = st.occupancy[static_cast<std::size_t>(mv.to)];
      if (z < 0) continue;
      const int zi = move_of[static_cast<std::size_t>(z)];
      if (zi < 0 || moves[static_cast<std::size_t>(zi)].cancelled) {
        mv.cancelled = true;
        changed = true;
      }
    }
  }

  std::vector<int> entered_cells;
  for (Intent& en : entries) {
    bool blocked = std::find(entered_cells.begin(), entered_cells.end(), en.to) != entered_cells.end();
    for (const Intent& mv : moves)
      if (!mv.cancelled && mv.to == en.to) blocked = true;
    const int z = st.occupancy[static_cast<std::size_t>(en.to)];
    if (z >= 0) {
      const int zi = move_of[static_cast<std::size_t>(z)];
      if (zi < 0 || moves[static_cast<std::size_t>(zi)].cancelled) blocked = true;
    }
    en.cancelled = blocked;
    if (!blocked) entered_cells.push_back(en.to);
  }

  for (const Intent& mv : moves)
    if (!mv.cancelled) st.occupancy[static_cast<std::size_t>(mv.from)] = -1;
  for (const Intent& mv : moves) {
    if (mv.cancelled) continue;
    AgentRuntime& ag = st.agents[static_cast<std::size_t>(mv.agent)];
    ag.history.back().leave_t = t;
    ag.counter = 0;
    ag.cell = mv.to;
    ag.orientation = mv.heading;
    if (mv.to == env.goal_index(mv.agent)) {
      ag.status = AgentStatus::Done;
      ag.arrival = t;
      ag.cell = -1;
      ag.history.push_back({mv.to, mv.heading, t, t + 1});
      events.arrivals.push_back(mv.agent);
    } else {
      ag.history.push_back({mv.to, mv.heading, t, -1});
      st.occupancy[static_cast<std::size_t>(mv.to)] = mv.agent;
    }
  }
  for (const Intent& en : entries) {
    if (en.cancelled) continue;
    AgentRuntime& ag = st.agents[static_cast<std::size_t>(en.agent)];
    ag.status = AgentStatus::OnMap;
    ag.cell = en.to;
    ag.orientation = en.heading;
    ag.counter = 0;
    ag.history.push_back({en.to, en.heading, t, -1});
    st.occupancy[static_cast<std::size_t>(en.to)] = en.agent;
  }

  for (AgentRuntime& ag : st.agents) {
    if (ag.status == AgentStatus::Done)
      ag.malfunction_left = 0;
    else if (ag.malfunction_left > 0)
      --ag.malfunction_left;
  }
  st.t = t + 1;
  return events;
}

double normalized_reward(long long total_delay, int agents, int tmax) {
  if (agents <= 0 || tmax <= 0) return 1.0;
  const double r = 1.0 - static_cast<double>(total_delay) / (static_cast<double>(agents) * tmax);
  return std::clamp(r, 0.0, 1.0);
}

EpisodeResult score(const Environment& env, const SimState& st) {
  EpisodeResult res;
  const int tmax = env.tmax();
  for (int a = 0; a < static_cast<int>(st.agents.size()); ++a) {
    const AgentRuntime& ag = st.agents[static_cast<std::size_t>(a)];
    AgentScore s;
    if (ag.status == AgentStatus::Done) {
      s.finished = true;
      s.act = ag.arrival;
      if (ag.arrival < tmax) ++res.success;
    } else {
      const int state = ag.status == AgentStatus::OnMap
                            ? ag.cell * 4 + to_int(ag.orientation)
                            : env.start_state_index(a);
      s.act = tmax + env.scoring_distance(a, state);
    }
    s.delay = std::max<long long>(static_cast<long long>(s.act) - env.train(a).eat, 0);
    res.total_delay += s.delay;
    res.agents.push_back(s);
  }
  res.reward = normalized_reward(res.total_delay, static_cast<int>(st.agents.size()), tmax);
  return res;
}

void write_trajectory_header(std::ostream& out, int agents) {
  out << "flatland-trajectory 1\nagents " << agents << '\n';
}

void write_trajectory_step(std::ostream& out, const Environment& env, const SimState& st, int t) {
  for (int a = 0; a < static_cast<int>(st.agents.size()); ++a) {
    const AgentRuntime& ag = st.agents[static_cast<std::size_t>(a)];
    Cell c{-1, -1};
    if (ag.status == AgentStatus::OnMap) c = env.map().cell_of(ag.cell);
    out << t << ' ' << a << ' ' << status_char(ag.status) << ' ' << c.x << ' ' << c.y << ' '
        << orientation_char(ag.orientation) << ' ' << ag.counter << ' ' << ag.malfunction_left << '\n';
  }
}

EpisodeOutcome run_episode(const Environment& env, Controller& controller, const MalfunctionSchedule& schedule,
                           const EpisodeOptions& options) {
  EpisodeOutcome out;
  out.final_state = initial_state(env, schedule);
  SimState& st = out.final_state;
  const int m = env.agent_count();
  const int horizon = options.horizon > 0 ? options.horizon : env.tmax();
  if (options.trajectory) write_trajectory_header(*options.trajectory, m);
  if (options.commands) *options.commands << "flatland-commands 1\nagents " << m << '\n';

  std::vector<Command> cmds(static_cast<std::size_t>(m));
  std::vector<MalfunctionEvent> revealed;
  while (st.t < horizon && !st.all_done()) {
    std::fill(cmds.begin(), cmds.end(), Command::Stop);
    try {
      controller.decide(st, revealed, cmds);
    } catch (const std::exception& e) {
      out.aborted = true;
      out.error = e.what();
      break;
    }
    if (options.commands) {
      *options.commands << st.t << ' ';
      for (Command c : cmds) *options.commands << command_char(c);
      *options.commands << '\n';
    }
    StepEvents ev = step(env, st, cmds);
    revealed = std::move(ev.onsets);
    if (options.trajectory) write_trajectory_step(*options.trajectory, env, st, st.t - 1);
  }
  out.result = score(env, st);
  return out;
}

ReplayController::ReplayController(std::istream& in, int agents) {
  std::string line;
  if (!std::getline(in, line) || line != "flatland-commands 1")
    throw std::runtime_error("expected 'flatland-commands 1'");
  int declared = -1;
  std::string word;
  if (!std::getline(in, line) || !(std::istringstream(line) >> word >> declared) || word != "agents" ||
      declared != agents)
    throw std::runtime_error("command file agent count does not match instance");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    int t = -1;
    std::string row;
    if (!(ss >> t >> row) || t < 0 || static_cast<int>(row.size()) != agents)
      throw std::runtime_error("bad command row: " + line);
    if (static_cast<std::size_t>(t) >= rows_.size())
      rows_.resize(static_cast<std::size_t>(t) + 1, std::vector<Command>(static_cast<std::size_t>(agents), Command::Stop));
    for (int a = 0; a < agents; ++a) {
      auto c = parse_command(row[static_cast<std::size_t>(a)]);
      if (!c) throw std::runtime_error("bad command character in row: " + line);
      rows_[static_cast<std::size_t>(t)][static_cast<std::size_t>(a)] = *c;
    }
  }
}

void ReplayController::decide(const SimState& state, std::span<const MalfunctionEvent>, std::span<Command> out) {
  if (state.t < 0 || static_cast<std::size_t>(state.t) >= rows_.size()) return;
  const auto& row = rows_[static_cast<std::size_t>(state.t)];
  std::copy(row.begin(), row.end(), out.begin());
}

}  // namespace flatland
