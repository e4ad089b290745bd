#include "flatland/lns.hpp"

#include <algorithm>
#include <bit>
#include <ostream>

namespace flatland {

const char* neighborhood_name(NeighborhoodStrategy s) {
  switch (s) {
    case NeighborhoodStrategy::AgentBased: return "agent";
    case NeighborhoodStrategy::IntersectionBased: return "intersection";
    case NeighborhoodStrategy::DelayBased: return "delay";
  }
  return "?";
}

int iteration_limit_for(int agents) {
  if (agents <= 15) return 50;
  if (agents <= 200) return 500;
  return 50;
}

AdaptiveWeights::AdaptiveWeights(double decay, double min_weight) : decay_(decay), min_weight_(min_weight) {
  w_.fill(1.0);
}

NeighborhoodStrategy AdaptiveWeights::choose(Rng& rng) const {
  double total = 0;
  for (double w : w_) total += w;
  double r = rng.uniform01() * total;
  for (int i = 0; i < kStrategyCount; ++i) {
    r -= w_[static_cast<std::size_t>(i)];
    if (r < 0) return static_cast<NeighborhoodStrategy>(i);
  }
  return static_cast<NeighborhoodStrategy>(kStrategyCount - 1);
}

void AdaptiveWeights::update(NeighborhoodStrategy s, long long improvement, long long incumbent_delay) {
  const double gain = static_cast<double>(std::max<long long>(improvement, 0)) /
                      static_cast<double>(std::max<long long>(incumbent_delay, 1));
  double& w = w_[static_cast<std::size_t>(s)];
  w = std::max(decay_ * w + (1 - decay_) * gain, min_weight_);
}

std::array<double, kStrategyCount> AdaptiveWeights::probabilities() const {
  double total = 0;
  for (double w : w_) total += w;
  std::array<double, kStrategyCount> p{};
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = w_[i] / total;
  return p;
}

Lns::Lns(const Environment& env, Solution initial, LnsConfig config, std::vector<AgentStart> starts)
    : env_(env),
      config_(config),
      starts_(std::move(starts)),
      incumbent_(std::move(initial)),
      table_(env.map().cell_count()),
      rng_(config.seed, 3),
      weights_(config.decay, config.min_weight) {
  const int m = env.agent_count();
  if (starts_.empty()) {
    starts_.resize(static_cast<std::size_t>(m));
    for (int a = 0; a < m; ++a) starts_[static_cast<std::size_t>(a)].earliest_entry = env.train(a).edt;
  }
  if (config_.horizon <= 0) config_.horizon = default_horizon(env);
  config_.neighborhood_size = std::max(config_.neighborhood_size, 2);
  evaluate(env_, incumbent_);
  for (int a = 0; a < m; ++a) {
    const auto& p = incumbent_.paths[static_cast<std::size_t>(a)];
    if (p && !starts_[static_cast<std::size_t>(a)].frozen) table_.insert(*p);
  }
  for (int c = 0; c < env.map().cell_count(); ++c)
    if (std::popcount(env.map().at(c).used_sides()) >= 3) intersections_.push_back(c);
  tabu_.assign(static_cast<std::size_t>(m), 0);
}

PlanRequest Lns::request(int agent) const {
  PlanRequest r = make_request(env_, agent);
  const AgentStart& s = starts_[static_cast<std::size_t>(agent)];
  r.horizon = config_.horizon;
  r.earliest_entry = s.earliest_entry;
  r.override = s.override;
  if (s.override) r.start_state = s.override->state;
  return r;
}

std::vector<int> Lns::delayed_agents() const {
  std::vector<int> out;
  for (int a = 0; a < env_.agent_count(); ++a)
    if (!starts_[static_cast<std::size_t>(a)].frozen && incumbent_.delays[static_cast<std::size_t>(a)] > 0)
      out.push_back(a);
  return out;
}

std::vector<int> Lns::free_flow_cells(int agent) const {
  const auto& s = starts_[static_cast<std::size_t>(agent)];
  const DistanceField& field = env_.field(agent);
  int state = s.override ? s.override->state : env_.start_state_index(agent);
  std::vector<int> cells;
  if (!field.reachable(state)) return cells;
  std::array<int, 4> succ{};
  cells.push_back(state / 4);
  while (field.at_state(state) > 0) {
    const int k = env_.map().successor_states(state, succ);
    int next = -1;
    for (int i = 0; i < k && next < 0; ++i)
      if (field.at_state(succ[static_cast<std::size_t>(i)]) == field.at_state(state) - 1)
        next = succ[static_cast<std::size_t>(i)];
    if (next < 0) break;
    state = next;
    cells.push_back(state / 4);
  }
  return cells;
}

void Lns::collect_occupants(int cell, int lo, int hi, int seed, std::vector<int>& out) const {
  for (const auto& o : table_.occupancy(cell)) {
    if (static_cast<int>(out.size()) >= config_.neighborhood_size) return;
    if (o.end <= lo || o.begin > hi || o.agent == seed) continue;
    if (starts_[static_cast<std::size_t>(o.agent)].frozen) continue;
    if (std::find(out.begin(), out.end(), o.agent) == out.end()) out.push_back(o.agent);
  }
}

std::vector<int> Lns::select_neighborhood(NeighborhoodStrategy strategy) {
  const int k = config_.neighborhood_size;
  std::vector<int> out;
  switch (strategy) {
    case NeighborhoodStrategy::DelayBased:
    case NeighborhoodStrategy::AgentBased: {
      const std::vector<int> delayed = delayed_agents();
      if (delayed.empty()) return out;
      int seed = -1;
      if (strategy == NeighborhoodStrategy::DelayBased) {
        seed = delayed[rng_.index(delayed.size())];
      } else {
        auto pick = [&] {
          int best = -1;
          for (int a : delayed)
            if (!tabu_[static_cast<std::size_t>(a)] &&
                (best < 0 || incumbent_.delays[static_cast<std::size_t>(a)] > incumbent_.delays[static_cast<std::size_t>(best)]))
              best = a;
          return best;
        };
        seed = pick();
        if (seed < 0) {
          std::fill(tabu_.begin(), tabu_.end(), 0);
          seed = pick();
        }
        tabu_[static_cast<std::size_t>(seed)] = 1;
      }
      out.push_back(seed);
      const AgentStart& s = starts_[static_cast<std::size_t>(seed)];
      const auto& path = incumbent_.paths[static_cast<std::size_t>(seed)];
      const int lo = s.override ? config_.now : s.earliest_entry;
      const int hi = path ? path->planned_arrival() : config_.horizon;
      if (strategy == NeighborhoodStrategy::AgentBased && path) {
        // Reservations that held the seed back while it waited.
        const int c = env_.train(seed).cmax;
        const auto& v = path->visits;
        if (!s.override && v.front().enter_t > s.earliest_entry)
          collect_occupants(v.front().cell, s.earliest_entry, v.front().enter_t - 1, seed, out);
        for (std::size_t i = 0; i + 1 < v.size(); ++i) {
          const int wait_lo = std::max(v[i].enter_t + c, config_.now);
          const int wait_hi = v[i].leave_t - 1;
          if (wait_lo <= wait_hi) collect_occupants(v[i + 1].cell, wait_lo, wait_hi, seed, out);
        }
      }
      const std::vector<int> cells = free_flow_cells(seed);
      for (auto it = cells.rbegin(); it != cells.rend() && static_cast<int>(out.size()) < k; ++it)
        collect_occupants(*it, lo, hi, seed, out);
      break;
    }
    case NeighborhoodStrategy::IntersectionBased: {
      std::vector<std::pair<int, std::vector<int>>> candidates;
      for (int cell : intersections_) {
        std::vector<int> visitors;
        for (const auto& o : table_.occupancy(cell)) {
          if (o.end <= config_.now || starts_[static_cast<std::size_t>(o.agent)].frozen) continue;
          if (std::find(visitors.begin(), visitors.end(), o.agent) == visitors.end()) visitors.push_back(o.agent);
        }
        if (visitors.size() >= 2) candidates.emplace_back(cell, std::move(visitors));
      }
      if (candidates.empty()) return out;
      out = std::move(candidates[rng_.index(candidates.size())].second);
      rng_.shuffle(std::span<int>(out));
      break;
    }
  }
  if (static_cast<int>(out.size()) > k) out.resize(static_cast<std::size_t>(k));
  return out;
}

Lns::Attempt Lns::attempt(std::span<const int> agents) {
  Attempt at;
  at.paths.resize(agents.size());
  for (int a : agents)
    if (const auto& p = incumbent_.paths[static_cast<std::size_t>(a)]) table_.remove(*p);
  // On-map agents keep their current cell until they can move at the earliest.
  auto stub = [&](int a) {
    const StartOverride& o = *starts_[static_cast<std::size_t>(a)].override;
    return Path{a, {Visit{o.state / 4, orientation_from(o.state % 4), o.enter_time, o.earliest_move}}};
  };
  for (int a : agents)
    if (starts_[static_cast<std::size_t>(a)].override) table_.insert(stub(a));

  std::vector<std::size_t> order(agents.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng_.shuffle(std::span<std::size_t>(order));
  std::vector<char> stubbed(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) stubbed[i] = starts_[static_cast<std::size_t>(agents[i])].override.has_value();

  for (std::size_t i : order) {
    const int a = agents[i];
    const AgentStart& s = starts_[static_cast<std::size_t>(a)];
    if (stubbed[i]) {
      table_.remove(stub(a));
      stubbed[i] = 0;
    }
    PlanResult r = plan(env_.map(), table_, request(a));
    if (!r.path) {
      if (s.override) {
        at.ok = false;
        break;
      }
      continue;
    }
    Path full;
    full.agent = a;
    full.visits = s.prefix;
    full.visits.insert(full.visits.end(), r.path->visits.begin(), r.path->visits.end());
    if (table_.conflicts(full)) {
      at.ok = false;
      break;
    }
    table_.insert(full);
    at.paths[i] = std::move(full);
  }
  for (std::size_t i = 0; i < agents.size(); ++i)
    if (stubbed[i]) table_.remove(stub(agents[i]));
  return at;
}

void Lns::rollback(std::span<const int> agents, const Attempt& at) {
  for (const auto& p : at.paths)
    if (p) table_.remove(*p);
  for (int a : agents)
    if (const auto& p = incumbent_.paths[static_cast<std::size_t>(a)]) table_.insert(*p);
}

Solution Lns::candidate_from(std::span<const int> agents, const Attempt& at) const {
  Solution s = incumbent_;
  for (std::size_t i = 0; i < agents.size(); ++i) s.paths[static_cast<std::size_t>(agents[i])] = at.paths[i];
  evaluate(env_, s);
  return s;
}

std::optional<Solution> Lns::replan_neighborhood(std::span<const int> agents) {
  if (agents.empty()) return incumbent_;
  Attempt at = attempt(agents);
  std::optional<Solution> out;
  if (at.ok) out = candidate_from(agents, at);
  rollback(agents, at);
  return out;
}

IterationRecord Lns::iterate() {
  IterationRecord rec;
  rec.iteration = iteration_++;
  rec.strategy = config_.mode == LnsMode::DelayOnly ? NeighborhoodStrategy::DelayBased : weights_.choose(rng_);
  rec.before = rec.after = incumbent_.total_delay;
  const std::vector<int> agents = select_neighborhood(rec.strategy);
  rec.size = static_cast<int>(agents.size());
  if (!agents.empty()) {
    Attempt at = attempt(agents);
    long long delay = incumbent_.total_delay;
    if (at.ok) {
      for (std::size_t i = 0; i < agents.size(); ++i) {
        const int a = agents[i];
        const long long d =
            std::max<long long>(static_cast<long long>(predicted_act(env_, a, at.paths[i])) - env_.train(a).eat, 0);
        delay += d - incumbent_.delays[static_cast<std::size_t>(a)];
      }
    }
    if (at.ok && delay < incumbent_.total_delay) {
      for (std::size_t i = 0; i < agents.size(); ++i)
        incumbent_.paths[static_cast<std::size_t>(agents[i])] = std::move(at.paths[i]);
      evaluate(env_, incumbent_);
      rec.accepted = true;
      rec.after = incumbent_.total_delay;
      std::fill(tabu_.begin(), tabu_.end(), 0);
    } else {
      rollback(agents, at);
      if (at.ok) rec.after = delay;
    }
  }
  if (config_.mode == LnsMode::Adaptive)
    weights_.update(rec.strategy, rec.accepted ? rec.before - rec.after : 0, rec.before);
  if (config_.trace)
    *config_.trace << rec.iteration << ' ' << neighborhood_name(rec.strategy) << ' ' << rec.size << ' ' << rec.before
                   << ' ' << rec.after << ' ' << (rec.accepted ? 1 : 0) << '\n';
  history_.push_back(rec);
  return rec;
}

const Solution& Lns::run() {
  for (int i = 0; i < config_.iteration_limit; ++i) {
    if (config_.deadline && Clock::now() > *config_.deadline) break;
    iterate();
  }
  return incumbent_;
}

}  // namespace flatland
