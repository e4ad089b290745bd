#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "flatland/interval_table.hpp"
#include "flatland/planner.hpp"
#include "flatland/rng.hpp"
#include "flatland/sipp.hpp"

namespace flatland {

enum class NeighborhoodStrategy { AgentBased = 0, IntersectionBased = 1, DelayBased = 2 };
inline constexpr int kStrategyCount = 3;

const char* neighborhood_name(NeighborhoodStrategy s);

enum class LnsMode { DelayOnly, Adaptive };

// How an agent may be replanned. Off-map agents enter no earlier than
// `earliest_entry`; on-map agents keep `prefix` (already executed visits) and
// restart from `override`. Frozen agents are finished: never replanned and
// left out of the reservation table.
struct AgentStart {
  int earliest_entry = 0;
  std::optional<StartOverride> override;
  bool frozen = false;
  std::vector<Visit> prefix;
};

struct LnsConfig {
  int iteration_limit = 50;
  LnsMode mode = LnsMode::DelayOnly;
  std::uint64_t seed = 0;
  int neighborhood_size = 8;
  double decay = 0.9;
  double min_weight = 0.01;
  int horizon = 0;  // 0 means tmax + max malfunction duration
  int now = 0;      // replanned visits never start before this timestep
  std::optional<Clock::time_point> deadline;
  std::ostream* trace = nullptr;  // "<iteration> <strategy> <size> <before> <after> <0|1>"
};

// 50 for up to 15 agents, 500 up to 200 agents, 50 beyond.
int iteration_limit_for(int agents);

class AdaptiveWeights {
 public:
  AdaptiveWeights(double decay = 0.9, double min_weight = 0.01);
  NeighborhoodStrategy choose(Rng& rng) const;
  // improvement = delay before - delay after (negative or zero for rejections).
  void update(NeighborhoodStrategy s, long long improvement, long long incumbent_delay);
  double weight(NeighborhoodStrategy s) const { return w_[static_cast<std::size_t>(s)]; }
  std::array<double, kStrategyCount> probabilities() const;

 private:
  double decay_;
  double min_weight_;
  std::array<double, kStrategyCount> w_;
};

struct IterationRecord {
  int iteration = 0;
  NeighborhoodStrategy strategy = NeighborhoodStrategy::DelayBased;
  int size = 0;
  long long before = 0;
  long long after = 0;
  bool accepted = false;
};

class Lns {
 public:
  // `starts` empty means every agent starts off-map at its edt.
  Lns(const Environment& env, Solution initial, LnsConfig config, std::vector<AgentStart> starts = {});

  std::vector<int> select_neighborhood(NeighborhoodStrategy strategy);
  // Candidate with `agents` replanned in a random order; the incumbent is not
  // modified. std::nullopt when an on-map agent could not be replanned.
  std::optional<Solution> replan_neighborhood(std::span<const int> agents);
  IterationRecord iterate();
  const Solution& run();

  const Solution& incumbent() const { return incumbent_; }
  const std::vector<IterationRecord>& history() const { return history_; }
  const AdaptiveWeights& weights() const { return weights_; }

 private:
  struct Attempt {
    std::vector<std::optional<Path>> paths;  // new path per neighborhood agent
    bool ok = true;
  };
  Attempt attempt(std::span<const int> agents);
  void rollback(std::span<const int> agents, const Attempt& a);
  Solution candidate_from(std::span<const int> agents, const Attempt& a) const;
  PlanRequest request(int agent) const;
  std::vector<int> free_flow_cells(int agent) const;
  void collect_occupants(int cell, int lo, int hi, int seed, std::vector<int>& out) const;
  std::vector<int> delayed_agents() const;

  const Environment& env_;
  LnsConfig config_;
  std::vector<AgentStart> starts_;
  Solution incumbent_;
  SafeIntervalTable table_;
  Rng rng_;
  AdaptiveWeights weights_;
  std::vector<int> intersections_;
  std::vector<char> tabu_;
  std::vector<IterationRecord> history_;
  int iteration_ = 0;
};

}  // namespace flatland
