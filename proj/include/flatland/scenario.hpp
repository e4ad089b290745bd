#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "flatland/distance.hpp"
#include "flatland/rail_map.hpp"

namespace flatland {

struct TrainSpec {
  int id = 0;
  Cell start;
  Orientation initial_orientation = Orientation::East;
  Cell goal;
  int cmax = 1;  // minimum timesteps per cell traversal, 1..4
  int edt = 0;   // earliest departure timestep
  int eat = 0;   // expected arrival timestep (soft deadline)
  friend bool operator==(const TrainSpec&, const TrainSpec&) = default;
};

struct MalfunctionParams {
  double rate = 0.0;  // per agent, per timestep
  int min_duration = 10;
  int max_duration = 50;
  friend bool operator==(const MalfunctionParams&, const MalfunctionParams&) = default;
};

struct Instance {
  RailMap map;
  std::vector<TrainSpec> trains;
  int tmax = 0;
  MalfunctionParams malfunction;
  std::uint64_t seed = 0;
  friend bool operator==(const Instance&, const Instance&) = default;
};

struct MalfunctionEvent {
  int agent = 0;
  int start = 0;
  int duration = 1;
  friend bool operator==(const MalfunctionEvent&, const MalfunctionEvent&) = default;
};

// Per-agent event lists, each ordered by start and non-overlapping.
using MalfunctionSchedule = std::vector<std::vector<MalfunctionEvent>>;

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// floor(8 (w + h + m / n)) in exact integer arithmetic.
int compute_tmax(int width, int height, int trains, int cities);

// Empty when the instance is consistent (map rules, train ranges, tmax formula).
std::vector<std::string> validate_instance(const Instance& instance);

struct GeneratorConfig {
  int level = 0;
  int width = 30;
  int height = 30;
  int cities = 2;
  int trains = 7;
  std::array<double, 4> speed_proportions = {0.25, 0.25, 0.25, 0.25};  // cmax = 1..4
  double slack_margin_fraction = 0.5;  // EAT margin drawn from [0, ceil(f * cmax * distance)]
  double departure_window = 0.5;       // share of the remaining horizon EDT is drawn from
  int min_line_gap = 5;
  MalfunctionParams malfunction{0.002, 10, 50};
};

inline constexpr int kLevelCount = 15;

// Levels 1 and 15 carry the published endpoint sizes; levels in between use
// geometric interpolation of (w, h, m, n), rounded.
GeneratorConfig level_preset(int level);

// Deterministic for a given (config, seed). Throws ScenarioError when the
// configuration cannot be realised.
Instance generate_instance(const GeneratorConfig& config, std::uint64_t seed);

// Bernoulli(1 - exp(-rate)) onsets per timestep, uniform durations; one
// independent stream per agent keyed by (seed, agent).
MalfunctionSchedule sample_malfunctions(const MalfunctionParams& params, int agents, int horizon,
                                        std::uint64_t seed);

// Instance plus the distance fields every planner component shares.
class Environment {
 public:
  explicit Environment(Instance instance);
  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;
  Environment(Environment&&) = default;
  Environment& operator=(Environment&&) = default;

  const Instance& instance() const { return instance_; }
  const RailMap& map() const { return instance_.map; }
  const TrainSpec& train(int agent) const { return instance_.trains[static_cast<std::size_t>(agent)]; }
  int agent_count() const { return static_cast<int>(instance_.trains.size()); }
  int tmax() const { return instance_.tmax; }

  const DistanceField& field(int agent) const { return *fields_[static_cast<std::size_t>(agent)]; }
  RailState start_state(int agent) const {
    return {train(agent).start, train(agent).initial_orientation};
  }
  int start_state_index(int agent) const { return map().state_index(start_state(agent)); }
  int goal_index(int agent) const { return map().index(train(agent).goal); }
  // Cell distance from the agent's start to its goal (kUnreachable if none).
  int start_distance(int agent) const { return field(agent).at_state(start_state_index(agent)); }
  // Earliest arrival ignoring other trains: edt + cmax * distance.
  long long free_flow_arrival(int agent) const;
  // Goal distance used when scoring unfinished agents; unreachable goals are
  // charged the number of rail states.
  int scoring_distance(int agent, int state_index) const;

 private:
  Instance instance_;
  DistanceCache cache_;
  std::vector<const DistanceField*> fields_;
};

}  // namespace flatland
