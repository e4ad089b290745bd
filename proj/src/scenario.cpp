#include "flatland/scenario.hpp"

#include <cmath>

#include "flatland/rng.hpp"

namespace flatland {

int compute_tmax(int width, int height, int trains, int cities) {
  if (width < 1 || height < 1 || trains < 1 || cities < 1)
    throw ScenarioError("compute_tmax: arguments must be >= 1");
  const long long n = cities;
  const long long total = 8LL * (width + height) * n + 8LL * trains;
  return static_cast<int>(total / n);
}

std::vector<std::string> validate_instance(const Instance& inst) {
  std::vector<std::string> errors;
  for (const MapViolation& v : validate_map(inst.map))
    errors.push_back("map (" + std::to_string(v.cell.x) + "," + std::to_string(v.cell.y) + "): " +
                     v.rule + ": " + v.detail);
  if (inst.trains.empty()) {
    errors.push_back("instance has no trains");
    return errors;
  }
  if (!inst.map.cities().empty()) {
    const int expected = compute_tmax(inst.map.width(), inst.map.height(),
                                      static_cast<int>(inst.trains.size()),
                                      static_cast<int>(inst.map.cities().size()));
    if (inst.tmax != expected)
      errors.push_back("tmax " + std::to_string(inst.tmax) + " != floor(8(w+h+m/n)) = " +
                       std::to_string(expected));
  }
  auto is_station = [&](Cell c) {
    for (const City& city : inst.map.cities())
      if (city.arrival == c || city.departure == c) return true;
    return false;
  };
  for (std::size_t i = 0; i < inst.trains.size(); ++i) {
    const TrainSpec& t = inst.trains[i];
    const std::string who = "train " + std::to_string(i) + ": ";
    if (t.id != static_cast<int>(i)) errors.push_back(who + "id does not match its position");
    if (t.cmax < 1 || t.cmax > 4) errors.push_back(who + "cmax outside [1, 4]");
    if (t.edt < 0) errors.push_back(who + "edt < 0");
    if (t.eat <= t.edt) errors.push_back(who + "eat <= edt");
    if (t.eat > inst.tmax) errors.push_back(who + "eat > tmax");
    if (t.start == t.goal) errors.push_back(who + "start == goal");
    if (!inst.map.traversable(t.start) || !inst.map.traversable(t.goal)) {
      errors.push_back(who + "start or goal not on rails");
      continue;
    }
    if (!is_station(t.start) || !is_station(t.goal)) errors.push_back(who + "start or goal is not a station");
    if (inst.map.at(t.start).outgoing(t.initial_orientation) == 0)
      errors.push_back(who + "initial orientation has no outgoing rail");
  }
  const MalfunctionParams& m = inst.malfunction;
  if (!(m.rate >= 0.0) || !std::isfinite(m.rate)) errors.push_back("malfunction rate must be >= 0");
  if (m.min_duration < 1 || m.max_duration < m.min_duration)
    errors.push_back("malfunction durations must satisfy 1 <= min <= max");
  return errors;
}

GeneratorConfig level_preset(int level) {
  if (level < 1 || level > kLevelCount) throw ScenarioError("level must be in [1, 15]");
  static constexpr int sizes[] = {30, 34, 38, 43, 48, 54, 61, 69, 78, 87, 98, 111, 125, 140, 158};
  static constexpr int trains[] = {7, 9, 13, 17, 23, 30, 41, 55, 73, 98, 131, 176, 236, 317, 425};
  static constexpr int cities[] = {2, 2, 3, 4, 5, 6, 7, 9, 11, 14, 17, 21, 27, 33, 41};
  GeneratorConfig c;
  c.level = level;
  c.width = c.height = sizes[level - 1];
  c.trains = trains[level - 1];
  c.cities = cities[level - 1];
  return c;
}

MalfunctionSchedule sample_malfunctions(const MalfunctionParams& params, int agents, int horizon,
                                        std::uint64_t seed) {
  MalfunctionSchedule schedule(static_cast<std::size_t>(std::max(agents, 0)));
  if (params.rate <= 0.0) return schedule;
  const double p = 1.0 - std::exp(-params.rate);
  for (int a = 0; a < agents; ++a) {
    Rng rng(seed, 0x4d414c46ULL + static_cast<std::uint64_t>(a));
    auto& events = schedule[static_cast<std::size_t>(a)];
    int t = 0;
    while (t < horizon) {
      if (rng.bernoulli(p)) {
        const int d = static_cast<int>(rng.uniform_int(params.min_duration, params.max_duration));
        events.push_back({a, t, d});
        t += d;
      } else {
        ++t;
      }
    }
  }
  return schedule;
}

namespace {

std::vector<Cell> goal_cells(const Instance& inst) {
  std::vector<Cell> goals;
  goals.reserve(inst.trains.size());
  for (const TrainSpec& t : inst.trains) goals.push_back(t.goal);
  return goals;
}

}  // namespace

Environment::Environment(Instance instance)
    : instance_(std::move(instance)), cache_(instance_.map, goal_cells(instance_)) {
  fields_.reserve(instance_.trains.size());
  for (const TrainSpec& t : instance_.trains) fields_.push_back(&cache_.field(t.goal));
}

long long Environment::free_flow_arrival(int agent) const {
  const int d = start_distance(agent);
  if (d == kUnreachable) return kUnreachable;
  return train(agent).edt + static_cast<long long>(train(agent).cmax) * d;
}

int Environment::scoring_distance(int agent, int state_index) const {
  const int d = field(agent).at_state(state_index);
  return d == kUnreachable ? map().state_count() : d;
}

}  // namespace flatland
