#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "flatland/layout.hpp"
#include "flatland/rng.hpp"
#include "flatland/scenario.hpp"

namespace flatland {

namespace {

using O = Orientation;

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

void require(bool ok, const std::string& what) {
  if (!ok) throw ScenarioError(what);
}

Transitions junction(const LatticeLayout& l, int ci, int rj) {
  const int x = l.columns[static_cast<std::size_t>(ci)];
  const int y = l.rows[static_cast<std::size_t>(rj)];
  const bool left = x == 0, right = x == l.width - 1;
  const bool top = y == 0, bottom = y == l.height - 1;
  const Transitions ns = connect_sides(O::North, O::South);
  const Transitions ew = connect_sides(O::East, O::West);
  if (top && left) return connect_sides(O::East, O::South);
  if (top && right) return connect_sides(O::West, O::South);
  if (bottom && left) return connect_sides(O::North, O::East);
  if (bottom && right) return connect_sides(O::North, O::West);
  const bool even_col = ci % 2 == 0;
  const bool even_row = rj % 2 == 0;
  if (top) return ew | connect_sides(O::South, even_col ? O::West : O::East);
  if (bottom) return ew | connect_sides(O::North, even_col ? O::East : O::West);
  if (left) return ns | connect_sides(O::East, even_row ? O::South : O::North);
  if (right) return ns | connect_sides(O::West, even_row ? O::North : O::South);
  return ns | ew;
}

}  // namespace

RailMap build_lattice(const LatticeLayout& l) {
  require(l.width >= 3 && l.height >= 3, "lattice too small");
  require(l.columns.size() >= 2 && l.rows.size() >= 2, "lattice needs at least two lines each way");
  require(std::is_sorted(l.columns.begin(), l.columns.end()) &&
              std::is_sorted(l.rows.begin(), l.rows.end()),
          "lattice lines must be sorted");
  require(l.columns.front() == 0 && l.columns.back() == l.width - 1 && l.rows.front() == 0 &&
              l.rows.back() == l.height - 1,
          "outer lines must lie on the map border");
  for (std::size_t i = 1; i < l.columns.size(); ++i)
    require(l.columns[i] - l.columns[i - 1] >= 2, "vertical lines too close");
  for (std::size_t i = 1; i < l.rows.size(); ++i)
    require(l.rows[i] - l.rows[i - 1] >= 2, "horizontal lines too close");

  RailMap map(l.width, l.height);
  for (int x : l.columns)
    for (int y = 0; y < l.height; ++y)
      if (!contains(l.rows, y)) map.add({x, y}, connect_sides(O::North, O::South));
  for (int y : l.rows)
    for (int x = 0; x < l.width; ++x)
      if (!contains(l.columns, x)) map.add({x, y}, connect_sides(O::East, O::West));
  for (std::size_t ci = 0; ci < l.columns.size(); ++ci)
    for (std::size_t rj = 0; rj < l.rows.size(); ++rj)
      map.set({l.columns[ci], l.rows[rj]}, junction(l, static_cast<int>(ci), static_cast<int>(rj)));

  for (const LatticeLayout::Siding& s : l.sidings) {
    require(s.row >= 0 && s.row + 1 < static_cast<int>(l.rows.size()), "siding row out of range");
    const int y = l.rows[static_cast<std::size_t>(s.row)];
    const int below = l.rows[static_cast<std::size_t>(s.row + 1)];
    require(y + 1 < below, "no room for a side rail");
    require(s.x0 > 0 && s.x1 < l.width - 1 && s.x1 - s.x0 >= 2, "siding extent invalid");
    require(s.station_x > s.x0 && s.station_x < s.x1, "station outside its siding");
    for (int x = s.x0; x <= s.x1; ++x) {
      require(!contains(l.columns, x), "siding crosses a vertical line");
      require(map.at(Cell{x, y}) == connect_sides(O::East, O::West), "siding overlaps a switch");
      require(map.at(Cell{x, y + 1}).empty(), "sidings overlap");
    }
    map.add({s.x0, y}, connect_sides(O::West, O::South));
    map.add({s.x0, y + 1}, connect_sides(O::North, O::East));
    for (int x = s.x0 + 1; x < s.x1; ++x) map.add({x, y + 1}, connect_sides(O::East, O::West));
    map.add({s.x1, y + 1}, connect_sides(O::West, O::North));
    map.add({s.x1, y}, connect_sides(O::South, O::East));
    map.cities().push_back({{s.station_x, y}, {s.station_x, y + 1}});
  }
  return map;
}

Instance generate_instance(const GeneratorConfig& cfg, std::uint64_t seed) {
  require(cfg.width >= 20 && cfg.height >= 20, "map must be at least 20x20");
  require(cfg.cities >= 2, "need at least 2 cities");
  require(cfg.trains >= 1, "need at least 1 train");
  double total = 0.0;
  for (double p : cfg.speed_proportions) {
    require(p >= 0.0, "speed proportions must be non-negative");
    total += p;
  }
  require(std::abs(total - 1.0) < 1e-9, "speed proportions must sum to 1");
  require(cfg.min_line_gap >= 5, "min_line_gap must be >= 5");
  require(cfg.slack_margin_fraction >= 0.0 && cfg.departure_window >= 0.0 &&
              cfg.departure_window <= 1.0,
          "slack margin / departure window out of range");

  Rng layout_rng(seed, 1);
  // At least two interior lines each way, so ring switches of both curve
  // parities exist and a train can reverse around the ring.
  const int k = std::max(3, static_cast<int>(std::ceil(std::sqrt(1.5 * cfg.cities))));
  auto place_lines = [&](int extent) {
    const int gap = (extent - 1) / k;
    require(gap >= cfg.min_line_gap, "cities don't fit: map too small for " +
                                         std::to_string(cfg.cities) + " cities");
    const int jitter = (gap - cfg.min_line_gap) / 2;
    std::vector<int> lines{0};
    for (int i = 1; i < k; ++i) {
      const int base = (i * (extent - 1) + k / 2) / k;
      lines.push_back(base + static_cast<int>(layout_rng.uniform_int(-jitter, jitter)));
    }
    lines.push_back(extent - 1);
    return lines;
  };

  LatticeLayout layout;
  layout.width = cfg.width;
  layout.height = cfg.height;
  layout.columns = place_lines(cfg.width);
  layout.rows = place_lines(cfg.height);

  std::vector<std::pair<int, int>> segments;  // (row index, column index)
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) segments.emplace_back(r, c);
  layout_rng.shuffle(std::span(segments));
  for (int i = 0; i < cfg.cities; ++i) {
    const auto [r, c] = segments[static_cast<std::size_t>(i)];
    const int left = layout.columns[static_cast<std::size_t>(c)];
    const int right = layout.columns[static_cast<std::size_t>(c + 1)];
    const int room = (right - left - 2) - 3;  // spare cells beyond the minimum extent
    LatticeLayout::Siding s;
    s.row = r;
    s.x0 = left + 1 + static_cast<int>(layout_rng.uniform_int(0, room / 2));
    s.x1 = right - 1 - static_cast<int>(layout_rng.uniform_int(0, room / 2));
    s.station_x = static_cast<int>(layout_rng.uniform_int(s.x0 + 1, s.x1 - 1));
    layout.sidings.push_back(s);
  }

  Instance inst;
  inst.map = build_lattice(layout);
  inst.tmax = compute_tmax(cfg.width, cfg.height, cfg.trains, cfg.cities);
  inst.malfunction = cfg.malfunction;
  inst.seed = seed;
  if (auto violations = validate_map(inst.map); !violations.empty())
    throw ScenarioError("generated map invalid: " + violations.front().rule);

  std::vector<Cell> arrivals;
  for (const City& city : inst.map.cities()) arrivals.push_back(city.arrival);
  const DistanceCache distances(inst.map, arrivals);

  Rng rng(seed, 2);
  for (int id = 0; id < cfg.trains; ++id) {
    bool placed = false;
    for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
      const std::size_t a = rng.index(static_cast<std::size_t>(cfg.cities));
      std::size_t b = rng.index(static_cast<std::size_t>(cfg.cities - 1));
      if (b >= a) ++b;
      TrainSpec t;
      t.id = id;
      t.start = inst.map.cities()[a].departure;
      t.goal = inst.map.cities()[b].arrival;
      // Trains face their shorter way out of the station; ties are random.
      const DistanceField& to_goal = distances.field(t.goal);
      const int east = to_goal.at(inst.map, {t.start, O::East});
      const int west = to_goal.at(inst.map, {t.start, O::West});
      const bool coin = rng.bernoulli(0.5);
      t.initial_orientation = east != west ? (east < west ? O::East : O::West) : (coin ? O::East : O::West);
      const double u = rng.uniform01();
      double acc = 0.0;
      t.cmax = 4;
      for (int s = 0; s < 4; ++s) {
        acc += cfg.speed_proportions[static_cast<std::size_t>(s)];
        if (u < acc) {
          t.cmax = s + 1;
          break;
        }
      }
      const int d = distances.field(t.goal).at(inst.map, {t.start, t.initial_orientation});
      if (d == kUnreachable) throw ScenarioError("generated network is not connected");
      const int travel = t.cmax * d;
      if (travel >= inst.tmax) continue;
      const int margin_cap =
          std::min(static_cast<int>(std::ceil(cfg.slack_margin_fraction * travel)), inst.tmax - travel);
      const int margin = static_cast<int>(rng.uniform_int(0, margin_cap));
      const int edt_cap =
          static_cast<int>(std::floor(cfg.departure_window * (inst.tmax - travel - margin)));
      t.edt = static_cast<int>(rng.uniform_int(0, edt_cap));
      t.eat = t.edt + travel + margin;
      inst.trains.push_back(t);
      placed = true;
    }
    if (!placed) throw ScenarioError("could not place train " + std::to_string(id) + " within tmax");
  }
  return inst;
}

}  // namespace flatland
