#include "flatland/rail_map.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <utility>

namespace flatland {

char orientation_char(Orientation o) {
  constexpr char names[] = {'N', 'E', 'S', 'W'};
  return names[to_int(o)];
}

std::optional<Orientation> parse_orientation(std::string_view s) {
  if (s.size() != 1) return std::nullopt;
  switch (s[0]) {
    case 'N': return Orientation::North;
    case 'E': return Orientation::East;
    case 'S': return Orientation::South;
    case 'W': return Orientation::West;
    default: return std::nullopt;
  }
}

int Transitions::outgoing_count(Orientation in) const { return std::popcount(outgoing(in)); }

std::uint8_t Transitions::used_sides() const {
  std::uint8_t sides = 0;
  for (Orientation in : kOrientations)
    for (Orientation out : kOrientations)
      if (allows(in, out))
        sides = static_cast<std::uint8_t>(sides | (1u << to_int(opposite(in))) | (1u << to_int(out)));
  return sides;
}

Transitions Transitions::rotated() const {
  Transitions r;
  for (Orientation in : kOrientations)
    for (Orientation out : kOrientations)
      if (allows(in, out)) r.set(turn_right(in), turn_right(out));
  return r;
}

Transitions Transitions::mirrored() const {
  auto flip = [](Orientation o) {
    if (o == Orientation::East) return Orientation::West;
    if (o == Orientation::West) return Orientation::East;
    return o;
  };
  Transitions r;
  for (Orientation in : kOrientations)
    for (Orientation out : kOrientations)
      if (allows(in, out)) r.set(flip(in), flip(out));
  return r;
}

Transitions connect_sides(Orientation side_a, Orientation side_b) {
  Transitions t;
  t.set(opposite(side_a), side_b);
  t.set(opposite(side_b), side_a);
  return t;
}

std::string_view rail_type_name(RailType t) {
  switch (t) {
    case RailType::Straight: return "straight";
    case RailType::Curve: return "curve";
    case RailType::SimpleSwitch: return "simple switch";
    case RailType::DiamondCrossing: return "diamond crossing";
    case RailType::SingleSlip: return "single slip switch";
    case RailType::DoubleSlip: return "double slip switch";
    case RailType::TriSymmetricalSwitch: return "tri-symmetrical switch";
    case RailType::SymmetricalSwitch: return "symmetrical switch";
  }
  return "?";
}

Transitions canonical_transitions(RailType t) {
  using O = Orientation;
  const Transitions ns = connect_sides(O::North, O::South);
  const Transitions ew = connect_sides(O::East, O::West);
  const Transitions se = connect_sides(O::South, O::East);
  const Transitions sw = connect_sides(O::South, O::West);
  const Transitions nw = connect_sides(O::North, O::West);
  switch (t) {
    case RailType::Straight: return ns;
    case RailType::Curve: return se;
    case RailType::SimpleSwitch: return ns | sw;
    case RailType::DiamondCrossing: return ns | ew;
    case RailType::SingleSlip: return ns | ew | sw;
    case RailType::DoubleSlip: return ns | ew | se | nw;
    case RailType::TriSymmetricalSwitch: return ns | se | sw;
    case RailType::SymmetricalSwitch: return se | sw;
  }
  return {};
}

namespace {

const std::map<std::uint16_t, RailType>& rail_type_table() {
  static const std::map<std::uint16_t, RailType> table = [] {
    std::map<std::uint16_t, RailType> m;
    constexpr RailType all[] = {RailType::Straight,        RailType::Curve,
                                RailType::SimpleSwitch,    RailType::DiamondCrossing,
                                RailType::SingleSlip,      RailType::DoubleSlip,
                                RailType::TriSymmetricalSwitch, RailType::SymmetricalSwitch};
    for (RailType type : all) {
      Transitions t = canonical_transitions(type);
      for (int mirror = 0; mirror < 2; ++mirror) {
        Transitions r = mirror ? t.mirrored() : t;
        for (int k = 0; k < 4; ++k) {
          m.emplace(r.mask(), type);
          r = r.rotated();
        }
      }
    }
    return m;
  }();
  return table;
}

}  // namespace

std::optional<RailType> classify(Transitions t) {
  const auto& table = rail_type_table();
  auto it = table.find(t.mask());
  if (it == table.end()) return std::nullopt;
  return it->second;
}

RailMap::RailMap(int width, int height)
    : width_(width), height_(height), grid_(static_cast<std::size_t>(width) * height) {
  if (width <= 0 || height <= 0) throw RailError("map dimensions must be positive");
}

int RailMap::neighbor(int cell_index, Orientation o) const {
  const Cell n = step_towards(cell_of(cell_index), o);
  return in_bounds(n) ? index(n) : -1;
}

int RailMap::successor_states(int state_index, std::array<int, 4>& out) const {
  const int cell = state_index / 4;
  const std::uint8_t heads = at(cell).outgoing(orientation_from(state_index % 4));
  int n = 0;
  for (int o = 0; o < 4; ++o) {
    if (!(heads & (1u << o))) continue;
    const int next = neighbor(cell, orientation_from(o));
    if (next >= 0) out[n++] = next * 4 + o;
  }
  return n;
}

std::vector<RailState> successors(const RailMap& map, RailState s) {
  if (!map.traversable(s.cell)) throw RailError("state off rails");
  std::array<int, 4> buf{};
  const int n = map.successor_states(map.state_index(s), buf);
  std::vector<RailState> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(map.state_of(buf[i]));
  return out;
}

std::vector<MapViolation> validate_map(const RailMap& map) {
  std::vector<MapViolation> out;
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const Cell c{x, y};
      const Transitions t = map.at(c);
      if (t.empty()) continue;
      if (!classify(t))
        out.push_back({c, "unknown rail type", "mask " + std::to_string(t.mask())});
      for (Orientation in : kOrientations) {
        bool broken = false;
        for (Orientation dir : kOrientations) {
          if (!t.allows(in, dir)) continue;
          const Cell n = step_towards(c, dir);
          if (!map.in_bounds(n) || map.at(n).outgoing(dir) == 0) broken = true;
        }
        if (broken) {
          out.push_back({c, "reciprocity",
                         std::string("rail facing ") + orientation_char(in) +
                             " leads to a cell that cannot be entered"});
          break;
        }
      }
    }
  }
  if (map.cities().empty()) out.push_back({{0, 0}, "no cities", "map has no cities"});
  for (const City& city : map.cities()) {
    for (Cell s : {city.arrival, city.departure})
      if (!map.traversable(s)) out.push_back({s, "station", "station cell is not traversable"});
  }
  return out;
}

}  // namespace flatland
