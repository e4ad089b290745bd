#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flatland {

enum class Orientation : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

inline constexpr std::array<Orientation, 4> kOrientations = {
    Orientation::North, Orientation::East, Orientation::South, Orientation::West};

constexpr int to_int(Orientation o) { return static_cast<int>(o); }
constexpr Orientation orientation_from(int v) { return static_cast<Orientation>(v & 3); }
constexpr Orientation opposite(Orientation o) { return orientation_from(to_int(o) + 2); }
constexpr Orientation turn_left(Orientation o) { return orientation_from(to_int(o) + 3); }
constexpr Orientation turn_right(Orientation o) { return orientation_from(to_int(o) + 1); }

char orientation_char(Orientation o);
std::optional<Orientation> parse_orientation(std::string_view s);

struct Cell {
  int x = 0;
  int y = 0;
  friend constexpr bool operator==(const Cell&, const Cell&) = default;
  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

constexpr Cell step_towards(Cell c, Orientation o) {
  switch (o) {
    case Orientation::North: return {c.x, c.y - 1};
    case Orientation::East: return {c.x + 1, c.y};
    case Orientation::South: return {c.x, c.y + 1};
    case Orientation::West: return {c.x - 1, c.y};
  }
  return c;
}

// Per-cell transition table. A train facing `in` may leave the cell heading
// `out` iff bit (3 - in) * 4 + (3 - out) is set; the most significant nibble
// belongs to North, which is the competition environment's layout.
class Transitions {
 public:
  constexpr Transitions() = default;
  constexpr explicit Transitions(std::uint16_t mask) : mask_(mask) {}

  constexpr std::uint16_t mask() const { return mask_; }
  constexpr bool empty() const { return mask_ == 0; }

  constexpr bool allows(Orientation in, Orientation out) const {
    return (mask_ >> bit(in, out)) & 1u;
  }
  constexpr void set(Orientation in, Orientation out, bool on = true) {
    if (on)
      mask_ = static_cast<std::uint16_t>(mask_ | (1u << bit(in, out)));
    else
      mask_ = static_cast<std::uint16_t>(mask_ & ~(1u << bit(in, out)));
  }
  // Bit o of the result is set when heading o is allowed.
  constexpr std::uint8_t outgoing(Orientation in) const {
    std::uint8_t r = 0;
    for (Orientation out : kOrientations)
      if (allows(in, out)) r = static_cast<std::uint8_t>(r | (1u << to_int(out)));
    return r;
  }
  int outgoing_count(Orientation in) const;
  // Bit s set when the rail touches side s of the cell.
  std::uint8_t used_sides() const;

  Transitions rotated() const;   // 90 degrees clockwise
  Transitions mirrored() const;  // east <-> west

  friend constexpr bool operator==(Transitions, Transitions) = default;
  friend constexpr Transitions operator|(Transitions a, Transitions b) {
    return Transitions(static_cast<std::uint16_t>(a.mask_ | b.mask_));
  }

 private:
  static constexpr int bit(Orientation in, Orientation out) {
    return (3 - to_int(in)) * 4 + (3 - to_int(out));
  }
  std::uint16_t mask_ = 0;
};

// Undirected track piece joining two sides of a cell, usable in both directions.
Transitions connect_sides(Orientation side_a, Orientation side_b);

enum class RailType {
  Straight,
  Curve,
  SimpleSwitch,
  DiamondCrossing,
  SingleSlip,
  DoubleSlip,
  TriSymmetricalSwitch,
  SymmetricalSwitch,
};

std::string_view rail_type_name(RailType t);
Transitions canonical_transitions(RailType t);
// Matches against every rotation / mirror of the canonical tables.
std::optional<RailType> classify(Transitions t);

struct City {
  Cell arrival;
  Cell departure;
  friend bool operator==(const City&, const City&) = default;
};

struct RailState {
  Cell cell;
  Orientation orientation = Orientation::North;
  friend constexpr bool operator==(const RailState&, const RailState&) = default;
};

class RailMap {
 public:
  RailMap() = default;
  RailMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  int cell_count() const { return width_ * height_; }
  int state_count() const { return 4 * cell_count(); }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  int index(Cell c) const { return c.y * width_ + c.x; }
  Cell cell_of(int index) const { return {index % width_, index / width_}; }

  int state_index(RailState s) const { return index(s.cell) * 4 + to_int(s.orientation); }
  RailState state_of(int state_index) const {
    return {cell_of(state_index / 4), orientation_from(state_index % 4)};
  }

  Transitions at(Cell c) const { return grid_[static_cast<std::size_t>(index(c))]; }
  Transitions at(int cell_index) const { return grid_[static_cast<std::size_t>(cell_index)]; }
  void set(Cell c, Transitions t) { grid_[static_cast<std::size_t>(index(c))] = t; }
  void add(Cell c, Transitions t) { set(c, at(c) | t); }
  bool traversable(Cell c) const { return in_bounds(c) && !at(c).empty(); }

  // Neighbor cell index reached by leaving `cell_index` heading `o`, or -1.
  int neighbor(int cell_index, Orientation o) const;

  // Fills up to four successor state indices, returns how many; no checks.
  int successor_states(int state_index, std::array<int, 4>& out) const;

  const std::vector<City>& cities() const { return cities_; }
  std::vector<City>& cities() { return cities_; }
  const std::vector<Transitions>& grid() const { return grid_; }

  friend bool operator==(const RailMap&, const RailMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Transitions> grid_;
  std::vector<City> cities_;
};

class RailError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws RailError("state off rails") when the state's cell is outside the
// grid or not traversable.
std::vector<RailState> successors(const RailMap& map, RailState s);

struct MapViolation {
  Cell cell;
  std::string rule;
  std::string detail;
};

std::vector<MapViolation> validate_map(const RailMap& map);

}  // namespace flatland
