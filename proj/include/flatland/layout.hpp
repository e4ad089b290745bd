#pragma once

#include <vector>

#include "flatland/rail_map.hpp"

namespace flatland {

// Rail network made of full-length single-track lines: vertical lines at
// `columns`, horizontal lines at `rows` (both must include the map borders so
// the outer lines form a ring). Interior crossings are diamonds; where a line
// meets the ring a simple switch is placed whose curve alternates with the
// line index, so every line can reverse a train's direction of travel around
// the ring. A siding is a two-rail city hung below a horizontal line between two
// consecutive columns.
struct LatticeLayout {
  struct Siding {
    int row = 0;      // index into `rows` (not the bottom border)
    int x0 = 0;       // switch cells on the line; side rail runs on row y + 1
    int x1 = 0;
    int station_x = 0;  // arrival (x, y) on the line, departure (x, y + 1)
  };

  int width = 0;
  int height = 0;
  std::vector<int> columns;
  std::vector<int> rows;
  std::vector<Siding> sidings;
};

// Throws ScenarioError when lines or sidings overlap or leave the grid.
RailMap build_lattice(const LatticeLayout& layout);

}  // namespace flatland
