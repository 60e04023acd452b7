#pragma once

#include <cstdlib>
#include <vector>

#include "graphsparse/grid.hpp"
#include "graphsparse/tree.hpp"

namespace graphsparse::testing {

inline GridMap open_map(int w, int h, bool explored = true) {
  GridMap m(w, h);
  if (explored)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) m.mark_explored({x, y});
  return m;
}

// Closed unit square of cell c against the segment between the centers of a
// and b, in doubled integer coordinates so every test is exact.
inline bool square_meets_segment(Cell a, Cell b, Cell c) {
  const long ax = 2L * a.x, ay = 2L * a.y, bx = 2L * b.x, by = 2L * b.y;
  const long x0 = 2L * c.x - 1, x1 = 2L * c.x + 1, y0 = 2L * c.y - 1, y1 = 2L * c.y + 1;
  if (std::max(ax, bx) < x0 || std::min(ax, bx) > x1 || std::max(ay, by) < y0 || std::min(ay, by) > y1) return false;
  const long dx = bx - ax, dy = by - ay;
  int pos = 0, neg = 0;
  for (long cx : {x0, x1})
    for (long cy : {y0, y1}) {
      const long cross = dx * (cy - ay) - dy * (cx - ax);
      pos += cross > 0;
      neg += cross < 0;
    }
  return !(pos == 4 || neg == 4);
}

inline std::vector<Cell> brute_supercover(Cell a, Cell b) {
  std::vector<Cell> out;
  for (int y = std::min(a.y, b.y) - 1; y <= std::max(a.y, b.y) + 1; ++y)
    for (int x = std::min(a.x, b.x) - 1; x <= std::max(a.x, b.x) + 1; ++x)
      if (square_meets_segment(a, b, {x, y})) out.push_back({x, y});
  return out;
}

inline bool brute_los(const GridMap& m, Cell a, Cell b) {
  for (Cell c : brute_supercover(a, b))
    if (!(c == a) && !(c == b) && m.in_bounds(c) && m.is_obstacle(c)) return false;
  return true;
}

}  // namespace graphsparse::testing
