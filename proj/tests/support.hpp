// Shared helpers for the unit tests: seeded random rasters and scenes.
#pragma once

#include <cstdint>

#include "semmap/semmap.hpp"

namespace semmap::testing {

inline BinaryRaster random_mask(Rng& rng, int w, int h, double density) {
  BinaryRaster r(w, h);
  for (auto& c : r.data()) c = rng.uniform() < density;
  return r;
}

inline LabelRaster random_labels(Rng& rng, int w, int h, int classes) {
  LabelRaster r(w, h);
  for (auto& c : r.data()) c = static_cast<ClassId>(rng.uniform_int(0, classes - 1));
  return r;
}

/// Blocky labels: random rectangles painted over void, so boundaries are long.
inline LabelRaster random_blobs(Rng& rng, int w, int h, int rects, int classes) {
  LabelRaster r(w, h, 0);
  for (int k = 0; k < rects; ++k) {
    const int x0 = static_cast<int>(rng.uniform_int(0, w - 1)), y0 = static_cast<int>(rng.uniform_int(0, h - 1));
    const int x1 = std::min(w - 1, x0 + static_cast<int>(rng.uniform_int(0, w / 2)));
    const int y1 = std::min(h - 1, y0 + static_cast<int>(rng.uniform_int(0, h / 2)));
    const auto c = static_cast<ClassId>(rng.uniform_int(1, classes - 1));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) r(x, y) = c;
  }
  return r;
}

inline GridSpec small_grid(int u, int v, double res = 0.02) { return {0.0, 0.0, res, u, v}; }

inline SceneModel box_scene(std::vector<Box> boxes, FloorExtent floor = {0.0, 0.0, 5.0, 5.0}) {
  SceneModel s;
  s.floor = floor;
  s.boxes = std::move(boxes);
  return s;
}

}  // namespace semmap::testing

namespace semmap::testing {

/// All-pairs boundary matcher: boundary cells by explicit 4-neighbour scan,
/// matches by scanning every opposite boundary cell.
inline double oracle_bf1(const LabelRaster& pred, const LabelRaster& gt, const BinaryRaster& mask, ClassId c,
                         int theta) {
  auto boundary = [&](const LabelRaster& l) {
    std::vector<Cell> out;
    for (int y = 0; y < l.height(); ++y)
      for (int x = 0; x < l.width(); ++x) {
        if (!mask(x, y) || l(x, y) != c) continue;
        const Cell nb[4] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
        for (const Cell& n : nb)
          if (l.contains(n.u, n.v) && mask(n.u, n.v) && l(n.u, n.v) != c) {
            out.push_back({x, y});
            break;
          }
      }
    return out;
  };
  const auto pb = boundary(pred), gb = boundary(gt);
  auto matched = [&](const std::vector<Cell>& from, const std::vector<Cell>& to) {
    long long n = 0;
    for (const Cell& a : from)
      for (const Cell& b : to)
        if (std::max(std::abs(a.u - b.u), std::abs(a.v - b.v)) <= theta) {
          ++n;
          break;
        }
    return n;
  };
  if (pb.empty() && gb.empty()) return 1.0;
  const double p = pb.empty() ? 0.0 : double(matched(pb, gb)) / pb.size();
  const double r = gb.empty() ? 0.0 : double(matched(gb, pb)) / gb.size();
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

}  // namespace semmap::testing
