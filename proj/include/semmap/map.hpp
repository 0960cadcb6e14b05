#ifndef SEMMAP_MAP_HPP_
#define SEMMAP_MAP_HPP_

#include "semmap/core.hpp"
#include "semmap/geometry.hpp"

namespace semmap {

/// Top-down class map: labels(u, v), v indexing rows.
struct SemanticMap {
  GridSpec grid;
  LabelRaster labels;

  SemanticMap() = default;
  explicit SemanticMap(const GridSpec& g) : grid(g), labels(g.u_size, g.v_size, 0) {}

  ClassId at(int u, int v) const { return labels(u, v); }
  friend bool operator==(const SemanticMap&, const SemanticMap&) = default;
};

/// Per-cell surface height in meters.
using HeightLayer = Raster<float>;

inline void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw Error(ErrorCode::GridMismatch, "grid specifications differ");
}

}  // namespace semmap

#endif  // SEMMAP_MAP_HPP_
