// Synthetic indoor scenes: a rectangular floor with axis-aligned labeled boxes
// resting on it, procedural generation, ground-truth top-down maps, and the
// SMAPSCENE text format.
#ifndef SEMMAP_SCENE_HPP_
#define SEMMAP_SCENE_HPP_

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "semmap/core.hpp"
#include "semmap/geometry.hpp"
#include "semmap/map.hpp"
#include "semmap/rng.hpp"

namespace semmap {

struct Aabb {
  double xmin = 0, ymin = 0, zmin = 0;
  double xmax = 0, ymax = 0, zmax = 0;

  bool valid() const { return xmin < xmax && ymin < ymax && zmin < zmax; }
};

struct Box {
  ClassId class_id = 1;
  int instance_id = 1;
  Aabb aabb;
};

struct FloorExtent {
  double xmin = 0, zmin = 0, xmax = 0, zmax = 0;

  bool contains(double x, double z) const { return x >= xmin && x <= xmax && z >= zmin && z <= zmax; }
  double center_x() const { return 0.5 * (xmin + xmax); }
  double center_z() const { return 0.5 * (zmin + zmax); }
};

struct SceneModel {
  FloorExtent floor;
  std::vector<Box> boxes;
  std::uint64_t seed = 0;

  /// Grid exactly covering the floor.
  GridSpec grid(double resolution = 0.02) const {
    GridSpec g;
    g.origin_x = floor.xmin;
    g.origin_z = floor.zmin;
    g.resolution = resolution;
    g.u_size = static_cast<int>(std::lround((floor.xmax - floor.xmin) / resolution));
    g.v_size = static_cast<int>(std::lround((floor.zmax - floor.zmin) / resolution));
    return g;
  }

  int count_class(ClassId c) const {
    return static_cast<int>(std::count_if(boxes.begin(), boxes.end(),
                                          [c](const Box& b) { return b.class_id == c; }));
  }

  void validate() const {
    std::vector<int> ids;
    for (const Box& b : boxes) {
      if (!b.aabb.valid()) throw Error(ErrorCode::InvalidArgument, "degenerate box");
      if (b.aabb.ymin < 0) throw Error(ErrorCode::InvalidArgument, "box below the floor");
      if (b.class_id < 1 || b.class_id > kNumObjectClasses)
        throw Error(ErrorCode::InvalidArgument, "box class outside 1..12");
      if (b.instance_id <= 0) throw Error(ErrorCode::InvalidArgument, "instance id must be positive");
      ids.push_back(b.instance_id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
      throw Error(ErrorCode::InvalidArgument, "duplicate instance id");
  }
};

// ---------------------------------------------------------------------------
// Generation

/// Footprint and height ranges per class, meters.
struct ClassShape {
  double long_min, long_max;
  double short_min, short_max;
  double height_min, height_max;
};

inline constexpr std::array<ClassShape, kNumClasses> kClassShapes = {{
    {0, 0, 0, 0, 0, 0},                  // void
    {0.40, 0.60, 0.40, 0.60, 0.80, 1.00},  // chair
    {0.80, 1.40, 0.60, 1.00, 0.70, 0.80},  // table
    {0.30, 0.50, 0.30, 0.50, 0.30, 0.50},  // cushion
    {0.40, 1.00, 0.30, 0.60, 0.80, 1.60},  // cabinet
    {0.60, 1.20, 0.30, 0.50, 1.20, 1.60},  // shelving
    {0.40, 0.60, 0.40, 0.60, 0.80, 0.90},  // sink
    {0.80, 1.20, 0.40, 0.60, 0.70, 1.00},  // dresser
    {0.30, 0.50, 0.30, 0.50, 0.50, 1.20},  // plant
    {1.40, 2.00, 1.00, 1.60, 0.50, 0.70},  // bed
    {1.40, 2.00, 0.70, 0.90, 0.70, 0.90},  // sofa
    {1.00, 2.00, 0.50, 0.70, 0.90, 1.00},  // counter
    {0.80, 1.20, 0.30, 0.50, 0.90, 1.20},  // fireplace
}};

struct SceneParams {
  double width = 5.0;   // x extent, m
  double depth = 5.0;   // z extent, m
  int n_boxes = 8;
  std::array<double, kNumObjectClasses> class_weights{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  double min_gap = 0.2;           // free space kept between boxes, m
  double spawn_clearance = 0.4;   // half side of the square kept free at the floor center
  double resolution = 0.02;       // box faces snap to this lattice
  int max_tries = 10000;
};

/// Box faces sit this far inside the snapped cell edges so every projected
/// surface point lands in a cell whose center lies inside the box. Kept just
/// above float depth error: the floor strip it exposes inside edge cells can
/// otherwise be the last thing a grazing frame sees there.
inline constexpr double kFaceInset = 1e-5;

inline SceneModel generate_scene(std::uint64_t seed, const SceneParams& params = {}) {
  if (!(params.width > 0 && params.depth > 0 && params.resolution > 0))
    throw Error(ErrorCode::InvalidArgument, "scene extent must be positive");
  if (params.n_boxes < 0) throw Error(ErrorCode::InvalidArgument, "n_boxes must be >= 0");
  double weight_sum = 0;
  for (double w : params.class_weights) weight_sum += std::max(0.0, w);
  if (params.n_boxes > 0 && !(weight_sum > 0))
    throw Error(ErrorCode::InvalidArgument, "class weights sum to zero");

  SceneModel scene;
  scene.seed = seed;
  const double res = params.resolution;
  const int cols = static_cast<int>(std::lround(params.width / res));
  const int rows = static_cast<int>(std::lround(params.depth / res));
  scene.floor = {0.0, 0.0, cols * res, rows * res};

  struct CellBox {
    int u0, v0, u1, v1;  // [u0, u1) x [v0, v1)
  };
  std::vector<CellBox> placed;
  const int gap = static_cast<int>(std::ceil(params.min_gap / res - 1e-9));
  const int spawn_half = static_cast<int>(std::ceil(params.spawn_clearance / res - 1e-9));
  const CellBox spawn{cols / 2 - spawn_half, rows / 2 - spawn_half, cols / 2 + spawn_half,
                      rows / 2 + spawn_half};
  auto overlaps = [](const CellBox& a, const CellBox& b, int margin) {
    return a.u0 < b.u1 + margin && b.u0 < a.u1 + margin && a.v0 < b.v1 + margin &&
           b.v0 < a.v1 + margin;
  };

  Rng rng(seed);
  int tries = 0;
  for (int n = 0; n < params.n_boxes; ++n) {
    // class by weight
    double pick = rng.uniform() * weight_sum;
    int cls = kNumObjectClasses;
    for (int c = 0; c < kNumObjectClasses; ++c) {
      pick -= std::max(0.0, params.class_weights[c]);
      if (pick < 0) {
        cls = c + 1;
        break;
      }
    }
    const ClassShape& shape = kClassShapes[cls];
    bool done = false;
    while (!done) {
      if (++tries > params.max_tries)
        throw Error(ErrorCode::InfeasiblePlacement,
                    "could not place box " + std::to_string(n) + " within the try budget");
      const double along = rng.uniform(shape.long_min, shape.long_max);
      const double across = rng.uniform(shape.short_min, shape.short_max);
      const bool rotate = rng.uniform() < 0.5;
      const int w = std::max(1, static_cast<int>(std::lround((rotate ? across : along) / res)));
      const int d = std::max(1, static_cast<int>(std::lround((rotate ? along : across) / res)));
      if (w > cols || d > rows) continue;
      const int u0 = static_cast<int>(rng.uniform_int(0, cols - w));
      const int v0 = static_cast<int>(rng.uniform_int(0, rows - d));
      const CellBox cb{u0, v0, u0 + w, v0 + d};
      if (overlaps(cb, spawn, 0)) continue;
      if (std::any_of(placed.begin(), placed.end(),
                      [&](const CellBox& o) { return overlaps(cb, o, gap); }))
        continue;
      const double height =
          std::round(rng.uniform(shape.height_min, shape.height_max) * 1000.0) / 1000.0;
      placed.push_back(cb);
      Box box;
      box.class_id = static_cast<ClassId>(cls);
      box.instance_id = n + 1;
      box.aabb = {cb.u0 * res + kFaceInset, 0.0, cb.v0 * res + kFaceInset,
                  cb.u1 * res - kFaceInset, height, cb.v1 * res - kFaceInset};
      scene.boxes.push_back(box);
      done = true;
    }
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Ground truth

struct GroundTruth {
  SemanticMap map;
  HeightLayer heights;
  Raster<int> instances;  // winning instance id, 0 for floor
};

/// Tallest-object rule with cell-center sampling; equal tops go to the lower
/// instance id.
inline GroundTruth ground_truth(const SceneModel& scene, const GridSpec& g) {
  GroundTruth gt{SemanticMap(g), HeightLayer(g.u_size, g.v_size, 0.0f),
                 Raster<int>(g.u_size, g.v_size, 0)};
  Raster<double> top(g.u_size, g.v_size, -1.0);
  constexpr double eps = 1e-9;
  for (const Box& b : scene.boxes) {
    const int u0 = std::max(0, static_cast<int>(std::floor((b.aabb.xmin - g.origin_x) / g.resolution - 0.5)));
    const int u1 = std::min(g.u_size - 1, static_cast<int>(std::ceil((b.aabb.xmax - g.origin_x) / g.resolution)));
    const int v0 = std::max(0, static_cast<int>(std::floor((b.aabb.zmin - g.origin_z) / g.resolution - 0.5)));
    const int v1 = std::min(g.v_size - 1, static_cast<int>(std::ceil((b.aabb.zmax - g.origin_z) / g.resolution)));
    for (int v = v0; v <= v1; ++v) {
      const double cz = g.center_z(v);
      if (cz < b.aabb.zmin - eps || cz > b.aabb.zmax + eps) continue;
      for (int u = u0; u <= u1; ++u) {
        const double cx = g.center_x(u);
        if (cx < b.aabb.xmin - eps || cx > b.aabb.xmax + eps) continue;
        const int cur = gt.instances(u, v);
        if (b.aabb.ymax > top(u, v) || (b.aabb.ymax == top(u, v) && b.instance_id < cur)) {
          top(u, v) = b.aabb.ymax;
          gt.instances(u, v) = b.instance_id;
          gt.map.labels(u, v) = b.class_id;
          gt.heights(u, v) = static_cast<float>(b.aabb.ymax);
        }
      }
    }
  }
  return gt;
}

inline SemanticMap ground_truth_map(const SceneModel& scene, const GridSpec& g) {
  return ground_truth(scene, g).map;
}

inline constexpr double kFloorBand = 0.05;

/// Free iff the ground-truth height is within the floor band and the cell
/// center lies on the floor.
inline BinaryRaster freespace_from_heights(const HeightLayer& heights, const GridSpec& g,
                                           const FloorExtent& floor, double floor_y = 0.0) {
  BinaryRaster free(g.u_size, g.v_size, 0);
  for (int v = 0; v < g.v_size; ++v)
    for (int u = 0; u < g.u_size; ++u)
      free(u, v) = std::abs(heights(u, v) - floor_y) <= kFloorBand + 1e-12 &&
                   floor.contains(g.center_x(u), g.center_z(v));
  return free;
}

inline BinaryRaster ground_truth_freespace(const SceneModel& scene, const GridSpec& g) {
  return freespace_from_heights(ground_truth(scene, g).heights, g, scene.floor);
}

// ---------------------------------------------------------------------------
// SMAPSCENE text format

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::ParseError, "bad number '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::ParseError, "bad integer '" + s + "'");
  return v;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline void write_scene(std::ostream& os, const SceneModel& scene) {
  os << "SMAPSCENE 1\n";
  os << "floor " << format_double(scene.floor.xmin) << ' ' << format_double(scene.floor.zmin) << ' '
     << format_double(scene.floor.xmax) << ' ' << format_double(scene.floor.zmax) << '\n';
  for (const Box& b : scene.boxes) {
    os << "box " << int(b.class_id) << ' ' << b.instance_id << ' ' << format_double(b.aabb.xmin)
       << ' ' << format_double(b.aabb.ymin) << ' ' << format_double(b.aabb.zmin) << ' '
       << format_double(b.aabb.xmax) << ' ' << format_double(b.aabb.ymax) << ' '
       << format_double(b.aabb.zmax) << '\n';
  }
}

inline SceneModel read_scene(std::istream& is) {
  SceneModel scene;
  std::string line;
  if (!std::getline(is, line) || split_ws(line) != std::vector<std::string>{"SMAPSCENE", "1"})
    throw Error(ErrorCode::ParseError, "missing SMAPSCENE 1 header");
  bool have_floor = false;
  while (std::getline(is, line)) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "floor" && tok.size() == 5) {
      scene.floor = {parse_double(tok[1]), parse_double(tok[2]), parse_double(tok[3]),
                     parse_double(tok[4])};
      have_floor = true;
    } else if (tok[0] == "box" && tok.size() == 9) {
      Box b;
      b.class_id = static_cast<ClassId>(parse_int(tok[1]));
      b.instance_id = static_cast<int>(parse_int(tok[2]));
      b.aabb = {parse_double(tok[3]), parse_double(tok[4]), parse_double(tok[5]),
                parse_double(tok[6]), parse_double(tok[7]), parse_double(tok[8])};
      scene.boxes.push_back(b);
    } else {
      throw Error(ErrorCode::ParseError, "unexpected scene line: " + line);
    }
  }
  if (!have_floor) throw Error(ErrorCode::ParseError, "scene has no floor line");
  scene.validate();
  return scene;
}

inline void save_scene(const std::string& path, const SceneModel& scene) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_scene(os, scene);
}

inline SceneModel load_scene(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot read " + path);
  return read_scene(is);
}

}  // namespace semmap

#endif  // SEMMAP_SCENE_HPP_
