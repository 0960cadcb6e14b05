// Object-goal navigation on top-down maps: free space from the height layer,
// goal maps, A* over a fan of 0.25 m steps with a swept-disk collision check,
// an 8-connected Dijkstra oracle, and episode execution against ground truth.
#ifndef SEMMAP_NAV_HPP_
#define SEMMAP_NAV_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "semmap/core.hpp"
#include "semmap/geometry.hpp"
#include "semmap/imgproc.hpp"
#include "semmap/map.hpp"
#include "semmap/memory.hpp"
#include "semmap/metrics.hpp"
#include "semmap/scene.hpp"
#include "semmap/trajectory.hpp"

namespace semmap {

inline constexpr int kFreeSpaceCloseSide = 10;
inline constexpr int kGoalOpenSide = 10;
inline constexpr double kHeightBin = 0.01;

/// Predominant observed height: mean of the heights in the fullest 1 cm bin
/// (ties to the lower bin).
inline double estimate_floor_height(const HeightLayer& heights, const BinaryRaster& observed) {
  std::map<long long, std::pair<long long, double>> bins;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!observed[i]) continue;
    auto& [n, sum] = bins[static_cast<long long>(std::floor(heights[i] / kHeightBin))];
    ++n;
    sum += heights[i];
  }
  if (bins.empty()) throw Error(ErrorCode::NoObservations, "no observed cells");
  auto best = bins.begin();
  for (auto it = bins.begin(); it != bins.end(); ++it)
    if (it->second.first > best->second.first) best = it;
  return best->second.second / static_cast<double>(best->second.first);
}

/// Observed cells within 5 cm of the floor height, then closed with a 10-cell
/// square. The raw cells are kept: zero-padded closing eats the grid border.
inline BinaryRaster estimate_freespace(const HeightLayer& heights, const BinaryRaster& observed) {
  const double floor_y = estimate_floor_height(heights, observed);
  BinaryRaster free(observed.width(), observed.height(), 0);
  for (std::size_t i = 0; i < observed.size(); ++i)
    free[i] = observed[i] && std::abs(heights[i] - floor_y) <= kFloorBand + 1e-9;
  BinaryRaster closed = morphology(free, MorphOp::Close, kFreeSpaceCloseSide);
  for (std::size_t i = 0; i < closed.size(); ++i) closed[i] |= free[i];
  return closed;
}

inline BinaryRaster estimate_freespace(const SpatialMemory& mem) {
  return estimate_freespace(mem.heights(), mem.observed());
}

inline BinaryRaster build_goal_map(const SemanticMap& map, ClassId target) {
  BinaryRaster goal(map.labels.width(), map.labels.height(), 0);
  for (std::size_t i = 0; i < goal.size(); ++i) goal[i] = map.labels[i] == target;
  return morphology(goal, MorphOp::Open, kGoalOpenSide);
}

// ---------------------------------------------------------------------------
// Swept-disk collision check

/// Every cell whose center lies within `radius` of the segment a-b is inside
/// the grid and free.
inline bool swept_disk_clear(const BinaryRaster& free, const GridSpec& g, double ax, double az, double bx,
                             double bz, double radius) {
  const double res = g.resolution;
  const int u0 = static_cast<int>(std::floor((std::min(ax, bx) - radius - g.origin_x) / res));
  const int u1 = static_cast<int>(std::floor((std::max(ax, bx) + radius - g.origin_x) / res));
  const int v0 = static_cast<int>(std::floor((std::min(az, bz) - radius - g.origin_z) / res));
  const int v1 = static_cast<int>(std::floor((std::max(az, bz) + radius - g.origin_z) / res));
  const double dx = bx - ax, dz = bz - az;
  const double len_sq = dx * dx + dz * dz;
  const double r_sq = radius * radius;
  for (int v = v0; v <= v1; ++v) {
    const double cz = g.center_z(v);
    for (int u = u0; u <= u1; ++u) {
      const double cx = g.center_x(u);
      double t = len_sq > 0 ? ((cx - ax) * dx + (cz - az) * dz) / len_sq : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ex = ax + t * dx - cx, ez = az + t * dz - cz;
      if (ex * ex + ez * ez > r_sq) continue;
      if (!g.contains(u, v) || !free(u, v)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Planner

struct PlannerParams {
  double agent_radius = kAgentRadius;
  double step = 0.25;
  int headings = 12;  // fan directions, 30 degrees apart
  double stop_radius = 1.0;
  bool greedy = false;  // pure best-first on the heuristic instead of A*
  std::size_t max_expansions = 2'000'000;
};

struct Plan {
  std::vector<AgentState> poses;  // start first
  double length = 0.0;
  Cell goal_cell;                 // visible goal cell satisfying the stop rule
};

/// Goal cells within the stop radius of (x, z) with an all-observed line of
/// sight; returns the first such cell found.
inline std::optional<Cell> visible_goal_within(const BinaryRaster& goal, const BinaryRaster& observed,
                                               const GridSpec& g, double x, double z, double radius) {
  Cell here;
  if (!try_world_to_cell(g, x, z, here)) return std::nullopt;
  const int span = static_cast<int>(std::ceil(radius / g.resolution)) + 1;
  const double r_sq = radius * radius;
  for (int v = std::max(0, here.v - span); v <= std::min(g.v_size - 1, here.v + span); ++v)
    for (int u = std::max(0, here.u - span); u <= std::min(g.u_size - 1, here.u + span); ++u) {
      if (!goal(u, v)) continue;
      const double ex = g.center_x(u) - x, ez = g.center_z(v) - z;
      if (ex * ex + ez * ez > r_sq) continue;
      if (line_of_sight(observed, here, {u, v})) return Cell{u, v};
    }
  return std::nullopt;
}

inline Plan plan_astar(const BinaryRaster& free, const BinaryRaster& goal, const BinaryRaster& observed,
                       const GridSpec& g, const AgentState& start, const PlannerParams& params = {}) {
  if (!free.same_shape(goal) || !free.same_shape(observed) || free.width() != g.u_size || free.height() != g.v_size)
    throw Error(ErrorCode::GridMismatch, "planner rasters do not match the grid");
  if (!disk_fits(free, g, start.x, start.z, params.agent_radius))
    throw Error(ErrorCode::StartBlocked, "start pose is not in free space");
  if (count_set(goal) == 0) throw Error(ErrorCode::NoPath, "goal map is empty");

  const Raster<double> goal_dist_sq = distance_transform_sq(goal);
  auto heuristic = [&](double x, double z) {
    Cell c;
    if (!try_world_to_cell(g, x, z, c)) return 0.0;
    const double d = std::sqrt(goal_dist_sq(c.u, c.v)) * g.resolution;
    return std::max(0.0, d - params.stop_radius);
  };

  struct Node {
    double x, z;
    int heading;
    double cost;
    int parent;
  };
  std::vector<Node> nodes;
  using Entry = std::pair<double, int>;  // priority, node index
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const int nh = params.headings;
  std::vector<std::uint8_t> closed(g.cell_count() * nh, 0);
  auto key = [&](double x, double z, int h) -> std::optional<std::size_t> {
    Cell c;
    if (!try_world_to_cell(g, x, z, c)) return std::nullopt;
    return (static_cast<std::size_t>(c.v) * g.u_size + c.u) * nh + h;
  };

  nodes.push_back({start.x, start.z, 0, 0.0, -1});
  open.push({heuristic(start.x, start.z), 0});
  const double heading_step = 2.0 * std::numbers::pi / nh;
  std::size_t expansions = 0;

  while (!open.empty()) {
    const int idx = open.top().second;
    open.pop();
    const Node cur = nodes[idx];
    const auto k = key(cur.x, cur.z, cur.heading);
    if (!k || closed[*k]) continue;
    closed[*k] = 1;

    if (auto hit = visible_goal_within(goal, observed, g, cur.x, cur.z, params.stop_radius)) {
      Plan plan;
      plan.goal_cell = *hit;
      for (int n = idx; n >= 0; n = nodes[n].parent)
        plan.poses.push_back({nodes[n].x, nodes[n].z, start.yaw + nodes[n].heading * heading_step});
      std::reverse(plan.poses.begin(), plan.poses.end());
      plan.length = cur.cost;
      return plan;
    }
    if (++expansions > params.max_expansions) break;

    for (int d = 0; d < nh; ++d) {
      const int h = (cur.heading + d) % nh;
      const double yaw = start.yaw + h * heading_step;
      const double nx = cur.x + params.step * std::sin(yaw);
      const double nz = cur.z + params.step * std::cos(yaw);
      const auto nk = key(nx, nz, h);
      if (!nk || closed[*nk]) continue;
      if (!swept_disk_clear(free, g, cur.x, cur.z, nx, nz, params.agent_radius)) continue;
      const double cost = cur.cost + params.step;
      const double hval = heuristic(nx, nz);
      nodes.push_back({nx, nz, h, cost, idx});
      open.push({params.greedy ? hval : cost + hval, static_cast<int>(nodes.size() - 1)});
    }
  }
  throw Error(ErrorCode::NoPath, "frontier exhausted before reaching a visible goal");
}

// ---------------------------------------------------------------------------
// Oracle

/// 8-connected Dijkstra over free cells from the start cell until a cell
/// within `stop_radius` of a goal cell is settled; +inf if none is reachable.
inline double oracle_shortest(const BinaryRaster& free, const GridSpec& g, double sx, double sz,
                              const BinaryRaster& goal, double stop_radius = 1.0) {
  Cell s;
  if (!try_world_to_cell(g, sx, sz, s) || !free(s.u, s.v)) return std::numeric_limits<double>::infinity();
  if (count_set(goal) == 0) return std::numeric_limits<double>::infinity();
  const Raster<double> goal_dist_sq = distance_transform_sq(goal);
  const double stop_sq = (stop_radius / g.resolution) * (stop_radius / g.resolution);
  std::vector<double> dist(g.cell_count(), std::numeric_limits<double>::infinity());
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const std::size_t s_idx = static_cast<std::size_t>(s.v) * g.u_size + s.u;
  dist[s_idx] = 0.0;
  open.push({0.0, s_idx});
  const double diag = std::sqrt(2.0) * g.resolution;
  while (!open.empty()) {
    const auto [d, idx] = open.top();
    open.pop();
    if (d > dist[idx]) continue;
    if (goal_dist_sq[idx] <= stop_sq + 1e-9) return d;
    const int u = static_cast<int>(idx % g.u_size), v = static_cast<int>(idx / g.u_size);
    for (int dv = -1; dv <= 1; ++dv)
      for (int du = -1; du <= 1; ++du) {
        if (!du && !dv) continue;
        const int nu = u + du, nv = v + dv;
        if (!g.contains(nu, nv) || !free(nu, nv)) continue;
        const std::size_t n = static_cast<std::size_t>(nv) * g.u_size + nu;
        const double nd = d + (du && dv ? diag : g.resolution);
        if (nd < dist[n]) {
          dist[n] = nd;
          open.push({nd, n});
        }
      }
  }
  return std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Episodes

struct Episode {
  int id = 0;
  AgentState start;
  ClassId target = 1;
};

/// Inputs the agent plans with.
struct PlanningMaps {
  SemanticMap semantic;
  BinaryRaster free;
  BinaryRaster observed;
};

/// Ground truth used to execute and score a plan.
struct GroundTruthWorld {
  SemanticMap map;
  BinaryRaster free;

  static GroundTruthWorld from_scene(const SceneModel& scene, const GridSpec& g) {
    const GroundTruth gt = ground_truth(scene, g);
    return {gt.map, freespace_from_heights(gt.heights, g, scene.floor)};
  }
};

inline BinaryRaster class_mask(const SemanticMap& map, ClassId c) {
  BinaryRaster m(map.labels.width(), map.labels.height(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = map.labels[i] == c;
  return m;
}

/// Plans on `maps`, then replays the plan in the ground-truth world: the agent
/// stops at the first segment whose swept disk touches an occupied cell.
/// Success means ending within the stop radius of a ground-truth target cell.
inline EpisodeResult run_episode(const Episode& ep, const PlanningMaps& maps, const GroundTruthWorld& world,
                                 const PlannerParams& params = {}) {
  const GridSpec& g = world.map.grid;
  EpisodeResult r;
  r.id = ep.id;
  r.path.push_back({ep.start.x, ep.start.z, ep.start.yaw});
  const BinaryRaster target_gt = class_mask(world.map, ep.target);
  const bool target_present = count_set(target_gt) > 0;
  auto geodesic = [&](double x, double z) {
    return target_present ? oracle_shortest(world.free, g, x, z, target_gt, params.stop_radius)
                          : std::numeric_limits<double>::infinity();
  };
  r.initial_distance = geodesic(ep.start.x, ep.start.z);
  r.oracle_length = r.initial_distance;

  double fx = ep.start.x, fz = ep.start.z;
  try {
    const Plan plan = plan_astar(maps.free, build_goal_map(maps.semantic, ep.target), maps.observed, g, ep.start, params);
    for (std::size_t k = 1; k < plan.poses.size(); ++k) {
      const AgentState& a = plan.poses[k - 1];
      const AgentState& b = plan.poses[k];
      if (!swept_disk_clear(world.free, g, a.x, a.z, b.x, b.z, params.agent_radius)) break;
      r.path_length += std::hypot(b.x - a.x, b.z - a.z);
      r.path.push_back({b.x, b.z, b.yaw});
      fx = b.x;
      fz = b.z;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoPath && e.code() != ErrorCode::StartBlocked) throw;
  }
  r.final_distance = geodesic(fx, fz);
  if (target_present) {
    Cell c;
    if (try_world_to_cell(g, fx, fz, c)) {
      const int span = static_cast<int>(std::ceil(params.stop_radius / g.resolution)) + 1;
      for (int v = std::max(0, c.v - span); v <= std::min(g.v_size - 1, c.v + span) && !r.success; ++v)
        for (int u = std::max(0, c.u - span); u <= std::min(g.u_size - 1, c.u + span); ++u) {
          if (!target_gt(u, v)) continue;
          if (std::hypot(g.center_x(u) - fx, g.center_z(v) - fz) <= params.stop_radius) {
            r.success = true;
            break;
          }
        }
    }
  }
  return r;
}

/// Random start poses in ground-truth free space (agent disk fits) more than
/// the stop radius away from a present target class.
inline std::vector<Episode> generate_episodes(const SceneModel& scene, const GridSpec& g, int count,
                                              std::uint64_t seed, const PlannerParams& params = {}) {
  const GroundTruthWorld world = GroundTruthWorld::from_scene(scene, g);
  std::vector<ClassId> present;
  for (int c = 1; c < kNumClasses; ++c)
    if (scene.count_class(static_cast<ClassId>(c)) > 0) present.push_back(static_cast<ClassId>(c));
  std::vector<Episode> out;
  if (present.empty()) return out;
  Rng rng(seed);
  for (int tries = 0; static_cast<int>(out.size()) < count && tries < 100000; ++tries) {
    Episode ep;
    ep.id = static_cast<int>(out.size());
    ep.target = present[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(present.size()) - 1))];
    ep.start.x = rng.uniform(scene.floor.xmin, scene.floor.xmax);
    ep.start.z = rng.uniform(scene.floor.zmin, scene.floor.zmax);
    ep.start.yaw = deg_to_rad(30.0 * static_cast<double>(rng.uniform_int(0, 11)));
    if (!disk_fits(world.free, g, ep.start.x, ep.start.z, params.agent_radius)) continue;
    const double d0 = oracle_shortest(world.free, g, ep.start.x, ep.start.z, class_mask(world.map, ep.target),
                                      params.stop_radius);
    if (!(d0 > 0.0) || !std::isfinite(d0)) continue;
    out.push_back(ep);
  }
  return out;
}

// ---------------------------------------------------------------------------
// SMAPEPIS episodes and result rows

inline void write_episodes(std::ostream& os, const std::vector<Episode>& eps) {
  os << "SMAPEPIS 1\n";
  for (const Episode& e : eps)
    os << "episode " << e.id << ' ' << format_double(e.start.x) << ' ' << format_double(e.start.z) << ' '
       << format_double(rad_to_deg(e.start.yaw)) << ' ' << int(e.target) << '\n';
}

inline std::vector<Episode> read_episodes(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || split_ws(line) != std::vector<std::string>{"SMAPEPIS", "1"})
    throw Error(ErrorCode::ParseError, "missing SMAPEPIS 1 header");
  std::vector<Episode> eps;
  while (std::getline(is, line)) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] != "episode" || tok.size() != 6) throw Error(ErrorCode::ParseError, "bad episode line: " + line);
    Episode e;
    e.id = static_cast<int>(parse_int(tok[1]));
    e.start = {parse_double(tok[2]), parse_double(tok[3]), deg_to_rad(parse_double(tok[4]))};
    const long long t = parse_int(tok[5]);
    if (t < 0 || t >= kNumClasses) throw Error(ErrorCode::ParseError, "target class outside 0..12");
    e.target = static_cast<ClassId>(t);
    eps.push_back(e);
  }
  return eps;
}

inline void write_results(std::ostream& os, const std::vector<EpisodeResult>& results) {
  for (const EpisodeResult& r : results)
    os << r.id << ' ' << (r.success ? 1 : 0) << ' ' << format_double(r.path_length) << ' '
       << format_double(r.oracle_length) << ' ' << format_double(r.initial_distance) << ' '
       << format_double(r.final_distance) << '\n';
}

}  // namespace semmap

#endif  // SEMMAP_NAV_HPP_
