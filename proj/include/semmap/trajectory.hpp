// Agent trajectories on the discrete action lattice (forward 0.10 m, turn 9
// degrees) and a scripted boustrophedon coverage policy.
#ifndef SEMMAP_TRAJECTORY_HPP_
#define SEMMAP_TRAJECTORY_HPP_

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semmap/core.hpp"
#include "semmap/geometry.hpp"
#include "semmap/scene.hpp"

namespace semmap {

inline constexpr double kForwardStep = 0.10;
inline constexpr double kTurnStepDeg = 9.0;
inline constexpr int kTurnsPerRevolution = 40;
inline constexpr double kDefaultCameraHeight = 1.25;
inline constexpr double kAgentRadius = 0.10;

struct AgentState {
  double x = 0.0;
  double z = 0.0;
  double yaw = 0.0;  // radians; forward direction is (sin yaw, 0, cos yaw)

  Pose pose(double camera_height) const { return Pose::from_agent(x, z, yaw, camera_height); }
};

struct Trajectory {
  std::vector<AgentState> states;
  double camera_height = kDefaultCameraHeight;
  double forward_step = kForwardStep;
  double turn_step_deg = kTurnStepDeg;
};

/// True iff b follows a by exactly one legal action.
inline bool is_legal_transition(const AgentState& a, const AgentState& b, double tol = 1e-6) {
  const double dyaw_deg = rad_to_deg(b.yaw - a.yaw);
  const double wrapped = dyaw_deg - 360.0 * std::round(dyaw_deg / 360.0);
  const double dx = b.x - a.x, dz = b.z - a.z;
  const bool same_pos = std::abs(dx) <= tol && std::abs(dz) <= tol;
  if (same_pos) return std::abs(std::abs(wrapped) - kTurnStepDeg) <= tol;
  if (std::abs(wrapped) > tol) return false;
  return std::abs(dx - kForwardStep * std::sin(a.yaw)) <= tol &&
         std::abs(dz - kForwardStep * std::cos(a.yaw)) <= tol;
}

inline bool validate_trajectory(const Trajectory& t) {
  for (std::size_t k = 1; k < t.states.size(); ++k)
    if (!is_legal_transition(t.states[k - 1], t.states[k])) return false;
  return true;
}

/// Every cell whose center lies within `radius` of (x, z) is inside the grid and free.
inline bool disk_fits(const BinaryRaster& free, const GridSpec& g, double x, double z, double radius) {
  const int u0 = static_cast<int>(std::floor((x - radius - g.origin_x) / g.resolution));
  const int u1 = static_cast<int>(std::floor((x + radius - g.origin_x) / g.resolution));
  const int v0 = static_cast<int>(std::floor((z - radius - g.origin_z) / g.resolution));
  const int v1 = static_cast<int>(std::floor((z + radius - g.origin_z) / g.resolution));
  Cell c;
  if (!try_world_to_cell(g, x, z, c)) return false;
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      const double cx = g.center_x(u) - x, cz = g.center_z(v) - z;
      if (cx * cx + cz * cz > radius * radius) continue;
      if (!g.contains(u, v) || !free(u, v)) return false;
    }
  }
  return true;
}

struct CoverageParams {
  double lane_spacing = 1.0;  // m, multiple of the forward step
  double camera_height = kDefaultCameraHeight;
  double agent_radius = kAgentRadius;
};

namespace detail {

struct LatticeNode {
  int ix, iz;
  auto operator<=>(const LatticeNode&) const = default;
};

class CoverageBuilder {
 public:
  CoverageBuilder(const BinaryRaster& free, const GridSpec& g, double sx, double sz, double radius)
      : free_(free), g_(g), sx_(sx), sz_(sz), radius_(radius) {}

  double x(int ix) const { return sx_ + kForwardStep * ix; }
  double z(int iz) const { return sz_ + kForwardStep * iz; }

  bool fits(LatticeNode n) const {
    auto it = fit_cache_.find(n);
    if (it != fit_cache_.end()) return it->second;
    const bool ok = disk_fits(free_, g_, x(n.ix), z(n.iz), radius_);
    fit_cache_.emplace(n, ok);
    return ok;
  }

  bool edge_ok(LatticeNode a, LatticeNode b) const {
    if (!fits(a) || !fits(b)) return false;
    return disk_fits(free_, g_, 0.5 * (x(a.ix) + x(b.ix)), 0.5 * (z(a.iz) + z(b.iz)), radius_);
  }

  /// 4-connected BFS; returns the node sequence from a to b inclusive.
  std::optional<std::vector<LatticeNode>> route(LatticeNode a, LatticeNode b) const {
    std::map<LatticeNode, LatticeNode> parent;
    std::deque<LatticeNode> queue{a};
    parent.emplace(a, a);
    while (!queue.empty()) {
      const LatticeNode cur = queue.front();
      queue.pop_front();
      if (cur == b) break;
      for (const auto& [dx, dz] : kMoves) {
        const LatticeNode nxt{cur.ix + dx, cur.iz + dz};
        if (parent.count(nxt) || !edge_ok(cur, nxt)) continue;
        parent.emplace(nxt, cur);
        queue.push_back(nxt);
      }
    }
    if (!parent.count(b)) return std::nullopt;
    std::vector<LatticeNode> path{b};
    while (!(path.back() == a)) path.push_back(parent.at(path.back()));
    std::reverse(path.begin(), path.end());
    return path;
  }

  std::vector<LatticeNode> reachable(LatticeNode a) const {
    std::map<LatticeNode, bool> seen{{a, true}};
    std::deque<LatticeNode> queue{a};
    std::vector<LatticeNode> out;
    while (!queue.empty()) {
      const LatticeNode cur = queue.front();
      queue.pop_front();
      out.push_back(cur);
      for (const auto& [dx, dz] : kMoves) {
        const LatticeNode nxt{cur.ix + dx, cur.iz + dz};
        if (seen.count(nxt) || !edge_ok(cur, nxt)) continue;
        seen.emplace(nxt, true);
        queue.push_back(nxt);
      }
    }
    return out;
  }

  static constexpr std::pair<int, int> kMoves[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

 private:
  const BinaryRaster& free_;
  GridSpec g_;
  double sx_, sz_, radius_;
  mutable std::map<LatticeNode, bool> fit_cache_;
};

/// Emits states while tracking yaw as an integer count of 9 degree turns.
class ActionEmitter {
 public:
  ActionEmitter(Trajectory& t, double x, double z, int yaw_steps) : t_(t), yaw_steps_(yaw_steps) {
    t_.states.push_back({x, z, yaw()});
  }

  double yaw() const { return deg_to_rad(kTurnStepDeg * yaw_steps_); }

  void turn(int dir) {
    yaw_steps_ = ((yaw_steps_ + dir) % kTurnsPerRevolution + kTurnsPerRevolution) % kTurnsPerRevolution;
    AgentState s = t_.states.back();
    s.yaw = yaw();
    t_.states.push_back(s);
  }

  void face(int target_steps) {
    int diff = ((target_steps - yaw_steps_) % kTurnsPerRevolution + kTurnsPerRevolution) %
               kTurnsPerRevolution;
    if (diff <= kTurnsPerRevolution / 2) {
      for (int k = 0; k < diff; ++k) turn(+1);
    } else {
      for (int k = 0; k < kTurnsPerRevolution - diff; ++k) turn(-1);
    }
  }

  void forward(double nx, double nz) {
    AgentState s = t_.states.back();
    s.x = nx;
    s.z = nz;
    t_.states.push_back(s);
  }

  void scan() {
    for (int k = 0; k < kTurnsPerRevolution; ++k) turn(+1);
  }

 private:
  Trajectory& t_;
  int yaw_steps_;
};

/// Yaw (in 9 degree steps) facing a lattice move.
inline int heading_steps(int dx, int dz) {
  if (dz > 0) return 0;    // +z
  if (dx > 0) return 10;   // +x
  if (dz < 0) return 20;   // -z
  return 30;               // -x
}

}  // namespace detail

/// Boustrophedon sweep over the free space reachable from the floor center.
/// Lanes run along one axis (chosen by the seed) `lane_spacing` apart; a full
/// 40-turn scan is inserted at the end of every lane.
inline Trajectory coverage_trajectory(const SceneModel& scene, std::uint64_t seed,
                                      const CoverageParams& params = {},
                                      double resolution = 0.02) {
  const GridSpec g = scene.grid(resolution);
  const BinaryRaster free = ground_truth_freespace(scene, g);
  using detail::LatticeNode;

  // spawn: floor center, else the nearest lattice point that fits
  detail::CoverageBuilder builder(free, g, scene.floor.center_x(), scene.floor.center_z(),
                                  params.agent_radius);
  std::optional<LatticeNode> spawn;
  const int reach_x = static_cast<int>(std::ceil((scene.floor.xmax - scene.floor.xmin) / kForwardStep));
  const int reach_z = static_cast<int>(std::ceil((scene.floor.zmax - scene.floor.zmin) / kForwardStep));
  const int reach = std::max(reach_x, reach_z);
  for (int ring = 0; ring <= reach && !spawn; ++ring) {
    for (int iz = -ring; iz <= ring && !spawn; ++iz)
      for (int ix = -ring; ix <= ring && !spawn; ++ix)
        if (std::max(std::abs(ix), std::abs(iz)) == ring && builder.fits({ix, iz})) spawn = LatticeNode{ix, iz};
  }
  if (!spawn) throw Error(ErrorCode::NoFreeSpace, "no lattice position fits the agent");

  Rng rng(seed);
  const bool lanes_along_x = rng.uniform() < 0.5;
  const bool reverse_lanes = rng.uniform() < 0.5;
  const int lane_step = std::max(1, static_cast<int>(std::lround(params.lane_spacing / kForwardStep)));

  const std::vector<LatticeNode> nodes = builder.reachable(*spawn);
  // lane key -> (min, max) along-lane coordinate among reachable nodes
  std::map<int, std::pair<int, int>> lanes;
  for (const LatticeNode& n : nodes) {
    const int across = lanes_along_x ? n.iz : n.ix;
    const int along = lanes_along_x ? n.ix : n.iz;
    const int offset = across - (lanes_along_x ? spawn->iz : spawn->ix);
    if (((offset % lane_step) + lane_step) % lane_step != 0) continue;
    auto [it, inserted] = lanes.emplace(across, std::make_pair(along, along));
    if (!inserted) {
      it->second.first = std::min(it->second.first, along);
      it->second.second = std::max(it->second.second, along);
    }
  }
  std::vector<int> lane_keys;
  for (const auto& [k, _] : lanes) lane_keys.push_back(k);
  if (reverse_lanes) std::reverse(lane_keys.begin(), lane_keys.end());

  Trajectory traj;
  traj.camera_height = params.camera_height;
  detail::ActionEmitter emit(traj, builder.x(spawn->ix), builder.z(spawn->iz), 0);
  LatticeNode cur = *spawn;
  auto go = [&](LatticeNode target) {
    const auto path = builder.route(cur, target);
    if (!path) return;
    for (std::size_t k = 1; k < path->size(); ++k) {
      const int dx = (*path)[k].ix - (*path)[k - 1].ix;
      const int dz = (*path)[k].iz - (*path)[k - 1].iz;
      emit.face(detail::heading_steps(dx, dz));
      emit.forward(builder.x((*path)[k].ix), builder.z((*path)[k].iz));
    }
    cur = target;
  };
  auto node_on_lane = [&](int across, int along) {
    return lanes_along_x ? LatticeNode{along, across} : LatticeNode{across, along};
  };

  bool forward_dir = true;
  for (int key : lane_keys) {
    const auto [lo, hi] = lanes.at(key);
    const LatticeNode first = node_on_lane(key, forward_dir ? lo : hi);
    const LatticeNode last = node_on_lane(key, forward_dir ? hi : lo);
    go(first);
    go(last);
    emit.scan();
    forward_dir = !forward_dir;
  }
  return traj;
}

// ---------------------------------------------------------------------------
// SMAPTRAJ text format

inline void write_trajectory(std::ostream& os, const Trajectory& t) {
  os << "SMAPTRAJ 1\n";
  os << "camera_height " << format_double(t.camera_height) << '\n';
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    const AgentState& s = t.states[k];
    double deg = rad_to_deg(s.yaw);
    // yaw is generated in whole 9 degree steps; print the exact multiple
    const double steps = std::round(deg / kTurnStepDeg);
    if (std::abs(deg - steps * kTurnStepDeg) < 1e-9) deg = steps * kTurnStepDeg;
    os << "step " << k << ' ' << format_double(s.x) << ' ' << format_double(s.z) << ' '
       << format_double(deg) << '\n';
  }
}

inline Trajectory read_trajectory(std::istream& is) {
  Trajectory t;
  std::string line;
  if (!std::getline(is, line) || split_ws(line) != std::vector<std::string>{"SMAPTRAJ", "1"})
    throw Error(ErrorCode::ParseError, "missing SMAPTRAJ 1 header");
  while (std::getline(is, line)) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "camera_height" && tok.size() == 2) {
      t.camera_height = parse_double(tok[1]);
    } else if (tok[0] == "step" && tok.size() == 5) {
      if (parse_int(tok[1]) != static_cast<long long>(t.states.size()))
        throw Error(ErrorCode::ParseError, "trajectory steps out of order");
      t.states.push_back({parse_double(tok[2]), parse_double(tok[3]), deg_to_rad(parse_double(tok[4]))});
    } else {
      throw Error(ErrorCode::ParseError, "unexpected trajectory line: " + line);
    }
  }
  return t;
}

inline void save_trajectory(const std::string& path, const Trajectory& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_trajectory(os, t);
}

inline Trajectory load_trajectory(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot read " + path);
  return read_trajectory(is);
}

}  // namespace semmap

#endif  // SEMMAP_TRAJECTORY_HPP_
