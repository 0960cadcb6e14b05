// Depth + semantic raycaster standing in for an embodied simulator.
#ifndef SEMMAP_RAYCAST_HPP_
#define SEMMAP_RAYCAST_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "semmap/core.hpp"
#include "semmap/geometry.hpp"
#include "semmap/scene.hpp"

namespace semmap {

struct EgoFrame {
  CameraIntrinsics intrinsics;
  DepthImage depth;          // planar depth, 0 = no return
  LabelRaster labels;        // 0 wherever depth is 0
  Raster<std::uint16_t> instances;
  Pose pose;
  double camera_y = 0.0;
};

inline constexpr double kDefaultMaxRange = 10.0;

struct RayHit {
  double depth = std::numeric_limits<double>::infinity();
  ClassId label = 0;
  int instance = 0;
};

/// Nearest hit along origin + s * dir, where dir has unit camera-frame z so
/// that s is planar depth. Floor is the plane y = 0; floor hits are void.
inline RayHit cast_ray(const SceneModel& scene, const Vec3& origin, const Vec3& dir) {
  RayHit best;
  if (dir.y() < 0.0) {
    const double s = -origin.y() / dir.y();
    if (s > 0.0) best.depth = s;
  }
  for (const Box& b : scene.boxes) {
    double s_near = -std::numeric_limits<double>::infinity();
    double s_far = std::numeric_limits<double>::infinity();
    const double lo[3] = {b.aabb.xmin, b.aabb.ymin, b.aabb.zmin};
    const double hi[3] = {b.aabb.xmax, b.aabb.ymax, b.aabb.zmax};
    bool miss = false;
    for (int a = 0; a < 3; ++a) {
      const double o = origin[a], d = dir[a];
      if (d == 0.0) {
        if (o < lo[a] || o > hi[a]) {
          miss = true;
          break;
        }
        continue;
      }
      double s0 = (lo[a] - o) / d, s1 = (hi[a] - o) / d;
      if (s0 > s1) std::swap(s0, s1);
      s_near = std::max(s_near, s0);
      s_far = std::min(s_far, s1);
      if (s_near > s_far) {
        miss = true;
        break;
      }
    }
    if (miss || !(s_near > 0.0)) continue;
    // boxes win depth ties against the floor and against higher instance ids
    if (s_near < best.depth || (s_near == best.depth && (best.instance == 0 || b.instance_id < best.instance))) {
      best.depth = s_near;
      best.label = b.class_id;
      best.instance = b.instance_id;
    }
  }
  return best;
}

namespace detail {

/// Entry parameter of the ray into the box, NaN on a miss. Rays starting
/// inside a box report a non-positive entry and are treated as misses.
inline double slab_entry(const Aabb& a, const Vec3& o, const Vec3& d, const Vec3& inv) {
  double s_near = -std::numeric_limits<double>::infinity();
  double s_far = std::numeric_limits<double>::infinity();
  const double lo[3] = {a.xmin, a.ymin, a.zmin};
  const double hi[3] = {a.xmax, a.ymax, a.zmax};
  for (int ax = 0; ax < 3; ++ax) {
    if (d[ax] == 0.0) {
      if (o[ax] < lo[ax] || o[ax] > hi[ax]) return std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double s0 = (lo[ax] - o[ax]) * inv[ax];
    double s1 = (hi[ax] - o[ax]) * inv[ax];
    if (s0 > s1) std::swap(s0, s1);
    s_near = std::max(s_near, s0);
    s_far = std::min(s_far, s1);
  }
  return s_near <= s_far ? s_near : std::numeric_limits<double>::quiet_NaN();
}

struct PixelRect {
  int i0, j0, i1, j1;  // inclusive
};

/// Conservative screen rectangle of the part of a box lying in front of the
/// plane z_cam = kNearClip; empty (i0 > i1) when nothing is in front.
inline constexpr double kNearClip = 1e-4;

inline PixelRect screen_rect(const CameraIntrinsics& k, const Pose& pose, const Aabb& b) {
  std::array<Vec3, 8> cam;
  for (int c = 0; c < 8; ++c) {
    const Vec3 p(c & 1 ? b.xmax : b.xmin, c & 2 ? b.ymax : b.ymin, c & 4 ? b.zmax : b.zmin);
    cam[c] = pose.rotation * (p + pose.translation);
  }
  double i_lo = 1e300, i_hi = -1e300, j_lo = 1e300, j_hi = -1e300;
  bool any = false;
  auto add = [&](const Vec3& q) {
    const double i = k.fx * q.x() / q.z() + k.cx;
    const double j = k.fy * q.y() / q.z() + k.cy;
    i_lo = std::min(i_lo, i);
    i_hi = std::max(i_hi, i);
    j_lo = std::min(j_lo, j);
    j_hi = std::max(j_hi, j);
    any = true;
  };
  for (int c = 0; c < 8; ++c)
    if (cam[c].z() >= kNearClip) add(cam[c]);
  // box edges join corners differing in exactly one bit
  for (int c = 0; c < 8; ++c) {
    for (int bit = 1; bit < 8; bit <<= 1) {
      const int d = c | bit;
      if (d == c) continue;
      const double za = cam[c].z() - kNearClip, zb = cam[d].z() - kNearClip;
      if ((za < 0) == (zb < 0)) continue;
      const double t = za / (za - zb);
      Vec3 q = cam[c] + t * (cam[d] - cam[c]);
      q.z() = kNearClip;
      add(q);
    }
  }
  if (!any) return {0, 0, -1, -1};
  PixelRect r;
  r.i0 = static_cast<int>(std::clamp(std::floor(i_lo) - 1, 0.0, double(k.width)));
  r.j0 = static_cast<int>(std::clamp(std::floor(j_lo) - 1, 0.0, double(k.height)));
  r.i1 = static_cast<int>(std::clamp(std::ceil(i_hi) + 1, -1.0, double(k.width - 1)));
  r.j1 = static_cast<int>(std::clamp(std::ceil(j_hi) + 1, -1.0, double(k.height - 1)));
  return r;
}

}  // namespace detail

inline EgoFrame raycast_frame(const SceneModel& scene, const CameraIntrinsics& k, const Pose& pose,
                              double camera_y, double max_range = kDefaultMaxRange) {
  EgoFrame f;
  f.intrinsics = k;
  f.pose = pose;
  f.camera_y = camera_y;
  f.depth = DepthImage(k.width, k.height, 0.0f);
  f.labels = LabelRaster(k.width, k.height, 0);
  f.instances = Raster<std::uint16_t>(k.width, k.height, 0);
  const Mat3 rt = pose.rotation.transpose();
  const Vec3 origin = pose.position();

  std::vector<detail::PixelRect> rects;
  rects.reserve(scene.boxes.size());
  for (const Box& b : scene.boxes) rects.push_back(detail::screen_rect(k, pose, b.aabb));

  parallel_for(0, k.height, [&](int j) {
    const int w = k.width;
    std::vector<Vec3> dirs(w), inv(w);
    std::vector<double> best(w, std::numeric_limits<double>::infinity());
    std::vector<int> best_box(w, -1);
    for (int i = 0; i < w; ++i) {
      dirs[i] = rt * Vec3((i - k.cx) / k.fx, (j - k.cy) / k.fy, 1.0);
      inv[i] = dirs[i].cwiseInverse();
      if (dirs[i].y() < 0.0) {
        const double s = -origin.y() / dirs[i].y();
        if (s > 0.0) best[i] = s;
      }
    }
    for (std::size_t b = 0; b < scene.boxes.size(); ++b) {
      const detail::PixelRect& r = rects[b];
      if (j < r.j0 || j > r.j1) continue;
      const Box& box = scene.boxes[b];
      const Aabb& a = box.aabb;
      for (int i = r.i0; i <= r.i1; ++i) {
        const double s = detail::slab_entry(a, origin, dirs[i], inv[i]);
        if (!(s > 0.0)) continue;
        const int cur = best_box[i];
        if (s < best[i] || (s == best[i] && (cur < 0 || box.instance_id < scene.boxes[cur].instance_id))) {
          best[i] = s;
          best_box[i] = static_cast<int>(b);
        }
      }
    }
    for (int i = 0; i < w; ++i) {
      if (!(best[i] <= max_range)) continue;
      f.depth(i, j) = static_cast<float>(best[i]);
      if (best_box[i] >= 0) {
        f.labels(i, j) = scene.boxes[best_box[i]].class_id;
        f.instances(i, j) = static_cast<std::uint16_t>(scene.boxes[best_box[i]].instance_id);
      }
    }
  });
  return f;
}

}  // namespace semmap

#endif  // SEMMAP_RAYCAST_HPP_
