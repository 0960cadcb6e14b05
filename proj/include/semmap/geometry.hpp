// Camera models and transforms between pixel, camera, world and grid frames.
//
// World frame is Y-up (gravity along -Y). A pose stores the world->camera
// rotation R and a translation t such that a camera-frame point is
// R * (p_world + t); unprojection is therefore p = d * R^-1 * K^-1 * [i j 1]^T - t
// with d the planar (camera z) depth. Camera axes: x right, y down, z forward.
#ifndef SEMMAP_GEOMETRY_HPP_
#define SEMMAP_GEOMETRY_HPP_

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "semmap/core.hpp"

namespace semmap {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct CameraIntrinsics {
  double fx = 320.0;
  double fy = 320.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  /// Square pixels, principal point at the image center.
  static CameraIntrinsics from_hfov(int width, int height, double hfov_rad) {
    CameraIntrinsics k;
    k.width = width;
    k.height = height;
    k.fx = k.fy = (width / 2.0) / std::tan(hfov_rad / 2.0);
    k.cx = width / 2.0;
    k.cy = height / 2.0;
    return k;
  }

  /// Intrinsics of an image sampled at every `factor`-th pixel (top-left sample).
  CameraIntrinsics downsampled(int factor) const {
    CameraIntrinsics k = *this;
    k.fx /= factor;
    k.fy /= factor;
    k.cx /= factor;
    k.cy /= factor;
    k.width /= factor;
    k.height /= factor;
    return k;
  }

  bool valid() const {
    return fx > 0 && fy > 0 && width >= 1 && height >= 1 && cx >= 0 && cx < width &&
           cy >= 0 && cy < height;
  }
};

struct Pose {
  Mat3 rotation = Mat3::Identity();  // world -> camera
  Vec3 translation = Vec3::Zero();

  /// Camera center in world coordinates.
  Vec3 position() const { return -translation; }

  /// Level camera at (x, camera_y, z) looking along (sin yaw, 0, cos yaw).
  static Pose from_agent(double x, double z, double yaw, double camera_y) {
    const double s = std::sin(yaw);
    const double c = std::cos(yaw);
    Pose p;
    p.rotation << -c, 0.0, s,  //
        0.0, -1.0, 0.0,        //
        s, 0.0, c;
    p.translation = Vec3(-x, -camera_y, -z);
    return p;
  }

  bool valid(double tol = 1e-9) const {
    return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }

  /// Pose seen after moving the world by the rigid motion x -> m_rot * x + m_trans.
  Pose transformed(const Mat3& m_rot, const Vec3& m_trans) const {
    // camera point R (p + t) with p = m_rot^T (p' - m_trans)
    Pose out;
    out.rotation = rotation * m_rot.transpose();
    out.translation = m_rot * translation - m_trans;
    return out;
  }
};

using WorldPoint = Vec3;

struct GridSpec {
  double origin_x = 0.0;
  double origin_z = 0.0;
  double resolution = 0.02;
  int u_size = 0;
  int v_size = 0;

  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < u_size && v < v_size; }
  std::size_t cell_count() const { return static_cast<std::size_t>(u_size) * v_size; }
  double center_x(int u) const { return origin_x + (u + 0.5) * resolution; }
  double center_z(int v) const { return origin_z + (v + 0.5) * resolution; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct PixelProjection {
  double i = 0.0;
  double j = 0.0;
  double depth = 0.0;
};

/// Planar depth image; 0 means no return.
using DepthImage = Raster<float>;

inline WorldPoint unproject_pixel(const CameraIntrinsics& k, const Pose& pose, double i, double j,
                                  double d) {
  if (!(d > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "depth must be positive");
  if (i < 0 || j < 0 || i > k.width - 1 || j > k.height - 1)
    throw Error(ErrorCode::PixelOutOfBounds, "pixel outside image");
  const Vec3 cam(d * (i - k.cx) / k.fx, d * (j - k.cy) / k.fy, d);
  return pose.rotation.transpose() * cam - pose.translation;
}

inline PixelProjection project_point(const CameraIntrinsics& k, const Pose& pose,
                                     const WorldPoint& p) {
  const Vec3 cam = pose.rotation * (p + pose.translation);
  if (!(cam.z() > 0.0)) throw Error(ErrorCode::BehindCamera, "point behind camera");
  return {k.fx * cam.x() / cam.z() + k.cx, k.fy * cam.y() / cam.z() + k.cy, cam.z()};
}

/// Orthographic top-down projection: drops y, floors (x, z) into grid cells.
inline bool try_world_to_cell(const GridSpec& g, double x, double z, Cell& out) {
  const double fu = std::floor((x - g.origin_x) / g.resolution);
  const double fv = std::floor((z - g.origin_z) / g.resolution);
  if (!(fu >= 0 && fv >= 0 && fu < g.u_size && fv < g.v_size)) return false;
  out = {static_cast<int>(fu), static_cast<int>(fv)};
  return true;
}

inline Cell world_to_cell(const GridSpec& g, const WorldPoint& p) {
  Cell c;
  if (!try_world_to_cell(g, p.x(), p.z(), c))
    throw Error(ErrorCode::CellOutOfGrid, "point projects outside the grid");
  return c;
}

/// Points more than this far above the camera are ceiling and are discarded.
inline constexpr double kCeilingMargin = 0.50;

/// Cells receiving at least one valid projected pixel, sorted row-major.
inline std::vector<Cell> frame_footprint(const CameraIntrinsics& k, const Pose& pose,
                                         const DepthImage& depth, const GridSpec& g) {
  if (depth.width() != k.width || depth.height() != k.height)
    throw Error(ErrorCode::InvalidArgument, "depth frame does not match intrinsics");
  const double ceiling = pose.position().y() + kCeilingMargin;
  std::vector<std::uint8_t> hit(g.cell_count(), 0);
  for (int j = 0; j < depth.height(); ++j) {
    for (int i = 0; i < depth.width(); ++i) {
      const double d = depth(i, j);
      if (!(d > 0.0)) continue;
      const WorldPoint p = unproject_pixel(k, pose, i, j, d);
      if (p.y() > ceiling) continue;
      Cell c;
      if (try_world_to_cell(g, p.x(), p.z(), c))
        hit[static_cast<std::size_t>(c.v) * g.u_size + c.u] = 1;
    }
  }
  std::vector<Cell> cells;
  for (int v = 0; v < g.v_size; ++v)
    for (int u = 0; u < g.u_size; ++u)
      if (hit[static_cast<std::size_t>(v) * g.u_size + u]) cells.push_back({u, v});
  return cells;
}

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace semmap

#endif  // SEMMAP_GEOMETRY_HPP_
