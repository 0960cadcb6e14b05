#include <gtest/gtest.h>

#include <limits>

#include "support.hpp"

using namespace semmap;
using namespace semmap::testing;

namespace {

// Plain slab test against every primitive, no culling.
struct Hit {
  double s = std::numeric_limits<double>::infinity();
  ClassId label = 0;
};

Hit naive_cast(const SceneModel& scene, const Vec3& o, const Vec3& d) {
  Hit best;
  if (d.y() < 0) best.s = -o.y() / d.y();
  int best_id = 0;
  for (const Box& b : scene.boxes) {
    const double lo[3] = {b.aabb.xmin, b.aabb.ymin, b.aabb.zmin}, hi[3] = {b.aabb.xmax, b.aabb.ymax, b.aabb.zmax};
    double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
    bool miss = false;
    for (int a = 0; a < 3; ++a) {
      if (d[a] == 0.0) {
        if (o[a] < lo[a] || o[a] > hi[a]) miss = true;
        continue;
      }
      double ta = (lo[a] - o[a]) / d[a], tb = (hi[a] - o[a]) / d[a];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
    }
    if (miss || t0 > t1 || !(t0 > 0)) continue;
    if (t0 < best.s || (t0 == best.s && b.instance_id < best_id)) {
      best.s = t0;
      best.label = b.class_id;
      best_id = b.instance_id;
    }
  }
  if (best_id == 0) best.label = 0;
  return best;
}

}  // namespace

TEST(Raycast, CenterPixelHitsBox) {
  const SceneModel s = box_scene({{4, 1, {-0.5, 0.0, 1.0, 0.5, 2.0, 2.0}}}, {-5, -5, 5, 5});
  const CameraIntrinsics k;
  const EgoFrame f = raycast_frame(s, k, Pose::from_agent(0, 0, 0, 1.25), 1.25);
  EXPECT_NEAR(f.depth(320, 240), 1.0, 1e-9);
  EXPECT_EQ(f.labels(320, 240), 4);
  EXPECT_EQ(f.instances(320, 240), 1);
}

TEST(Raycast, OpenSpaceIsInvalid) {
  const SceneModel s = box_scene({});
  const EgoFrame f = raycast_frame(s, CameraIntrinsics{}, Pose::from_agent(0, 0, 0, 1.25), 1.25);
  EXPECT_EQ(f.depth(320, 240), 0.0f);
  EXPECT_EQ(f.depth(320, 0), 0.0f);  // looking up
  // floor rows below the horizon: planar depth = h * fy / (j - cy)
  EXPECT_NEAR(f.depth(320, 479), 1.25 * 320 / 239.0, 1e-5);
  EXPECT_EQ(f.labels(320, 479), 0);
  // floor beyond 10 m is dropped: j - cy < 40
  EXPECT_EQ(f.depth(320, 279), 0.0f);
  EXPECT_GT(f.depth(320, 281), 0.0f);
}

TEST(Raycast, MatchesNaiveOracle) {
  const CameraIntrinsics k = CameraIntrinsics{}.downsampled(4);
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const SceneModel s = generate_scene(seed);
    Rng rng(seed);
    for (int rep = 0; rep < 4; ++rep) {
      const double x = rng.uniform(0.5, 4.5), z = rng.uniform(0.5, 4.5), yaw = rng.uniform(0, 6.283);
      const Pose pose = Pose::from_agent(x, z, yaw, 1.25);
      const EgoFrame f = raycast_frame(s, k, pose, 1.25);
      const Mat3 rt = pose.rotation.transpose();
      for (int j = 0; j < k.height; ++j)
        for (int i = 0; i < k.width; ++i) {
          const Vec3 d = rt * Vec3((i - k.cx) / k.fx, (j - k.cy) / k.fy, 1.0);
          const Hit h = naive_cast(s, pose.position(), d);
          const double expect = h.s <= kDefaultMaxRange ? h.s : 0.0;
          ASSERT_NEAR(f.depth(i, j), expect, 1e-6 * std::max(1.0, expect)) << i << ',' << j;
          ASSERT_EQ(f.labels(i, j), expect > 0 ? h.label : 0) << i << ',' << j;
        }
      // cast_ray agrees too
      const Vec3 d = rt * Vec3(0.1, 0.3, 1.0);
      EXPECT_NEAR(cast_ray(s, pose.position(), d).depth, naive_cast(s, pose.position(), d).s, 1e-9);
    }
  }
}

TEST(Raycast, ShrinkingBoxNeverDecreasesDepth) {
  const CameraIntrinsics k = CameraIntrinsics{}.downsampled(4);
  auto as_range = [](float d) { return d > 0 ? double(d) : std::numeric_limits<double>::infinity(); };
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    SceneModel s = generate_scene(20 + rep);
    const Pose pose = Pose::from_agent(2.5, 2.5, rng.uniform(0, 6.283), 1.25);
    const EgoFrame before = raycast_frame(s, k, pose, 1.25);
    for (Box& b : s.boxes) {
      b.aabb.ymax *= 0.7;
      b.aabb.xmin += 0.05;
      b.aabb.zmax -= 0.05;
    }
    const EgoFrame after = raycast_frame(s, k, pose, 1.25);
    for (std::size_t p = 0; p < before.depth.size(); ++p)
      ASSERT_GE(as_range(after.depth[p]), as_range(before.depth[p]) - 1e-6);
  }
}

TEST(Raycast, LabelsVoidWhereDepthInvalid) {
  const SceneModel s = generate_scene(6);
  const EgoFrame f = raycast_frame(s, CameraIntrinsics{}, Pose::from_agent(2.5, 2.5, 1.0, 1.25), 1.25);
  for (std::size_t p = 0; p < f.depth.size(); ++p)
    if (f.depth[p] == 0.0f) {
      ASSERT_EQ(f.labels[p], 0);
    }
}
