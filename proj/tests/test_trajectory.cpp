#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"

using namespace semmap;
using namespace semmap::testing;

TEST(Actions, LegalTransitions) {
  const AgentState a{1.0, 1.0, 0.0};
  EXPECT_TRUE(is_legal_transition(a, {1.0, 1.1, 0.0}));
  EXPECT_TRUE(is_legal_transition(a, {1.0, 1.0, deg_to_rad(9)}));
  EXPECT_TRUE(is_legal_transition(a, {1.0, 1.0, deg_to_rad(-9)}));
  EXPECT_TRUE(is_legal_transition({1, 1, deg_to_rad(355.5)}, {1, 1, deg_to_rad(4.5)}));
  EXPECT_FALSE(is_legal_transition(a, {1.0, 1.2, 0.0}));
  EXPECT_FALSE(is_legal_transition(a, {1.1, 1.0, 0.0}));
  EXPECT_FALSE(is_legal_transition(a, {1.0, 1.0, deg_to_rad(18)}));
  EXPECT_FALSE(is_legal_transition(a, a));
  const AgentState east{0, 0, deg_to_rad(90)};
  EXPECT_TRUE(is_legal_transition(east, {0.1, 0, deg_to_rad(90)}));
}

TEST(Coverage, SingleCellRegionGivesScanInPlace) {
  const SceneModel s = box_scene({}, {0.0, 0.0, 0.3, 0.3});
  const Trajectory t = coverage_trajectory(s, 1);
  ASSERT_EQ(t.states.size(), 41u);
  for (const AgentState& st : t.states) {
    EXPECT_DOUBLE_EQ(st.x, 0.15);
    EXPECT_DOUBLE_EQ(st.z, 0.15);
  }
  EXPECT_TRUE(validate_trajectory(t));
}

TEST(Coverage, NoFreeSpace) {
  const SceneModel s = box_scene({}, {0.0, 0.0, 0.1, 0.1});
  try {
    coverage_trajectory(s, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoFreeSpace);
  }
}

TEST(Coverage, EmptyRoomCoveredWithinOneMeter) {
  const SceneModel s = box_scene({});
  const GridSpec g = s.grid();
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const Trajectory t = coverage_trajectory(s, seed);
    ASSERT_TRUE(validate_trajectory(t));
    BinaryRaster visited(g.u_size, g.v_size, 0);
    for (const AgentState& st : t.states) visited(world_to_cell(g, {st.x, 0, st.z}).u, world_to_cell(g, {st.x, 0, st.z}).v) = 1;
    const Raster<double> d = distance_transform_sq(visited);
    const double limit = 1.0 / g.resolution;
    for (std::size_t i = 0; i < d.size(); ++i) ASSERT_LE(d[i], limit * limit);
  }
}

TEST(Coverage, LegalAndCollisionFreeOnGeneratedScenes) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const SceneModel s = generate_scene(seed);
    const GridSpec g = s.grid();
    const BinaryRaster free = ground_truth_freespace(s, g);
    const Trajectory t = coverage_trajectory(s, seed);
    ASSERT_TRUE(validate_trajectory(t));
    ASSERT_GT(t.states.size(), 41u);
    for (const AgentState& st : t.states) ASSERT_TRUE(disk_fits(free, g, st.x, st.z, kAgentRadius));
    for (std::size_t k = 1; k < t.states.size(); ++k) {
      const AgentState& a = t.states[k - 1];
      const AgentState& b = t.states[k];
      ASSERT_TRUE(swept_disk_clear(free, g, a.x, a.z, b.x, b.z, kAgentRadius));
    }
  }
}

TEST(TrajectoryFile, RoundTripAndErrors) {
  const Trajectory t = coverage_trajectory(generate_scene(3), 3);
  std::stringstream ss;
  write_trajectory(ss, t);
  const Trajectory r = read_trajectory(ss);
  ASSERT_EQ(r.states.size(), t.states.size());
  EXPECT_EQ(r.camera_height, t.camera_height);
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    EXPECT_EQ(r.states[k].x, t.states[k].x);
    EXPECT_EQ(r.states[k].z, t.states[k].z);
    EXPECT_NEAR(r.states[k].yaw, t.states[k].yaw, 1e-12);
  }
  EXPECT_TRUE(validate_trajectory(r));
  std::istringstream bad("SMAPTRAJ 2\n");
  EXPECT_THROW(read_trajectory(bad), Error);
  std::istringstream junk("SMAPTRAJ 1\ncamera_height 1.25\nstep 0 a 0 0\n");
  EXPECT_THROW(read_trajectory(junk), Error);
}
