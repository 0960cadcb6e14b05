#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "support.hpp"

using namespace semmap;
using namespace semmap::testing;

namespace {

// Level camera at the origin looking +z; pixel (i, j) at depth d lands at
// x = -d (i - cx) / fx, y = h - d (j - cy) / fy, z = d.
EgoFrame blank_frame(int w, int h, double f, double cam_y) {
  EgoFrame fr;
  fr.intrinsics = {f, f, w / 2.0, h / 2.0, w, h};
  fr.depth = DepthImage(w, h, 0.0f);
  fr.labels = LabelRaster(w, h, 0);
  fr.instances = Raster<std::uint16_t>(w, h, 0);
  fr.pose = Pose::from_agent(0, 0, 0, cam_y);
  fr.camera_y = cam_y;
  return fr;
}

bool same_projection(const ProjectedFrame& a, const ProjectedFrame& b) {
  if (!(a.grid == b.grid) || a.observations.size() != b.observations.size()) return false;
  for (std::size_t k = 0; k < a.observations.size(); ++k) {
    const auto& x = a.observations[k];
    const auto& y = b.observations[k];
    if (x.cell != y.cell || x.class_id != y.class_id || x.height != y.height || x.pixel_i != y.pixel_i ||
        x.pixel_j != y.pixel_j)
      return false;
  }
  return true;
}

ProjectedFrame random_obs(Rng& rng, const GridSpec& g, double density) {
  ProjectedFrame pf{g, {}};
  for (int v = 0; v < g.v_size; ++v)
    for (int u = 0; u < g.u_size; ++u)
      if (rng.uniform() < density)
        pf.observations.push_back({{u, v}, static_cast<ClassId>(rng.uniform_int(0, 12)), rng.uniform(0, 2), 0, 0});
  return pf;
}

}  // namespace

TEST(ProjectFrame, MaxHeightSurvives) {
  EgoFrame f = blank_frame(9, 9, 4.0, 1.0);
  // same column, same depth: same (x, z), heights 1 - 2 * (j - 4.5) / 4
  f.depth(4, 6) = 2.0f;  // y = 0.25
  f.labels(4, 6) = 3;
  f.depth(4, 5) = 2.0f;  // y = 0.75
  f.labels(4, 5) = 2;
  const ProjectedFrame pf = project_frame(f, {-1.0, 0.0, 0.5, 4, 8});
  ASSERT_EQ(pf.observations.size(), 1u);
  EXPECT_EQ(pf.observations[0].class_id, 2);
  EXPECT_NEAR(pf.observations[0].height, 0.75, 1e-12);
  EXPECT_EQ(pf.observations[0].pixel_j, 5);
}

TEST(ProjectFrame, CeilingCutoffAndInvalidPixels) {
  EgoFrame f = blank_frame(9, 9, 4.0, 1.0);
  // j = 0: y = 1 + 4.5 d / 4; d = 0.5333 -> y = 1.6 > 1.5
  f.depth(4, 0) = static_cast<float>(0.6 * 4 / 4.5);
  f.labels(4, 0) = 5;
  EXPECT_TRUE(project_frame(f, {-2, 0, 0.02, 200, 200}).observations.empty());
  f.depth(4, 0) = static_cast<float>(0.4 * 4 / 4.5);  // y = 1.4 kept
  EXPECT_EQ(project_frame(f, {-2, 0, 0.02, 200, 200}).observations.size(), 1u);
  // outside the grid
  EXPECT_TRUE(project_frame(f, {5, 5, 0.02, 10, 10}).observations.empty());
}

TEST(ProjectFrame, FloorFrameMatchesGroupingOracle) {
  const SceneModel s = generate_scene(4);
  const GridSpec g = s.grid();
  const CameraIntrinsics k = CameraIntrinsics{}.downsampled(2);
  const EgoFrame f = raycast_frame(s, k, Pose::from_agent(2.5, 2.5, 0.7, 1.25), 1.25);
  const ProjectedFrame pf = project_frame(f, g);
  struct Best {
    double y;
    std::size_t pixel;
    ClassId c;
  };
  std::map<std::size_t, Best> oracle;
  for (int j = 0; j < k.height; ++j)
    for (int i = 0; i < k.width; ++i) {
      const double d = f.depth(i, j);
      if (!(d > 0)) continue;
      const Vec3 p = unproject_pixel(k, f.pose, i, j, d);
      if (p.y() > 1.25 + 0.5) continue;
      Cell c;
      if (!try_world_to_cell(g, p.x(), p.z(), c)) continue;
      const std::size_t idx = static_cast<std::size_t>(c.v) * g.u_size + c.u;
      const std::size_t pix = f.depth.index(i, j);
      auto it = oracle.find(idx);
      if (it == oracle.end() || p.y() > it->second.y || (p.y() == it->second.y && pix < it->second.pixel))
        oracle[idx] = {p.y(), pix, f.labels(i, j)};
    }
  ASSERT_EQ(pf.observations.size(), oracle.size());
  std::size_t k2 = 0;
  for (const auto& [idx, b] : oracle) {
    const ProjectedObservation& o = pf.observations[k2++];
    ASSERT_EQ(static_cast<std::size_t>(o.cell.v) * g.u_size + o.cell.u, idx);
    ASSERT_NEAR(o.height, b.y, 1e-9);
    ASSERT_EQ(o.class_id, b.c);
  }
}

TEST(ProjectFrame, PixelOrderIndependent) {
  const SceneModel s = generate_scene(5);
  const GridSpec g = s.grid(0.05);
  const CameraIntrinsics k = CameraIntrinsics{}.downsampled(4);
  Rng rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    const EgoFrame f =
        raycast_frame(s, k, Pose::from_agent(rng.uniform(1, 4), rng.uniform(1, 4), rng.uniform(0, 6.28), 1.25), 1.25);
    std::vector<int> order(k.width * k.height);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t n = order.size() - 1; n > 0; --n)
      std::swap(order[n], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(n)))]);
    const ProjectedFrame shuffled = detail::project_pixels(f, g, [&](auto&& visit) {
      for (int p : order) visit(p % k.width, p / k.width);
    });
    ASSERT_TRUE(same_projection(shuffled, project_frame(f, g)));
  }
}

TEST(ProjectFrame, RelabelEqualsProjectingNewLabels) {
  const SceneModel s = generate_scene(6);
  const GridSpec g = s.grid();
  EgoFrame f = raycast_frame(s, CameraIntrinsics{}.downsampled(4), Pose::from_agent(2.5, 2.5, 2.0, 1.25), 1.25);
  Rng rng(6);
  const LabelRaster other = random_labels(rng, f.labels.width(), f.labels.height(), 13);
  const ProjectedFrame re = relabel(project_frame(f, g), other);
  f.labels = other;
  EXPECT_TRUE(same_projection(re, project_frame(f, g)));
}

TEST(UpdateMemory, EmptyObservationLeavesMemoryUnchanged) {
  const GridSpec g = small_grid(6, 5);
  Rng rng(1);
  SpatialMemory m(g);
  m.update(random_obs(rng, g, 0.5), MajorityVote{});
  SpatialMemory after = m;
  after.update(ProjectedFrame{g, {}}, MajorityVote{});
  EXPECT_EQ(after.all_scores(), m.all_scores());
  EXPECT_EQ(after.heights(), m.heights());
  EXPECT_EQ(after.observed(), m.observed());
}

TEST(UpdateMemory, AggregatorExamples) {
  const GridSpec g = small_grid(1, 1);
  auto obs = [&](ClassId c, double h) { return ProjectedFrame{g, {{{0, 0}, c, h, 0, 0}}}; };
  SpatialMemory mv(g);
  for (auto [c, h] : {std::pair{1, 0.5}, {1, 0.5}, {2, 0.7}}) mv.update(obs(c, h), MajorityVote{});
  EXPECT_EQ(mv.scores(0, 0)[1], 2.0);
  EXPECT_EQ(mv.scores(0, 0)[2], 1.0);
  EXPECT_EQ(decode_map(mv).labels(0, 0), 1);

  SpatialMemory mh(g);
  mh.update(obs(2, 0.4), MaxHeight{});
  mh.update(obs(3, 0.3), MaxHeight{});
  EXPECT_EQ(decode_map(mh).labels(0, 0), 2);
  mh.update(obs(4, 0.9), MaxHeight{});
  EXPECT_EQ(decode_map(mh).labels(0, 0), 4);
  EXPECT_FLOAT_EQ(mh.heights()(0, 0), 0.9f);

  SpatialMemory lw(g);
  lw.update(obs(5, 0.9), LatestWins{});
  lw.update(obs(6, 0.1), LatestWins{});
  EXPECT_EQ(decode_map(lw).labels(0, 0), 6);
  EXPECT_FLOAT_EQ(lw.heights()(0, 0), 0.9f);

  SpatialMemory ema(g);
  ema.update(obs(1, 0), Ema{0.3});
  ema.update(obs(2, 0), Ema{0.3});
  EXPECT_NEAR(ema.scores(0, 0)[1], 0.21, 1e-12);
  EXPECT_NEAR(ema.scores(0, 0)[2], 0.3, 1e-12);
  EXPECT_EQ(decode_map(ema).labels(0, 0), 2);
  EXPECT_EQ(ema.frame_counter(), 2u);
}

TEST(UpdateMemory, GridMismatch) {
  SpatialMemory m(small_grid(4, 4));
  try {
    m.update(ProjectedFrame{small_grid(4, 5), {}}, LatestWins{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
  }
}

TEST(UpdateMemory, ParseAggregator) {
  EXPECT_EQ(aggregator_name(parse_aggregator("ema", 0.5)), "ema");
  EXPECT_EQ(std::get<Ema>(parse_aggregator("ema", 0.5)).alpha, 0.5);
  EXPECT_EQ(aggregator_name(parse_aggregator("max_height")), "max_height");
  EXPECT_THROW(parse_aggregator("gru"), Error);
}

TEST(UpdateMemory, LocalityAndMonotoneHeights) {
  const GridSpec g = small_grid(12, 9);
  Rng rng(2);
  for (const Aggregator& agg : {Aggregator{LatestWins{}}, Aggregator{MaxHeight{}}, Aggregator{MajorityVote{}},
                                Aggregator{Ema{0.3}}}) {
    SpatialMemory m(g);
    for (int t = 0; t < 30; ++t) {
      const ProjectedFrame pf = random_obs(rng, g, 0.3);
      const SpatialMemory before = m;
      m.update(pf, agg);
      BinaryRaster touched(g.u_size, g.v_size, 0);
      for (const auto& o : pf.observations) touched(o.cell.u, o.cell.v) = 1;
      for (int v = 0; v < g.v_size; ++v)
        for (int u = 0; u < g.u_size; ++u) {
          if (!touched(u, v)) {
            ASSERT_EQ(m.scores(u, v), before.scores(u, v));
            ASSERT_EQ(m.observed()(u, v), before.observed()(u, v));
            ASSERT_EQ(m.heights()(u, v), before.heights()(u, v));
          } else {
            ASSERT_EQ(m.observed()(u, v), 1);
            if (before.observed()(u, v)) {
              ASSERT_GE(m.heights()(u, v), before.heights()(u, v));
            }
          }
        }
    }
  }
}

TEST(UpdateMemory, MajorityDecodeInvariantUnderDuplication) {
  const GridSpec g = small_grid(10, 10);
  Rng rng(3);
  std::vector<ProjectedFrame> history;
  for (int t = 0; t < 7; ++t) history.push_back(random_obs(rng, g, 0.4));
  SpatialMemory once(g), thrice(g);
  for (const auto& pf : history) once.update(pf, MajorityVote{});
  for (int rep = 0; rep < 3; ++rep)
    for (const auto& pf : history) thrice.update(pf, MajorityVote{});
  EXPECT_EQ(decode_map(once), decode_map(thrice));
  EXPECT_EQ(decode_map(once, Smoothing::box_vote(3)), decode_map(thrice, Smoothing::box_vote(3)));
}

TEST(DecodeMap, UnobservedIsVoidAndTiesGoLow) {
  const GridSpec g = small_grid(4, 4);
  SpatialMemory m(g);
  EXPECT_EQ(decode_map(m), SemanticMap(g));
  EXPECT_EQ(decode_map(m, Smoothing::box_vote(3)), SemanticMap(g));
  m.update(ProjectedFrame{g, {{{1, 1}, 7, 0.1, 0, 0}}}, MajorityVote{});
  m.update(ProjectedFrame{g, {{{1, 1}, 4, 0.1, 0, 0}}}, MajorityVote{});
  EXPECT_EQ(decode_map(m).labels(1, 1), 4);
  EXPECT_EQ(decode_map(m).labels(2, 2), 0);
  EXPECT_THROW(decode_map(m, Smoothing::box_vote(0)), Error);
}

TEST(DecodeMap, BoxVoteMatchesWindowSumOracle) {
  const GridSpec g = small_grid(16, 16);
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    SpatialMemory m(g);
    for (int t = 0; t < 5; ++t) m.update(random_obs(rng, g, 0.5), MajorityVote{});
    for (int k : {2, 3, 5}) {
      const SemanticMap got = decode_map(m, Smoothing::box_vote(k));
      for (int v = 0; v < 16; ++v)
        for (int u = 0; u < 16; ++u) {
          if (!m.observed()(u, v)) {
            ASSERT_EQ(got.labels(u, v), 0);
            continue;
          }
          CellScores sum{};
          for (int dv = -(k / 2); dv <= k - 1 - k / 2; ++dv)
            for (int du = -(k / 2); du <= k - 1 - k / 2; ++du) {
              const int uu = u + du, vv = v + dv;
              if (!g.contains(uu, vv) || !m.observed()(uu, vv)) continue;
              const CellScores& s = m.scores(uu, vv);
              const double total = std::accumulate(s.begin(), s.end(), 0.0);
              for (int c = 0; c < kNumClasses; ++c) sum[c] += s[c] / total;
            }
          ASSERT_EQ(got.labels(u, v), argmax_class(sum)) << u << ',' << v << " k=" << k;
        }
    }
  }
}

TEST(DecodeMap, NormalizedScores) {
  CellScores s{};
  EXPECT_EQ(normalized(s), s);
  s[2] = 3;
  s[5] = 1;
  const CellScores n = normalized(s);
  EXPECT_DOUBLE_EQ(n[2], 0.75);
  EXPECT_DOUBLE_EQ(n[5], 0.25);
}
