#include <gtest/gtest.h>

#include "support.hpp"

using namespace semmap;
using namespace semmap::testing;

namespace {

EgoFrame label_frame(const LabelRaster& labels) {
  EgoFrame f;
  f.intrinsics = {1, 1, 0, 0, labels.width(), labels.height()};
  f.depth = DepthImage(labels.width(), labels.height(), 1.0f);
  f.labels = labels;
  f.instances = Raster<std::uint16_t>(labels.width(), labels.height(), 0);
  return f;
}

RenderSettings coarse_render(int stride) {
  RenderSettings r;
  r.frame_stride = stride;
  return r;
}

}  // namespace

TEST(Noise, IdentityCases) {
  Rng rng(1);
  const EgoFrame f = label_frame(random_blobs(rng, 64, 48, 10, 13));
  EXPECT_EQ(corrupt_labels(f, NoiseModel::none(), 3).labels, f.labels);
  NoiseModel p_only{2, 0.9, 0.0, 5};
  const EgoFrame flat = label_frame(LabelRaster(64, 48, 4));
  EXPECT_EQ(corrupt_labels(flat, p_only, 0).labels, flat.labels);
  // zero band: no boundary pixels
  EXPECT_EQ(corrupt_labels(f, NoiseModel{0, 1.0, 0.0, 5}, 0).labels, f.labels);
}

TEST(Noise, UniformFlipRate) {
  const EgoFrame f = label_frame(LabelRaster(1000, 1000, 6));
  const EgoFrame c = corrupt_labels(f, NoiseModel{2, 0.0, 0.1, 11}, 0);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < c.labels.size(); ++i) changed += c.labels[i] != 6;
  EXPECT_NEAR(double(changed) / 1e6, 0.1 * 12.0 / 13.0, 0.001);
}

TEST(Noise, BoundaryFlipsStayInBandAndUseNeighbourLabels) {
  Rng rng(2);
  const EgoFrame f = label_frame(random_blobs(rng, 80, 60, 12, 13));
  const int r = 2;
  const EgoFrame c = corrupt_labels(f, NoiseModel{r, 1.0, 0.0, 9}, 4);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 80; ++x) {
      bool near = false, offered = false;
      for (int yy = std::max(0, y - r); yy <= std::min(59, y + r); ++yy)
        for (int xx = std::max(0, x - r); xx <= std::min(79, x + r); ++xx) {
          near = near || f.labels(xx, yy) != f.labels(x, y);
          offered = offered || (f.labels(xx, yy) == c.labels(x, y) && c.labels(x, y) != f.labels(x, y));
        }
      if (!near) {
        ASSERT_EQ(c.labels(x, y), f.labels(x, y));
      } else {
        ASSERT_TRUE(offered) << "p = 1 flips every band pixel to a window label";
      }
    }
}

TEST(Noise, DeterministicPerFrameAndSkipsInvalidDepth) {
  Rng rng(3);
  EgoFrame f = label_frame(random_blobs(rng, 50, 40, 8, 13));
  for (int x = 0; x < 50; ++x) {
    f.depth(x, 0) = 0.0f;
    f.labels(x, 0) = 0;
  }
  const NoiseModel nm;
  EXPECT_EQ(corrupt_labels(f, nm, 7).labels, corrupt_labels(f, nm, 7).labels);
  EXPECT_NE(corrupt_labels(f, nm, 7).labels, corrupt_labels(f, nm, 8).labels);
  NoiseModel other = nm;
  other.seed = 8;
  EXPECT_NE(corrupt_labels(f, nm, 7).labels, corrupt_labels(f, other, 7).labels);
  const EgoFrame c = corrupt_labels(f, NoiseModel{2, 0.5, 0.5, 1}, 0);
  for (int x = 0; x < 50; ++x) EXPECT_EQ(c.labels(x, 0), 0);
}

TEST(ErodeLabels, MatchesPerClassErosion) {
  Rng rng(4);
  for (int rep = 0; rep < 40; ++rep) {
    const LabelRaster l = random_blobs(rng, 30, 22, 8, 13);
    for (int s : {1, 2, 3, 4, 10}) {
      LabelRaster expect(30, 22, 0);
      for (int c = 0; c < kNumClasses; ++c) {
        BinaryRaster m(30, 22, 0);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = l[i] == c;
        const BinaryRaster e = erode(m, s);
        for (std::size_t i = 0; i < m.size(); ++i)
          if (e[i]) expect[i] = static_cast<ClassId>(c);
      }
      ASSERT_EQ(erode_labels(l, s), expect) << s;
    }
  }
  EXPECT_THROW(erode_labels(LabelRaster(3, 3), 0), Error);
}

TEST(DownsampleFrame, IntrinsicsAndRasters) {
  const SceneModel s = generate_scene(1);
  const EgoFrame f = raycast_frame(s, CameraIntrinsics{}, Pose::from_agent(2.5, 2.5, 0.3, 1.25), 1.25);
  const EgoFrame d = downsample_frame(f, 4);
  EXPECT_EQ(d.intrinsics.width, 160);
  EXPECT_EQ(d.intrinsics.height, 120);
  EXPECT_EQ(d.intrinsics.fx, 80.0);
  EXPECT_EQ(d.depth(10, 20), f.depth(40, 80));
  EXPECT_EQ(d.labels(10, 20), f.labels(40, 80));
}

TEST(Pipelines, ReductionIdentity) {
  const SceneModel s = generate_scene(12);
  const Trajectory t = coverage_trajectory(s, 12);
  PipelineConfig sm;
  sm.kind = PipelineKind::SMNet;
  sm.aggregator = LatestWins{};
  sm.smoothing = Smoothing::none();
  PipelineConfig sp;
  sp.kind = PipelineKind::Seg2Proj;
  sp.seg2proj = Seg2ProjOptions::plain();
  auto a = make_builder(sm, s.grid());
  auto b = make_builder(sp, s.grid());
  MapBuilder* const list[] = {a.get(), b.get()};
  run_trajectory(s, t, coarse_render(7), list);
  const PipelineResult ra = a->finish(), rb = b->finish();
  EXPECT_EQ(ra.map, rb.map);
  EXPECT_EQ(ra.observed, rb.observed);
  EXPECT_EQ(ra.heights, rb.heights);
}

TEST(Pipelines, SharedFramesMatchSeparateRuns) {
  const SceneModel s = generate_scene(13);
  const Trajectory t = coverage_trajectory(s, 13);
  PipelineConfig sm;
  PipelineConfig sp;
  sp.kind = PipelineKind::Seg2Proj;
  auto a = make_builder(sm, s.grid());
  auto b = make_builder(sp, s.grid());
  MapBuilder* const list[] = {a.get(), b.get()};
  run_trajectory(s, t, coarse_render(9), list);
  EXPECT_EQ(a->finish().map, run_pipeline(s, t, s.grid(), sm, coarse_render(9)).map);
  EXPECT_EQ(b->finish().map, run_pipeline(s, t, s.grid(), sp, coarse_render(9)).map);
}

TEST(Pipelines, VoidExactlyOffObservedAndNoiselessAgreement) {
  const SceneModel s = generate_scene(14);
  const Trajectory t = coverage_trajectory(s, 14);
  const GridSpec g = s.grid();
  PipelineConfig sm;
  sm.noise = NoiseModel::none();
  PipelineConfig sp = sm;
  sp.kind = PipelineKind::Seg2Proj;
  sp.seg2proj = Seg2ProjOptions::plain();
  const PipelineResult a = run_pipeline(s, t, g, sm, coarse_render(7));
  const PipelineResult b = run_pipeline(s, t, g, sp, coarse_render(7));
  for (const PipelineResult* r : {&a, &b})
    for (std::size_t i = 0; i < r->observed.size(); ++i)
      if (!r->observed[i]) {
        ASSERT_EQ(r->map.labels[i], 0);
      }
  const SegReport diff = eval_segmentation(a.map, b.map, a.observed);
  for (int c = 1; c < kNumClasses; ++c)
    if (diff.per_class[c].in_gt) {
      EXPECT_GE(diff.per_class[c].iou, 0.98) << kClassNames[c];
    }
  // and both close to ground truth
  const SemanticMap gt = ground_truth_map(s, g);
  EXPECT_GE(eval_segmentation(a.map, gt, a.observed).mean_iou, 0.95);
}

TEST(Pipelines, SingleFrameSingleCell) {
  const GridSpec g{-1.0, 0.0, 0.5, 4, 8};
  EgoFrame f;
  f.intrinsics = {4, 4, 4.5, 4.5, 9, 9};
  f.depth = DepthImage(9, 9, 0.0f);
  f.labels = LabelRaster(9, 9, 0);
  f.instances = Raster<std::uint16_t>(9, 9, 0);
  f.pose = Pose::from_agent(0, 0, 0, 1.0);
  f.camera_y = 1.0;
  f.depth(4, 6) = 2.0f;
  f.labels(4, 6) = 8;
  SMNetBuilder b(g, MajorityVote{}, Smoothing::box_vote(3), NoiseModel::none());
  b.integrate(f, 0);
  const PipelineResult r = b.finish();
  EXPECT_EQ(count_set(r.observed), 1u);
  EXPECT_EQ(r.map.labels(2, 4), 8);  // x = 0.125, z = 2
}

TEST(Proj2Seg, LabelerSeparatesByHeight) {
  // bed and cushion with equal footprints, different tops
  const SceneModel s = box_scene({{9, 1, {0.5, 0, 0.5, 1.5, 0.62, 1.5}}, {3, 2, {3.0, 0, 3.0, 4.0, 0.35, 4.0}}});
  const GridSpec g = s.grid();
  const GroundTruth gt = ground_truth(s, g);
  const BinaryRaster all(g.u_size, g.v_size, 1);
  TopDownLabeler labeler;
  labeler.fit(gt.heights, all, gt.map.labels);
  const LabelRaster pred = labeler.predict(gt.heights, all);
  EXPECT_EQ(pred, gt.map.labels);
  EXPECT_EQ(pred(50, 50), 9);
  EXPECT_EQ(pred(175, 175), 3);
}

TEST(Proj2Seg, SingleClassLabeler) {
  Rng rng(5);
  HeightLayer h(20, 20);
  for (auto& x : h.data()) x = static_cast<float>(rng.uniform(0, 2));
  const BinaryRaster obs = random_mask(rng, 20, 20, 0.7);
  TopDownLabeler labeler;
  labeler.fit(h, obs, LabelRaster(20, 20, 10));
  const LabelRaster pred = labeler.predict(h, obs);
  for (std::size_t i = 0; i < pred.size(); ++i) EXPECT_EQ(pred[i], obs[i] ? 10 : 0);
}

TEST(Proj2Seg, EmptyObservationAndMissingLabeler) {
  const GridSpec g = small_grid(10, 10);
  TopDownLabeler labeler;
  labeler.fit(HeightLayer(10, 10, 0.0f), BinaryRaster(10, 10, 1), LabelRaster(10, 10, 0));
  Proj2SegBuilder b(g, labeler);
  try {
    b.finish();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyObservation);
  }
  PipelineConfig cfg;
  cfg.kind = PipelineKind::Proj2Seg;
  EXPECT_THROW(make_builder(cfg, g), Error);
  TopDownLabeler unfitted;
  EXPECT_THROW(make_builder(cfg, g, &unfitted), Error);
}

TEST(Pipelines, ParseKind) {
  EXPECT_EQ(parse_pipeline_kind("seg2proj"), PipelineKind::Seg2Proj);
  EXPECT_EQ(to_string(PipelineKind::Proj2Seg), "proj2seg");
  EXPECT_THROW(parse_pipeline_kind("voxblox"), Error);
}
