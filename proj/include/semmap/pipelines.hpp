// The three map-construction paradigms:
//
//   seg2proj  label each egocentric frame, then project labels (latest wins),
//             with optional egocentric erosion, downsampling, hole filling and
//             a top-down mode filter;
//   proj2seg  project only geometry, then label the top-down observation with
//             a height/density lookup fit on training scenes;
//   smnet     project per-pixel class evidence into the spatial memory,
//             accumulate across frames, decode at the end.
//
// All three share an egocentric label-noise model standing in for a learned
// segmenter's errors, concentrated at label boundaries.
#ifndef SEMMAP_PIPELINES_HPP_
#define SEMMAP_PIPELINES_HPP_

#include <algorithm>
#include <array>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "semmap/core.hpp"
#include "semmap/imgproc.hpp"
#include "semmap/map.hpp"
#include "semmap/memory.hpp"
#include "semmap/raycast.hpp"
#include "semmap/rng.hpp"
#include "semmap/scene.hpp"
#include "semmap/trajectory.hpp"

namespace semmap {

struct NoiseModel {
  int boundary_band = 2;            // pixels (Chebyshev radius)
  double boundary_flip_prob = 0.3;  // p
  double uniform_flip_prob = 0.01;  // q
  std::uint64_t seed = 7;

  static NoiseModel none() { return {0, 0.0, 0.0, 0}; }
  bool active() const { return boundary_flip_prob > 0.0 || uniform_flip_prob > 0.0; }
  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

namespace detail {

/// Separable min and max over the window [x+a, x+b] x [y+a, y+b], clipped to
/// the raster. Inputs carry neutral values (255 for min, 0 for max) where a
/// pixel should not count.
inline void window_min_max(const LabelRaster& lo_in, const LabelRaster& hi_in, int a, int b, LabelRaster& lo_out,
                           LabelRaster& hi_out) {
  const int w = lo_in.width(), h = lo_in.height();
  // horizontal pass as shifted-row passes so the inner loops vectorize
  LabelRaster lo(w, h, 255), hi(w, h, 0);
  for (int y = 0; y < h; ++y) {
    const ClassId* lr = &lo_in(0, y);
    const ClassId* hr = &hi_in(0, y);
    ClassId* lo_row = &lo(0, y);
    ClassId* hi_row = &hi(0, y);
    for (int dx = a; dx <= b; ++dx) {
      const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
      for (int x = x0; x < x1; ++x) {
        lo_row[x] = std::min(lo_row[x], lr[x + dx]);
        hi_row[x] = std::max(hi_row[x], hr[x + dx]);
      }
    }
  }
  lo_out = LabelRaster(w, h, 255);
  hi_out = LabelRaster(w, h, 0);
  for (int y = 0; y < h; ++y) {
    ClassId* lo_row = &lo_out(0, y);
    ClassId* hi_row = &hi_out(0, y);
    const int y1 = std::min(h - 1, y + b);
    for (int yy = std::max(0, y + a); yy <= y1; ++yy) {
      const ClassId* lr = &lo(0, yy);
      const ClassId* hr = &hi(0, yy);
      for (int x = 0; x < w; ++x) {
        lo_row[x] = std::min(lo_row[x], lr[x]);
        hi_row[x] = std::max(hi_row[x], hr[x]);
      }
    }
  }
}

/// Min/max label over valid-depth pixels in the (2r+1) square around each pixel.
inline void window_label_range(const LabelRaster& labels, const DepthImage& depth, int r,
                               LabelRaster& lo_out, LabelRaster& hi_out) {
  LabelRaster lo(labels.width(), labels.height()), hi(labels.width(), labels.height());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool valid = depth[i] > 0.0f;
    lo[i] = valid ? labels[i] : 255;
    hi[i] = valid ? labels[i] : 0;
  }
  window_min_max(lo, hi, -r, r, lo_out, hi_out);
}

}  // namespace detail

/// Corrupts the labels of one frame. A valid pixel within Chebyshev distance r
/// of a valid pixel of another label flips, with probability p, to one of the
/// other labels in that window chosen uniformly; every valid pixel then flips
/// with probability q to a class drawn uniformly from all 13 (possibly its
/// own). Draws depend only on (seed, frame index, pixel index).
inline LabelRaster corrupt_label_raster(const EgoFrame& frame, const NoiseModel& nm, std::uint64_t frame_index) {
  LabelRaster out = frame.labels;
  if (!nm.active()) return out;
  const LabelRaster& src = frame.labels;
  const int w = src.width(), h = src.height();
  const int r = std::max(0, nm.boundary_band);
  LabelRaster lo, hi;
  const bool boundary = nm.boundary_flip_prob > 0.0 && r > 0;
  if (boundary) detail::window_label_range(src, frame.depth, r, lo, hi);
  const std::uint64_t frame_key = mix64(nm.seed) ^ mix64(frame_index + 0x5EED);
  const std::uint64_t key = mix64(frame_key);  // hash_mix(frame_key, .) prefix
  auto draw = [key](std::size_t idx, std::uint64_t k) { return to_unit(mix64(mix64(key ^ idx) ^ k)); };

  parallel_for(0, h, [&](int y) {
    std::array<bool, 256> present{};
    std::vector<ClassId> others;
    for (int x = 0; x < w; ++x) {
      if (!(frame.depth(x, y) > 0.0f)) continue;
      const std::size_t idx = src.index(x, y);
      const ClassId own = src[idx];
      ClassId label = own;
      if (boundary && lo[idx] != hi[idx] &&
          draw(idx, 0) < nm.boundary_flip_prob) {
        others.clear();
        for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy)
          for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
            if (!(frame.depth(xx, yy) > 0.0f)) continue;
            const ClassId c = src(xx, yy);
            if (c != own && !present[c]) {
              present[c] = true;
              others.push_back(c);
            }
          }
        std::sort(others.begin(), others.end());
        for (ClassId c : others) present[c] = false;
        if (!others.empty()) {
          const double u = draw(idx, 1);
          label = others[std::min<std::size_t>(others.size() - 1, static_cast<std::size_t>(u * others.size()))];
        }
      }
      if (nm.uniform_flip_prob > 0.0 && draw(idx, 2) < nm.uniform_flip_prob) {
        const double u = draw(idx, 3);
        label = static_cast<ClassId>(std::min(kNumClasses - 1, static_cast<int>(u * kNumClasses)));
      }
      out[idx] = label;
    }
  });
  return out;
}

inline EgoFrame corrupt_labels(const EgoFrame& frame, const NoiseModel& nm, std::uint64_t frame_index) {
  EgoFrame out = frame;
  out.labels = corrupt_label_raster(frame, nm, frame_index);
  return out;
}

/// Per-class erosion of an egocentric label raster with a square element;
/// removed pixels become void. Equivalent to eroding each class mask with zero
/// padding: a pixel keeps its class iff its whole window lies inside the
/// raster and carries that class.
inline LabelRaster erode_labels(const LabelRaster& labels, int side) {
  if (side < 1) throw Error(ErrorCode::InvalidArgument, "erosion side must be >= 1");
  const int a = -(side - 1) / 2, b = side - 1 - (side - 1) / 2;
  const int w = labels.width(), h = labels.height();
  LabelRaster lo, hi;
  detail::window_min_max(labels, labels, a, b, lo, hi);
  LabelRaster out(w, h, 0);
  for (int y = -a; y < h - b; ++y)
    for (int x = -a; x < w - b; ++x)
      if (lo(x, y) == hi(x, y)) out(x, y) = labels(x, y);
  return out;
}

/// Nearest-neighbour downsampled frame with matching intrinsics.
inline EgoFrame downsample_frame(const EgoFrame& f, int factor) {
  if (factor == 1) return f;
  EgoFrame out;
  out.intrinsics = f.intrinsics.downsampled(factor);
  out.depth = downsample_nn(f.depth, factor);
  out.labels = downsample_nn(f.labels, factor);
  out.instances = downsample_nn(f.instances, factor);
  out.pose = f.pose;
  out.camera_y = f.camera_y;
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

enum class PipelineKind { SMNet, Seg2Proj, Proj2Seg };

inline std::string to_string(PipelineKind k) {
  switch (k) {
    case PipelineKind::SMNet: return "smnet";
    case PipelineKind::Seg2Proj: return "seg2proj";
    case PipelineKind::Proj2Seg: return "proj2seg";
  }
  return "?";
}

inline PipelineKind parse_pipeline_kind(const std::string& s) {
  if (s == "smnet") return PipelineKind::SMNet;
  if (s == "seg2proj") return PipelineKind::Seg2Proj;
  if (s == "proj2seg") return PipelineKind::Proj2Seg;
  throw Error(ErrorCode::InvalidArgument, "unknown pipeline '" + s + "'");
}

struct Seg2ProjOptions {
  int downsample_factor = 4;  // 1 = full resolution
  int fill_median_k = 10;     // 0 disables hole filling
  int post_median_k = 3;      // 0 disables the top-down mode filter
  int erosion_side = 0;       // 0 disables egocentric erosion
  bool cross_frame_max_height = false;  // default: latest frame wins

  /// Every heuristic off.
  static Seg2ProjOptions plain() { return {1, 0, 0, 0, false}; }
};

struct Proj2SegOptions {
  double height_band = 0.10;  // m per band
  int height_bands = 20;
  int density_window = 5;
  int density_bins = 5;
  int train_scenes = 3;
  std::uint64_t train_seed = 100000;
};

struct PipelineConfig {
  PipelineKind kind = PipelineKind::SMNet;
  Aggregator aggregator = MajorityVote{};
  Smoothing smoothing = Smoothing::box_vote(3);
  Seg2ProjOptions seg2proj;
  Proj2SegOptions proj2seg;
  NoiseModel noise;
};

struct PipelineResult {
  SemanticMap map;
  HeightLayer heights;
  BinaryRaster observed;
  std::optional<SpatialMemory> memory;  // smnet only
};

// ---------------------------------------------------------------------------
// Builders consume frames in trajectory order and produce a map at the end.

/// One rendered frame plus lazily computed products several builders share:
/// corrupted labels per noise model and the clean full-resolution projection
/// per grid.
class FrameCache {
 public:
  FrameCache(const EgoFrame& frame, std::uint64_t index) : frame_(frame), index_(index) {}

  const EgoFrame& frame() const { return frame_; }
  std::uint64_t index() const { return index_; }

  const LabelRaster& corrupted(const NoiseModel& nm) {
    if (!nm.active()) return frame_.labels;
    for (const auto& [key, labels] : corrupted_)
      if (key == nm) return labels;
    corrupted_.emplace_back(nm, corrupt_label_raster(frame_, nm, index_));
    return corrupted_.back().second;
  }

  const ProjectedFrame& projection(const GridSpec& g) {
    for (const ProjectedFrame& pf : projections_)
      if (pf.grid == g) return pf;
    projections_.push_back(project_frame(frame_, g));
    return projections_.back();
  }

 private:
  const EgoFrame& frame_;
  std::uint64_t index_;
  std::deque<std::pair<NoiseModel, LabelRaster>> corrupted_;
  std::deque<ProjectedFrame> projections_;
};

class MapBuilder {
 public:
  virtual ~MapBuilder() = default;
  virtual void integrate(FrameCache& frame) = 0;
  virtual PipelineResult finish() const = 0;

  void integrate(const EgoFrame& frame, std::uint64_t frame_index) {
    FrameCache cache(frame, frame_index);
    integrate(cache);
  }
};

/// Heights and observed mask from full-resolution geometry; labels unused.
class GeometryLayer {
 public:
  explicit GeometryLayer(const GridSpec& g) : memory_(g) {}

  void integrate(const ProjectedFrame& pf) { memory_.update(pf, LatestWins{}); }
  const HeightLayer& heights() const { return memory_.heights(); }
  const BinaryRaster& observed() const { return memory_.observed(); }
  const GridSpec& grid() const { return memory_.grid(); }

 private:
  SpatialMemory memory_;
};

class Seg2ProjBuilder final : public MapBuilder {
 public:
  Seg2ProjBuilder(const GridSpec& g, const Seg2ProjOptions& opt, const NoiseModel& noise)
      : grid_(g), opt_(opt), noise_(noise), geometry_(g), labels_(g.u_size, g.v_size, 0),
        assigned_(g.u_size, g.v_size, 0), label_height_(g.u_size, g.v_size, 0.0) {
    if (opt_.downsample_factor < 1) throw Error(ErrorCode::InvalidArgument, "downsample factor must be >= 1");
  }

  using MapBuilder::integrate;
  void integrate(FrameCache& cache) override {
    const ProjectedFrame& clean = cache.projection(grid_);
    const LabelRaster& noisy = cache.corrupted(noise_);
    const LabelRaster seg = opt_.erosion_side > 0 ? erode_labels(noisy, opt_.erosion_side) : noisy;
    ProjectedFrame pf;
    if (opt_.downsample_factor == 1) {
      pf = relabel(clean, seg);
    } else {
      EgoFrame small = downsample_frame(cache.frame(), opt_.downsample_factor);
      small.labels = downsample_nn(seg, opt_.downsample_factor);
      pf = project_frame(small, grid_);
    }
    for (const ProjectedObservation& o : pf.observations) {
      const std::size_t idx = labels_.index(o.cell.u, o.cell.v);
      if (opt_.cross_frame_max_height && assigned_[idx] && !(o.height > label_height_[idx])) continue;
      labels_[idx] = o.class_id;
      label_height_[idx] = std::max(assigned_[idx] ? label_height_[idx] : o.height, o.height);
      assigned_[idx] = 1;
    }
    geometry_.integrate(clean);
  }

  PipelineResult finish() const override {
    const BinaryRaster& observed = geometry_.observed();
    LabelRaster labels = labels_;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (!observed[i]) labels[i] = 0;
    if (opt_.fill_median_k > 0) {
      BinaryRaster holes(observed.width(), observed.height(), 0);
      for (std::size_t i = 0; i < holes.size(); ++i) holes[i] = observed[i] && !assigned_[i];
      if (count_set(holes) > 0) labels = masked_mode_filter(labels, opt_.fill_median_k, assigned_, holes, 0);
    }
    if (opt_.post_median_k > 0) labels = masked_mode_filter(labels, opt_.post_median_k, observed, observed, 0);
    PipelineResult r;
    r.map = SemanticMap(grid_);
    r.map.labels = std::move(labels);
    r.heights = geometry_.heights();
    r.observed = observed;
    return r;
  }

 private:
  GridSpec grid_;
  Seg2ProjOptions opt_;
  NoiseModel noise_;
  GeometryLayer geometry_;
  LabelRaster labels_;
  BinaryRaster assigned_;
  Raster<double> label_height_;
};

class SMNetBuilder final : public MapBuilder {
 public:
  SMNetBuilder(const GridSpec& g, const Aggregator& agg, const Smoothing& smoothing, const NoiseModel& noise)
      : memory_(g), agg_(agg), smoothing_(smoothing), noise_(noise) {}

  using MapBuilder::integrate;
  void integrate(FrameCache& cache) override {
    memory_.update(relabel(cache.projection(memory_.grid()), cache.corrupted(noise_)), agg_);
  }

  PipelineResult finish() const override {
    PipelineResult r;
    r.map = decode_map(memory_, smoothing_);
    r.heights = memory_.heights();
    r.observed = memory_.observed();
    r.memory = memory_;
    return r;
  }

  const SpatialMemory& memory() const { return memory_; }

 private:
  SpatialMemory memory_;
  Aggregator agg_;
  Smoothing smoothing_;
  NoiseModel noise_;
};

// ---------------------------------------------------------------------------
// Top-down labeler for proj2seg: class frequencies keyed by (height band,
// observation density), fit on observed cells of training scenes.

class TopDownLabeler {
 public:
  explicit TopDownLabeler(const Proj2SegOptions& opt = {})
      : opt_(opt), joint_(static_cast<std::size_t>(opt.height_bands) * opt.density_bins, Counts{}),
        bands_(static_cast<std::size_t>(opt.height_bands), Counts{}) {}

  void fit(const HeightLayer& heights, const BinaryRaster& observed, const LabelRaster& truth) {
    const Raster<int> density = observation_density(observed);
    for (std::size_t i = 0; i < observed.size(); ++i) {
      if (!observed[i]) continue;
      const int b = band(heights[i]);
      joint_[key(b, density_bin(density[i]))][truth[i]] += 1;
      bands_[b][truth[i]] += 1;
    }
    fitted_ = true;
  }

  bool fitted() const { return fitted_; }

  LabelRaster predict(const HeightLayer& heights, const BinaryRaster& observed) const {
    LabelRaster out(observed.width(), observed.height(), 0);
    const Raster<int> density = observation_density(observed);
    for (std::size_t i = 0; i < observed.size(); ++i) {
      if (!observed[i]) continue;
      const int b = band(heights[i]);
      const Counts& joint = joint_[key(b, density_bin(density[i]))];
      out[i] = argmax(total(joint) > 0 ? joint : bands_[b]);
    }
    return out;
  }

 private:
  using Counts = std::array<long long, kNumClasses>;

  static long long total(const Counts& c) {
    long long s = 0;
    for (long long x : c) s += x;
    return s;
  }
  static ClassId argmax(const Counts& c) {
    int best = 0;
    for (int k = 1; k < kNumClasses; ++k)
      if (c[k] > c[best]) best = k;
    return static_cast<ClassId>(best);
  }

  int band(float h) const {
    const int b = static_cast<int>(std::floor(h / opt_.height_band));
    return std::clamp(b, 0, opt_.height_bands - 1);
  }
  int density_bin(int count) const {
    const int cells = opt_.density_window * opt_.density_window;
    return std::clamp((count - 1) * opt_.density_bins / cells, 0, opt_.density_bins - 1);
  }
  std::size_t key(int b, int d) const { return static_cast<std::size_t>(b) * opt_.density_bins + d; }

  Raster<int> observation_density(const BinaryRaster& observed) const {
    const int w = observed.width(), h = observed.height();
    const auto [lo, hi] = detail::median_window(opt_.density_window);
    Raster<int> out(w, h, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int n = 0;
        for (int yy = std::max(0, y + lo); yy <= std::min(h - 1, y + hi); ++yy)
          for (int xx = std::max(0, x + lo); xx <= std::min(w - 1, x + hi); ++xx) n += observed(xx, yy);
        out(x, y) = n;
      }
    return out;
  }

  Proj2SegOptions opt_;
  std::vector<Counts> joint_;
  std::vector<Counts> bands_;
  bool fitted_ = false;
};

class Proj2SegBuilder final : public MapBuilder {
 public:
  Proj2SegBuilder(const GridSpec& g, const TopDownLabeler& labeler) : geometry_(g), labeler_(labeler) {}

  using MapBuilder::integrate;
  void integrate(FrameCache& cache) override { geometry_.integrate(cache.projection(geometry_.grid())); }

  PipelineResult finish() const override {
    if (count_set(geometry_.observed()) == 0)
      throw Error(ErrorCode::EmptyObservation, "no cell was observed");
    PipelineResult r;
    r.map = SemanticMap(geometry_.grid());
    r.map.labels = labeler_.predict(geometry_.heights(), geometry_.observed());
    r.heights = geometry_.heights();
    r.observed = geometry_.observed();
    return r;
  }

 private:
  GeometryLayer geometry_;
  const TopDownLabeler& labeler_;
};

/// Labeler is required for proj2seg and ignored otherwise.
inline std::unique_ptr<MapBuilder> make_builder(const PipelineConfig& cfg, const GridSpec& g,
                                                const TopDownLabeler* labeler = nullptr) {
  switch (cfg.kind) {
    case PipelineKind::SMNet:
      return std::make_unique<SMNetBuilder>(g, cfg.aggregator, cfg.smoothing, cfg.noise);
    case PipelineKind::Seg2Proj:
      return std::make_unique<Seg2ProjBuilder>(g, cfg.seg2proj, cfg.noise);
    case PipelineKind::Proj2Seg:
      if (!labeler || !labeler->fitted())
        throw Error(ErrorCode::InvalidArgument, "proj2seg requires a fitted top-down labeler");
      return std::make_unique<Proj2SegBuilder>(g, *labeler);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown pipeline kind");
}

// ---------------------------------------------------------------------------
// Running a trajectory

struct RenderSettings {
  CameraIntrinsics intrinsics;
  double max_range = kDefaultMaxRange;
  int frame_stride = 1;  // render every n-th trajectory state
};

/// Renders the trajectory and feeds each frame to every builder, in order.
inline void run_trajectory(const SceneModel& scene, const Trajectory& traj, const RenderSettings& render,
                           std::span<MapBuilder* const> builders) {
  const int stride = std::max(1, render.frame_stride);
  for (std::size_t k = 0; k < traj.states.size(); k += stride) {
    const EgoFrame f = raycast_frame(scene, render.intrinsics, traj.states[k].pose(traj.camera_height),
                                     traj.camera_height, render.max_range);
    FrameCache cache(f, k);
    for (MapBuilder* b : builders) b->integrate(cache);
  }
}

inline PipelineResult run_pipeline(const SceneModel& scene, const Trajectory& traj, const GridSpec& g,
                                   const PipelineConfig& cfg, const RenderSettings& render = {},
                                   const TopDownLabeler* labeler = nullptr) {
  auto builder = make_builder(cfg, g, labeler);
  MapBuilder* const list[] = {builder.get()};
  run_trajectory(scene, traj, render, list);
  return builder->finish();
}

inline PipelineResult run_seg2proj(const std::vector<EgoFrame>& frames, const GridSpec& g, const PipelineConfig& cfg) {
  Seg2ProjBuilder b(g, cfg.seg2proj, cfg.noise);
  for (std::size_t k = 0; k < frames.size(); ++k) b.integrate(frames[k], k);
  return b.finish();
}

inline PipelineResult run_smnet(const std::vector<EgoFrame>& frames, const GridSpec& g, const PipelineConfig& cfg) {
  SMNetBuilder b(g, cfg.aggregator, cfg.smoothing, cfg.noise);
  for (std::size_t k = 0; k < frames.size(); ++k) b.integrate(frames[k], k);
  return b.finish();
}

inline PipelineResult run_proj2seg(const std::vector<EgoFrame>& frames, const GridSpec& g,
                                   const TopDownLabeler& labeler) {
  Proj2SegBuilder b(g, labeler);
  for (std::size_t k = 0; k < frames.size(); ++k) b.integrate(frames[k], k);
  return b.finish();
}

/// Fits the labeler on observations of generated training scenes.
inline TopDownLabeler train_labeler(const Proj2SegOptions& opt, const SceneParams& scene_params,
                                    const RenderSettings& render, const CoverageParams& coverage = {}) {
  TopDownLabeler labeler(opt);
  for (int s = 0; s < opt.train_scenes; ++s) {
    const std::uint64_t seed = opt.train_seed + static_cast<std::uint64_t>(s);
    const SceneModel scene = generate_scene(seed, scene_params);
    const Trajectory traj = coverage_trajectory(scene, seed, coverage, scene_params.resolution);
    const GridSpec g = scene.grid(scene_params.resolution);
    GeometryLayer geo(g);
    const int stride = std::max(1, render.frame_stride);
    for (std::size_t k = 0; k < traj.states.size(); k += stride) {
      const EgoFrame f = raycast_frame(scene, render.intrinsics, traj.states[k].pose(traj.camera_height),
                                       traj.camera_height, render.max_range);
      geo.integrate(project_frame(f, g));
    }
    labeler.fit(geo.heights(), geo.observed(), ground_truth_map(scene, g).labels);
  }
  return labeler;
}

}  // namespace semmap

#endif  // SEMMAP_PIPELINES_HPP_
