// Spatial memory: a U x V grid of per-cell class-score states updated once per
// frame from projected egocentric observations, plus a max-height layer and
// the observed mask.
//
// Within a frame, pixels landing in the same cell are reduced to the one with
// the greatest world height (ties: smaller row-major pixel index), so a cell
// describes the surface visible from above. Only cells touched by a frame are
// modified by that frame's update.
#ifndef SEMMAP_MEMORY_HPP_
#define SEMMAP_MEMORY_HPP_

#include <array>
#include <concepts>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "semmap/core.hpp"
#include "semmap/geometry.hpp"
#include "semmap/imgproc.hpp"
#include "semmap/map.hpp"
#include "semmap/raycast.hpp"

namespace semmap {

struct ProjectedObservation {
  Cell cell;
  ClassId class_id = 0;
  double height = 0.0;  // world y of the surviving pixel
  int pixel_i = 0;
  int pixel_j = 0;
};

/// Observations of one frame, sorted by row-major cell index, one per cell.
struct ProjectedFrame {
  GridSpec grid;
  std::vector<ProjectedObservation> observations;
};

namespace detail {

/// Projects pixels in the given visiting order. The max-height rule with a
/// pixel-index tie-break makes the result independent of that order.
template <typename PixelOrder>
ProjectedFrame project_pixels(const EgoFrame& frame, const GridSpec& g, PixelOrder&& order) {
  const CameraIntrinsics& k = frame.intrinsics;
  if (frame.depth.width() != k.width || frame.depth.height() != k.height || !frame.labels.same_shape(frame.depth))
    throw Error(ErrorCode::InvalidArgument, "frame rasters do not match intrinsics");
  const Mat3 rt = frame.pose.rotation.transpose();
  const Vec3 t = frame.pose.translation;
  const double ceiling = frame.camera_y + kCeilingMargin;

  std::vector<int> slot(g.cell_count(), -1);
  std::vector<ProjectedObservation> found;
  std::vector<std::size_t> found_pixel;
  order([&](int i, int j) {
    const double d = frame.depth(i, j);
    if (!(d > 0.0)) return;
    const Vec3 p = rt * Vec3(d * (i - k.cx) / k.fx, d * (j - k.cy) / k.fy, d) - t;
    if (p.y() > ceiling) return;
    Cell c;
    if (!try_world_to_cell(g, p.x(), p.z(), c)) return;
    const std::size_t cell_idx = static_cast<std::size_t>(c.v) * g.u_size + c.u;
    const std::size_t pixel_idx = frame.depth.index(i, j);
    int& s = slot[cell_idx];
    if (s < 0) {
      s = static_cast<int>(found.size());
      found.push_back({c, frame.labels(i, j), p.y(), i, j});
      found_pixel.push_back(pixel_idx);
      return;
    }
    ProjectedObservation& cur = found[s];
    if (p.y() > cur.height || (p.y() == cur.height && pixel_idx < found_pixel[s])) {
      cur = {c, frame.labels(i, j), p.y(), i, j};
      found_pixel[s] = pixel_idx;
    }
  });

  ProjectedFrame out{g, {}};
  out.observations.reserve(found.size());
  for (int s : slot)
    if (s >= 0) out.observations.push_back(found[s]);
  return out;
}

}  // namespace detail

inline ProjectedFrame project_frame(const EgoFrame& frame, const GridSpec& g) {
  return detail::project_pixels(frame, g, [&](auto&& visit) {
    for (int j = 0; j < frame.depth.height(); ++j)
      for (int i = 0; i < frame.depth.width(); ++i) visit(i, j);
  });
}

/// Same geometry, labels taken from another raster of the frame's shape.
/// Label noise never moves a pixel, so relabel(project_frame(f), l) equals
/// projecting f with its labels replaced by l.
inline ProjectedFrame relabel(ProjectedFrame pf, const LabelRaster& labels) {
  for (ProjectedObservation& o : pf.observations) o.class_id = labels(o.pixel_i, o.pixel_j);
  return pf;
}

// ---------------------------------------------------------------------------
// Aggregators: the per-cell recurrent update, shared by every cell.

using CellScores = std::array<double, kNumClasses>;

inline CellScores one_hot(ClassId c) {
  CellScores s{};
  s[c] = 1.0;
  return s;
}

template <typename A>
concept CellAggregator = requires(const A& a, CellScores& s, const ProjectedObservation& o) {
  { a.update(s, /*was_observed=*/true, /*old_height=*/0.0, o) } -> std::same_as<void>;
  { A::name() } -> std::convertible_to<std::string>;
};

struct LatestWins {
  static std::string name() { return "latest_wins"; }
  void update(CellScores& s, bool, double, const ProjectedObservation& o) const { s = one_hot(o.class_id); }
};

/// Keeps the class seen at the all-time maximum height; earlier wins ties.
struct MaxHeight {
  static std::string name() { return "max_height"; }
  void update(CellScores& s, bool was_observed, double old_height, const ProjectedObservation& o) const {
    if (!was_observed || o.height > old_height) s = one_hot(o.class_id);
  }
};

struct MajorityVote {
  static std::string name() { return "majority_vote"; }
  void update(CellScores& s, bool, double, const ProjectedObservation& o) const { s[o.class_id] += 1.0; }
};

struct Ema {
  double alpha = 0.3;
  static std::string name() { return "ema"; }
  void update(CellScores& s, bool, double, const ProjectedObservation& o) const {
    for (int c = 0; c < kNumClasses; ++c) s[c] *= (1.0 - alpha);
    s[o.class_id] += alpha;
  }
};

static_assert(CellAggregator<LatestWins> && CellAggregator<MaxHeight> &&
              CellAggregator<MajorityVote> && CellAggregator<Ema>);

using Aggregator = std::variant<LatestWins, MaxHeight, MajorityVote, Ema>;

inline std::string aggregator_name(const Aggregator& a) {
  return std::visit([](const auto& x) { return std::decay_t<decltype(x)>::name(); }, a);
}

inline Aggregator parse_aggregator(const std::string& name, double ema_alpha = 0.3) {
  if (name == "latest_wins") return LatestWins{};
  if (name == "max_height") return MaxHeight{};
  if (name == "majority_vote") return MajorityVote{};
  if (name == "ema") return Ema{ema_alpha};
  throw Error(ErrorCode::InvalidArgument, "unknown aggregator '" + name + "'");
}

// ---------------------------------------------------------------------------

class SpatialMemory {
 public:
  SpatialMemory() = default;
  explicit SpatialMemory(const GridSpec& g)
      : grid_(g), scores_(g.cell_count(), CellScores{}), heights_(g.u_size, g.v_size, 0.0f),
        observed_(g.u_size, g.v_size, 0) {}

  const GridSpec& grid() const { return grid_; }
  const CellScores& scores(int u, int v) const { return scores_[index(u, v)]; }
  const std::vector<CellScores>& all_scores() const { return scores_; }
  /// Max observed surface height; meaningful only where observed() is set.
  const HeightLayer& heights() const { return heights_; }
  const BinaryRaster& observed() const { return observed_; }
  std::size_t frame_counter() const { return frames_; }

  template <CellAggregator A>
  void update(const ProjectedFrame& frame, const A& agg) {
    require_same_grid(grid_, frame.grid);
    for (const ProjectedObservation& o : frame.observations) {
      const std::size_t idx = index(o.cell.u, o.cell.v);
      const bool was_observed = observed_[idx] != 0;
      const double old_height = heights_[idx];
      agg.update(scores_[idx], was_observed, old_height, o);
      const float h = static_cast<float>(o.height);
      if (!was_observed || h > heights_[idx]) heights_[idx] = h;
      observed_[idx] = 1;
    }
    ++frames_;
  }

  void update(const ProjectedFrame& frame, const Aggregator& agg) {
    std::visit([&](const auto& a) { update(frame, a); }, agg);
  }

  friend bool operator==(const SpatialMemory&, const SpatialMemory&) = default;

 private:
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * grid_.u_size + u; }

  GridSpec grid_;
  std::vector<CellScores> scores_;
  HeightLayer heights_;
  BinaryRaster observed_;
  std::size_t frames_ = 0;
};

inline SpatialMemory update_memory(SpatialMemory mem, const ProjectedFrame& obs, const Aggregator& agg) {
  mem.update(obs, agg);
  return mem;
}

// ---------------------------------------------------------------------------
// Decoding

struct Smoothing {
  enum class Kind { None, BoxVote } kind = Kind::None;
  int k = 3;

  static Smoothing none() { return {}; }
  static Smoothing box_vote(int k) { return {Kind::BoxVote, k}; }
};

inline ClassId argmax_class(const CellScores& s) {
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c)
    if (s[c] > s[best]) best = c;
  return static_cast<ClassId>(best);
}

/// Score vector scaled to unit sum (zero vectors stay zero).
inline CellScores normalized(const CellScores& s) {
  double total = 0;
  for (double x : s) total += x;
  if (!(total > 0.0)) return s;
  CellScores out;
  for (int c = 0; c < kNumClasses; ++c) out[c] = s[c] / total;
  return out;
}

/// Unobserved cells decode to void; observed cells to the argmax class (ties
/// to the smaller id). Box vote sums each observed neighbour's normalized
/// scores over a k x k window first, so a cell seen 500 times does not
/// outvote one seen 20 times.
inline SemanticMap decode_map(const SpatialMemory& mem, const Smoothing& smoothing = {}) {
  const GridSpec& g = mem.grid();
  SemanticMap out(g);
  const BinaryRaster& obs = mem.observed();
  if (smoothing.kind == Smoothing::Kind::None) {
    for (int v = 0; v < g.v_size; ++v)
      for (int u = 0; u < g.u_size; ++u)
        if (obs(u, v)) out.labels(u, v) = argmax_class(mem.scores(u, v));
    return out;
  }
  if (smoothing.k < 1) throw Error(ErrorCode::InvalidArgument, "box vote window must be >= 1");
  const auto [lo, hi] = detail::median_window(smoothing.k);
  std::vector<CellScores> unit(mem.all_scores().size());
  for (std::size_t i = 0; i < unit.size(); ++i) unit[i] = normalized(mem.all_scores()[i]);
  parallel_for(0, g.v_size, [&](int v) {
    for (int u = 0; u < g.u_size; ++u) {
      if (!obs(u, v)) continue;
      CellScores sum{};
      for (int vv = std::max(0, v + lo); vv <= std::min(g.v_size - 1, v + hi); ++vv)
        for (int uu = std::max(0, u + lo); uu <= std::min(g.u_size - 1, u + hi); ++uu) {
          if (!obs(uu, vv)) continue;
          const CellScores& s = unit[static_cast<std::size_t>(vv) * g.u_size + uu];
          for (int c = 0; c < kNumClasses; ++c) sum[c] += s[c];
        }
      out.labels(u, v) = argmax_class(sum);
    }
  });
  return out;
}

}  // namespace semmap

#endif  // SEMMAP_MEMORY_HPP_
