// Raster primitives: categorical median (mode) filter, binary morphology with
// square elements, connected components, nearest-neighbour downsampling and
// grid line of sight.
#ifndef SEMMAP_IMGPROC_HPP_
#define SEMMAP_IMGPROC_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "semmap/core.hpp"

namespace semmap {

// ---------------------------------------------------------------------------
// Mode ("median") filter over categorical labels.

namespace detail {

/// Window offsets [lo, hi] for a k-wide window anchored at index floor(k/2).
inline std::array<int, 2> median_window(int k) { return {-(k / 2), k - 1 - k / 2}; }

/// Mode of labels in the clipped k x k window around each target cell. Only
/// cells with include(idx) vote; ties go to the smaller class id. Cells whose
/// window holds no votes receive `empty_value`. Non-target cells are copied.
template <typename Include, typename Target>
LabelRaster window_mode(const LabelRaster& r, int k, Include include, Target target,
                        ClassId empty_value) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "window side must be >= 1");
  LabelRaster out = r;
  const auto [lo, hi] = median_window(k);
  const int w = r.width();
  const int h = r.height();
  parallel_for(0, h, [&](int y) {
    std::array<int, 256> hist{};
    std::vector<ClassId> seen;
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = r.index(x, y);
      if (!target(idx)) continue;
      seen.clear();
      const int y0 = std::max(0, y + lo), y1 = std::min(h - 1, y + hi);
      const int x0 = std::max(0, x + lo), x1 = std::min(w - 1, x + hi);
      for (int yy = y0; yy <= y1; ++yy) {
        for (int xx = x0; xx <= x1; ++xx) {
          const std::size_t j = r.index(xx, yy);
          if (!include(j)) continue;
          if (hist[r[j]]++ == 0) seen.push_back(r[j]);
        }
      }
      ClassId best = empty_value;
      int best_count = 0;
      for (ClassId c : seen) {
        if (hist[c] > best_count || (hist[c] == best_count && c < best)) {
          best = c;
          best_count = hist[c];
        }
        hist[c] = 0;
      }
      out[idx] = best;
    }
  });
  return out;
}

}  // namespace detail

/// Majority label in a k x k window (clipped at borders), ties to the smaller
/// class. With `ignore_void`, void cells do not vote and a void-only window
/// yields void.
inline LabelRaster median_filter(const LabelRaster& r, int k, bool ignore_void) {
  if (ignore_void)
    return detail::window_mode(
        r, k, [&](std::size_t i) { return r[i] != 0; }, [](std::size_t) { return true; }, 0);
  return detail::window_mode(
      r, k, [](std::size_t) { return true; }, [](std::size_t) { return true; }, 0);
}

/// Mode filter restricted to a region: only `voters` vote and only `targets`
/// are rewritten. Targets without voters in their window become `empty_value`.
inline LabelRaster masked_mode_filter(const LabelRaster& r, int k, const BinaryRaster& voters,
                                      const BinaryRaster& targets, ClassId empty_value = 0) {
  if (!r.same_shape(voters) || !r.same_shape(targets))
    throw Error(ErrorCode::GridMismatch, "mask dimensions differ from raster");
  return detail::window_mode(
      r, k, [&](std::size_t i) { return voters[i] != 0; },
      [&](std::size_t i) { return targets[i] != 0; }, empty_value);
}

// ---------------------------------------------------------------------------
// Binary morphology. The square element of side s covers offsets
// [-(s-1)/2, s-1-(s-1)/2] on each axis. dilate(A) = A (+) B and
// erode(A) = A (-) B; cells outside the raster read as 0.

enum class MorphOp { Erode, Dilate, Open, Close };

namespace detail {

inline std::array<int, 2> morph_window(int s) { return {-((s - 1) / 2), s - 1 - (s - 1) / 2}; }

/// Separable pass. For dilation out(x) = OR_b in(x - b); for erosion
/// out(x) = AND_b in(x + b). Implemented with running counts of ones.
inline BinaryRaster morph_pass(const BinaryRaster& in, int lo, int hi, bool dilate,
                               bool horizontal) {
  const int w = in.width(), h = in.height();
  BinaryRaster out(w, h);
  const int len = horizontal ? w : h;
  const int lines = horizontal ? h : w;
  // window of source positions relative to output position
  const int a = dilate ? -hi : lo;
  const int b = dilate ? -lo : hi;
  const int span = b - a + 1;
  std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
  for (int line = 0; line < lines; ++line) {
    auto at = [&](int p) -> std::uint8_t {
      return horizontal ? in(p, line) : in(line, p);
    };
    prefix[0] = 0;
    for (int p = 0; p < len; ++p) prefix[p + 1] = prefix[p] + (at(p) ? 1 : 0);
    for (int p = 0; p < len; ++p) {
      const int s0 = p + a, s1 = p + b;
      const int c0 = std::clamp(s0, 0, len), c1 = std::clamp(s1 + 1, 0, len);
      const int ones = c1 > c0 ? prefix[c1] - prefix[c0] : 0;
      const std::uint8_t v = dilate ? (ones > 0) : (ones == span);
      if (horizontal) out(p, line) = v; else out(line, p) = v;
    }
  }
  return out;
}

}  // namespace detail

inline BinaryRaster dilate(const BinaryRaster& r, int side) {
  if (side < 1) throw Error(ErrorCode::InvalidArgument, "structuring element side must be >= 1");
  const auto [lo, hi] = detail::morph_window(side);
  return detail::morph_pass(detail::morph_pass(r, lo, hi, true, true), lo, hi, true, false);
}

inline BinaryRaster erode(const BinaryRaster& r, int side) {
  if (side < 1) throw Error(ErrorCode::InvalidArgument, "structuring element side must be >= 1");
  const auto [lo, hi] = detail::morph_window(side);
  return detail::morph_pass(detail::morph_pass(r, lo, hi, false, true), lo, hi, false, false);
}

inline BinaryRaster morphology(const BinaryRaster& r, MorphOp op, int side) {
  switch (op) {
    case MorphOp::Erode: return erode(r, side);
    case MorphOp::Dilate: return dilate(r, side);
    case MorphOp::Open: return dilate(erode(r, side), side);
    case MorphOp::Close: return erode(dilate(r, side), side);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Connected components (two-pass, union-find).

struct Components {
  Raster<int> labels;  // 0 = background, else 1..count
  int count = 0;
  std::vector<int> areas;  // areas[label - 1]
};

inline Components connected_components(const BinaryRaster& r, int connectivity = 8) {
  if (connectivity != 4 && connectivity != 8)
    throw Error(ErrorCode::InvalidArgument, "connectivity must be 4 or 8");
  const int w = r.width(), h = r.height();
  Raster<int> provisional(w, h, 0);
  std::vector<int> parent{0};
  auto find = [&](int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!r(x, y)) continue;
      int label = 0;
      auto consider = [&](int nx, int ny) {
        if (!provisional.contains(nx, ny)) return;
        const int l = provisional(nx, ny);
        if (l == 0) return;
        if (label == 0) label = l; else unite(label, l);
      };
      consider(x - 1, y);
      consider(x, y - 1);
      if (connectivity == 8) {
        consider(x - 1, y - 1);
        consider(x + 1, y - 1);
      }
      if (label == 0) {
        label = static_cast<int>(parent.size());
        parent.push_back(label);
      }
      provisional(x, y) = label;
    }
  }

  Components out{Raster<int>(w, h, 0), 0, {}};
  std::vector<int> final_label(parent.size(), 0);
  for (std::size_t i = 0; i < provisional.size(); ++i) {
    const int l = provisional[i];
    if (l == 0) continue;
    const int root = find(l);
    if (final_label[root] == 0) {
      final_label[root] = ++out.count;
      out.areas.push_back(0);
    }
    out.labels[i] = final_label[root];
    ++out.areas[final_label[root] - 1];
  }
  return out;
}

// ---------------------------------------------------------------------------

template <typename T>
Raster<T> downsample_nn(const Raster<T>& r, int factor) {
  if (factor < 1 || r.width() % factor != 0 || r.height() % factor != 0)
    throw Error(ErrorCode::DimsNotDivisible, "downsample factor must divide both dimensions");
  Raster<T> out(r.width() / factor, r.height() / factor);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out(x, y) = r(x * factor, y * factor);
  return out;
}

/// Cells on the Bresenham line from a to b, both ends included.
inline std::vector<Cell> bresenham_line(Cell a, Cell b) {
  std::vector<Cell> cells;
  int x = a.u, y = a.v;
  const int dx = std::abs(b.u - a.u), dy = -std::abs(b.v - a.v);
  const int sx = a.u < b.u ? 1 : -1, sy = a.v < b.v ? 1 : -1;
  int err = dx + dy;
  while (true) {
    cells.push_back({x, y});
    if (x == b.u && y == b.v) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
  return cells;
}

inline bool line_of_sight(const BinaryRaster& mask, Cell a, Cell b) {
  if (!mask.contains(a.u, a.v) || !mask.contains(b.u, b.v))
    throw Error(ErrorCode::CellOutOfGrid, "line endpoint outside raster");
  int x = a.u, y = a.v;
  const int dx = std::abs(b.u - a.u), dy = -std::abs(b.v - a.v);
  const int sx = a.u < b.u ? 1 : -1, sy = a.v < b.v ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (!mask(x, y)) return false;
    if (x == b.u && y == b.v) return true;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
}

/// Exact squared Euclidean distance (in cells) from every cell to the nearest
/// set cell; +inf where the mask is empty.
inline Raster<double> distance_transform_sq(const BinaryRaster& mask) {
  const int w = mask.width(), h = mask.height();
  constexpr double kInf = 1e20;
  Raster<double> out(w, h, kInf);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out[i] = 0.0;
  // Felzenszwalb-Huttenlocher lower envelope of parabolas, per axis.
  auto pass = [](std::vector<double>& f) {
    const int n = static_cast<int>(f.size());
    std::vector<double> d(n), z(n + 1);
    std::vector<int> v(n);
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
      double s;
      while (true) {
        s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
        if (s <= z[k] && k > 0) --k; else break;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
      while (z[k + 1] < q) ++k;
      d[q] = double(q - v[k]) * (q - v[k]) + f[v[k]];
    }
    f = d;
  };
  std::vector<double> line;
  for (int y = 0; y < h; ++y) {
    line.assign(w, 0.0);
    for (int x = 0; x < w; ++x) line[x] = out(x, y);
    pass(line);
    for (int x = 0; x < w; ++x) out(x, y) = line[x];
  }
  for (int x = 0; x < w; ++x) {
    line.assign(h, 0.0);
    for (int y = 0; y < h; ++y) line[y] = out(x, y);
    pass(line);
    for (int y = 0; y < h; ++y) out(x, y) = line[y];
  }
  for (auto& d : out.data())
    if (d >= 1e19) d = std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace semmap

#endif  // SEMMAP_IMGPROC_HPP_
