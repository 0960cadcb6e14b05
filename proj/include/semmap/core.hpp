// Shared value types for the semantic mapping library: error codes, the
// row-major raster container, and a small thread pool helper.
#ifndef SEMMAP_CORE_HPP_
#define SEMMAP_CORE_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace semmap {

enum class ErrorCode {
  NonPositiveDepth,
  PixelOutOfBounds,
  BehindCamera,
  CellOutOfGrid,
  InfeasiblePlacement,
  NoFreeSpace,
  DimsNotDivisible,
  GridMismatch,
  EmptyObservation,
  EmptyInput,
  NoObservations,
  NoPath,
  StartBlocked,
  EmptyTable,
  LengthMismatch,
  ParseError,
  IoError,
  InvalidArgument,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::PixelOutOfBounds: return "PixelOutOfBounds";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::CellOutOfGrid: return "CellOutOfGrid";
    case ErrorCode::InfeasiblePlacement: return "InfeasiblePlacement";
    case ErrorCode::NoFreeSpace: return "NoFreeSpace";
    case ErrorCode::DimsNotDivisible: return "DimsNotDivisible";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::EmptyObservation: return "EmptyObservation";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoObservations: return "NoObservations";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::StartBlocked: return "StartBlocked";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Class ids: 0 is void, 1..12 are the object categories.
using ClassId = std::uint8_t;
inline constexpr int kNumClasses = 13;
inline constexpr int kNumObjectClasses = 12;

inline constexpr const char* kClassNames[kNumClasses] = {
    "void",    "chair", "table", "cushion", "cabinet", "shelving",  "sink",
    "dresser", "plant", "bed",   "sofa",    "counter", "fireplace"};

struct Cell {
  int u = 0;
  int v = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Dense row-major 2D raster. `x` indexes columns, `y` rows.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(checked_dim(width)) * checked_dim(height), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(const Raster& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }
  template <typename U>
  bool same_shape(const Raster<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Raster& a, const Raster& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
  }

 private:
  static int checked_dim(int d) {
    if (d < 0) throw Error(ErrorCode::InvalidArgument, "negative raster dimension");
    return d;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using LabelRaster = Raster<ClassId>;
/// Cells hold 0 or 1.
using BinaryRaster = Raster<std::uint8_t>;

inline std::size_t count_set(const BinaryRaster& r) {
  return static_cast<std::size_t>(std::count_if(r.data().begin(), r.data().end(),
                                                [](std::uint8_t c) { return c != 0; }));
}

inline BinaryRaster complement(const BinaryRaster& r) {
  BinaryRaster out(r.width(), r.height());
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i] ? 0 : 1;
  return out;
}

// ---------------------------------------------------------------------------
// Threading. Work is split into contiguous index chunks so results never depend
// on the thread count.

/// Thread count from SEMMAP_THREADS, else hardware concurrency.
inline int default_thread_count() {
  if (const char* env = std::getenv("SEMMAP_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline int& thread_count_setting() {
  static int n = default_thread_count();
  return n;
}

inline void set_thread_count(int n) { thread_count_setting() = std::max(1, n); }
inline int thread_count() { return thread_count_setting(); }

template <typename Fn>
void parallel_for(int begin, int end, Fn&& fn) {
  const int n = end - begin;
  if (n <= 0) return;
  const int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + w * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace semmap

#endif  // SEMMAP_CORE_HPP_
