// File formats: SMAPGRID map files, palette PPM renders, flat key = value
// pipeline configs, and segmentation reports.
//
// SMAPGRID layout (all integers and floats little-endian):
//   "SMAPGRID"  u32 version  u32 u_size  u32 v_size
//   f64 resolution  f64 origin_x  f64 origin_z  u32 layer_count
//   layer_count x { char name[16] (NUL padded)  u8 type (0 = u8, 1 = f32)  u64 offset }
//   payloads, each u_size * v_size elements, row-major (v outer)
#ifndef SEMMAP_IO_HPP_
#define SEMMAP_IO_HPP_

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "semmap/core.hpp"
#include "semmap/map.hpp"
#include "semmap/memory.hpp"
#include "semmap/metrics.hpp"
#include "semmap/pipelines.hpp"
#include "semmap/scene.hpp"

namespace semmap {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// SMAPGRID

inline constexpr char kGridMagic[8] = {'S', 'M', 'A', 'P', 'G', 'R', 'I', 'D'};
inline constexpr std::uint32_t kGridVersion = 1;
inline constexpr std::size_t kLayerNameBytes = 16;

struct GridLayer {
  std::string name;
  std::variant<std::vector<std::uint8_t>, std::vector<float>> data;

  bool is_u8() const { return data.index() == 0; }
  std::size_t size() const { return std::visit([](const auto& v) { return v.size(); }, data); }
  friend bool operator==(const GridLayer&, const GridLayer&) = default;
};

struct GridFile {
  GridSpec grid;
  std::vector<GridLayer> layers;

  const GridLayer* find(const std::string& name) const {
    for (const GridLayer& l : layers)
      if (l.name == name) return &l;
    return nullptr;
  }

  LabelRaster labels() const { return u8_layer("labels"); }
  BinaryRaster observed() const { return u8_layer("observed"); }
  HeightLayer heights() const {
    const GridLayer* l = find("heights");
    if (!l || l->is_u8()) throw Error(ErrorCode::ParseError, "missing f32 layer 'heights'");
    HeightLayer r(grid.u_size, grid.v_size);
    r.data() = std::get<1>(l->data);
    return r;
  }
  SemanticMap semantic_map() const {
    SemanticMap m(grid);
    m.labels = labels();
    return m;
  }

  friend bool operator==(const GridFile&, const GridFile&) = default;

 private:
  Raster<std::uint8_t> u8_layer(const std::string& name) const {
    const GridLayer* l = find(name);
    if (!l || !l->is_u8()) throw Error(ErrorCode::ParseError, "missing u8 layer '" + name + "'");
    Raster<std::uint8_t> r(grid.u_size, grid.v_size);
    r.data() = std::get<0>(l->data);
    return r;
  }
};

/// Mandatory layers from a pipeline result; per-class score layers
/// score00..score12 are added when a memory is present and `with_scores`.
inline GridFile make_grid_file(const SemanticMap& map, const HeightLayer& heights, const BinaryRaster& observed,
                               const SpatialMemory* memory = nullptr, bool with_scores = false) {
  GridFile f;
  f.grid = map.grid;
  f.layers.push_back({"labels", map.labels.data()});
  f.layers.push_back({"heights", heights.data()});
  f.layers.push_back({"observed", observed.data()});
  if (memory && with_scores) {
    for (int c = 0; c < kNumClasses; ++c) {
      std::vector<float> s(memory->all_scores().size());
      for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<float>(memory->all_scores()[i][c]);
      f.layers.push_back({(c < 10 ? "score0" : "score") + std::to_string(c), std::move(s)});
    }
  }
  return f;
}

namespace detail {

inline void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}
inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
 public:
  ByteReader(const std::string& bytes) : b_(bytes) {}
  void seek(std::size_t p) {
    if (p > b_.size()) throw Error(ErrorCode::ParseError, "offset beyond end of file");
    pos_ = p;
  }
  std::size_t pos() const { return pos_; }
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw Error(ErrorCode::ParseError, "unexpected end of file");
  }
  std::uint64_t uint(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int k = 0; k < bytes; ++k) v |= std::uint64_t(static_cast<unsigned char>(b_[pos_ + k])) << (8 * k);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_grid_file(const GridFile& f) {
  const std::size_t n = f.grid.cell_count();
  for (const GridLayer& l : f.layers) {
    if (l.name.empty() || l.name.size() > kLayerNameBytes)
      throw Error(ErrorCode::InvalidArgument, "layer name must be 1..16 bytes: '" + l.name + "'");
    if (l.size() != n) throw Error(ErrorCode::InvalidArgument, "layer '" + l.name + "' size does not match grid");
  }
  std::string out(kGridMagic, sizeof kGridMagic);
  detail::put_u32(out, kGridVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(f.grid.u_size));
  detail::put_u32(out, static_cast<std::uint32_t>(f.grid.v_size));
  detail::put_f64(out, f.grid.resolution);
  detail::put_f64(out, f.grid.origin_x);
  detail::put_f64(out, f.grid.origin_z);
  detail::put_u32(out, static_cast<std::uint32_t>(f.layers.size()));
  constexpr std::size_t entry_bytes = kLayerNameBytes + 1 + 8;
  std::uint64_t offset = out.size() + f.layers.size() * entry_bytes;
  for (const GridLayer& l : f.layers) {
    std::string name = l.name;
    name.resize(kLayerNameBytes, '\0');
    out += name;
    detail::put_u8(out, l.is_u8() ? 0 : 1);
    detail::put_u64(out, offset);
    offset += n * (l.is_u8() ? 1 : 4);
  }
  for (const GridLayer& l : f.layers) {
    if (l.is_u8()) {
      for (std::uint8_t v : std::get<0>(l.data)) detail::put_u8(out, v);
    } else {
      for (float v : std::get<1>(l.data)) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
  }
  return out;
}

inline GridFile decode_grid_file(const std::string& bytes) {
  detail::ByteReader r(bytes);
  if (r.raw(sizeof kGridMagic) != std::string(kGridMagic, sizeof kGridMagic))
    throw Error(ErrorCode::ParseError, "not a SMAPGRID file");
  if (r.uint(4) != kGridVersion) throw Error(ErrorCode::ParseError, "unsupported SMAPGRID version");
  GridFile f;
  const std::uint64_t u = r.uint(4), v = r.uint(4);
  if (u == 0 || v == 0 || u > (1u << 20) || v > (1u << 20)) throw Error(ErrorCode::ParseError, "bad grid size");
  f.grid.u_size = static_cast<int>(u);
  f.grid.v_size = static_cast<int>(v);
  f.grid.resolution = r.f64();
  f.grid.origin_x = r.f64();
  f.grid.origin_z = r.f64();
  if (!(f.grid.resolution > 0.0) || !std::isfinite(f.grid.origin_x) || !std::isfinite(f.grid.origin_z))
    throw Error(ErrorCode::ParseError, "bad grid geometry");
  const std::uint64_t count = r.uint(4);
  if (count > 1024) throw Error(ErrorCode::ParseError, "too many layers");
  const std::size_t n = f.grid.cell_count();
  for (std::uint64_t k = 0; k < count; ++k) {
    std::string name = r.raw(kLayerNameBytes);
    name.resize(std::strlen(name.c_str()));
    const std::uint64_t type = r.uint(1);
    const std::uint64_t offset = r.uint(8);
    if (name.empty()) throw Error(ErrorCode::ParseError, "empty layer name");
    if (f.find(name)) throw Error(ErrorCode::ParseError, "duplicate layer '" + name + "'");
    if (type > 1) throw Error(ErrorCode::ParseError, "unknown layer element type");
    const std::size_t elem = type == 0 ? 1 : 4;
    if (offset > bytes.size() || (bytes.size() - offset) / elem < n)
      throw Error(ErrorCode::ParseError, "layer '" + name + "' payload out of range");
    const std::size_t back = r.pos();
    r.seek(static_cast<std::size_t>(offset));
    GridLayer layer{name, {}};
    if (type == 0) {
      const std::string raw = r.raw(n);
      layer.data = std::vector<std::uint8_t>(raw.begin(), raw.end());
    } else {
      std::vector<float> vals(n);
      for (float& x : vals) x = std::bit_cast<float>(static_cast<std::uint32_t>(r.uint(4)));
      layer.data = std::move(vals);
    }
    r.seek(back);
    f.layers.push_back(std::move(layer));
  }
  const std::pair<const char*, bool> mandatory[] = {{"labels", true}, {"heights", false}, {"observed", true}};
  for (const auto& [name, u8] : mandatory) {
    const GridLayer* l = f.find(name);
    if (!l || l->is_u8() != u8) throw Error(ErrorCode::ParseError, std::string("missing mandatory layer '") + name + "'");
  }
  for (std::uint8_t c : std::get<0>(f.find("labels")->data))
    if (c >= kNumClasses) throw Error(ErrorCode::ParseError, "label outside 0..12");
  return f;
}

inline void save_grid_file(const std::string& path, const GridFile& f) { write_file(path, encode_grid_file(f)); }
inline GridFile load_grid_file(const std::string& path) { return decode_grid_file(read_file(path)); }

// ---------------------------------------------------------------------------
// Palette renders

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr std::array<Rgb, kNumClasses> kPalette = {{
    {255, 255, 255}, {31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},
    {148, 103, 189}, {140, 86, 75},  {227, 119, 194}, {127, 127, 127}, {188, 189, 34},
    {23, 190, 207},  {174, 199, 232}, {255, 187, 120},
}};

/// Binary P6, maxval 255; image row y is raster row v.
inline std::string encode_ppm(const LabelRaster& labels) {
  std::string out = "P6\n" + std::to_string(labels.width()) + " " + std::to_string(labels.height()) + "\n255\n";
  out.reserve(out.size() + labels.size() * 3);
  for (ClassId c : labels.data()) {
    if (c >= kNumClasses) throw Error(ErrorCode::InvalidArgument, "label outside 0..12");
    for (std::uint8_t b : kPalette[c]) out.push_back(static_cast<char>(b));
  }
  return out;
}

inline void write_ppm(const LabelRaster& labels, const std::string& path) { write_file(path, encode_ppm(labels)); }

/// Reads a palette P6 back into labels; colours outside the palette are an error.
inline LabelRaster decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw Error(ErrorCode::ParseError, "truncated PPM header");
    return bytes.substr(start, pos - start);
  };
  if (token() != "P6") throw Error(ErrorCode::ParseError, "not a binary PPM");
  const long long w = parse_int(token()), h = parse_int(token()), maxval = parse_int(token());
  if (w <= 0 || h <= 0 || maxval != 255) throw Error(ErrorCode::ParseError, "unsupported PPM dimensions or maxval");
  ++pos;  // single whitespace before the raster
  if (bytes.size() < pos || (bytes.size() - pos) / 3 < static_cast<std::size_t>(w * h))
    throw Error(ErrorCode::ParseError, "truncated PPM raster");
  std::map<Rgb, ClassId> inverse;
  for (int c = 0; c < kNumClasses; ++c) inverse[kPalette[c]] = static_cast<ClassId>(c);
  LabelRaster out(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Rgb px = {static_cast<std::uint8_t>(bytes[pos + 3 * i]), static_cast<std::uint8_t>(bytes[pos + 3 * i + 1]),
                    static_cast<std::uint8_t>(bytes[pos + 3 * i + 2])};
    const auto it = inverse.find(px);
    if (it == inverse.end()) throw Error(ErrorCode::ParseError, "colour not in palette");
    out[i] = it->second;
  }
  return out;
}

inline LabelRaster read_ppm(const std::string& path) { return decode_ppm(read_file(path)); }

// ---------------------------------------------------------------------------
// Config: flat `key = value` lines, `#` starts a comment.

struct BuildConfig {
  PipelineConfig pipeline;
  RenderSettings render;
};

inline std::map<std::string, std::string> parse_key_values(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected key = value");
    const auto key = split_ws(line.substr(0, eq));
    const auto value = split_ws(line.substr(eq + 1));
    if (key.size() != 1 || value.size() != 1)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected key = value");
    if (!kv.emplace(key[0], value[0]).second)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": duplicate key '" + key[0] + "'");
  }
  return kv;
}

namespace detail {

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw Error(ErrorCode::ParseError, "expected boolean, got '" + s + "'");
}

inline int parse_nonneg(const std::string& key, const std::string& s) {
  const long long v = parse_int(s);
  if (v < 0 || v > 1'000'000) throw Error(ErrorCode::ParseError, key + " out of range");
  return static_cast<int>(v);
}

inline double parse_prob(const std::string& key, const std::string& s) {
  const double v = parse_double(s);
  if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::ParseError, key + " must lie in [0, 1]");
  return v;
}

}  // namespace detail

/// Unknown keys are rejected. `pipeline` is optional (the CLI flag wins).
inline BuildConfig parse_config(std::istream& is) {
  BuildConfig c;
  std::string aggregator = aggregator_name(c.pipeline.aggregator);
  double ema_alpha = 0.3;
  for (const auto& [k, v] : parse_key_values(is)) {
    auto& s2p = c.pipeline.seg2proj;
    auto& p2s = c.pipeline.proj2seg;
    auto& nm = c.pipeline.noise;
    if (k == "pipeline") c.pipeline.kind = parse_pipeline_kind(v);
    else if (k == "aggregator") aggregator = v;
    else if (k == "ema_alpha") ema_alpha = detail::parse_prob(k, v);
    else if (k == "smoothing") {
      if (v == "none") c.pipeline.smoothing.kind = Smoothing::Kind::None;
      else if (v == "box_vote") c.pipeline.smoothing.kind = Smoothing::Kind::BoxVote;
      else throw Error(ErrorCode::ParseError, "smoothing must be none or box_vote");
    }
    else if (k == "smoothing_k") c.pipeline.smoothing.k = std::max(1, detail::parse_nonneg(k, v));
    else if (k == "downsample_factor") s2p.downsample_factor = std::max(1, detail::parse_nonneg(k, v));
    else if (k == "fill_median_k") s2p.fill_median_k = detail::parse_nonneg(k, v);
    else if (k == "post_median_k") s2p.post_median_k = detail::parse_nonneg(k, v);
    else if (k == "erosion_side") s2p.erosion_side = detail::parse_nonneg(k, v);
    else if (k == "cross_frame_max_height") s2p.cross_frame_max_height = detail::parse_bool(v);
    else if (k == "noise_band") nm.boundary_band = detail::parse_nonneg(k, v);
    else if (k == "noise_boundary_p") nm.boundary_flip_prob = detail::parse_prob(k, v);
    else if (k == "noise_uniform_q") nm.uniform_flip_prob = detail::parse_prob(k, v);
    else if (k == "noise_seed") nm.seed = static_cast<std::uint64_t>(detail::parse_nonneg(k, v));
    else if (k == "labeler_height_band") {
      p2s.height_band = parse_double(v);
      if (!(p2s.height_band > 0.0)) throw Error(ErrorCode::ParseError, "labeler_height_band must be positive");
    }
    else if (k == "labeler_height_bands") p2s.height_bands = std::max(1, detail::parse_nonneg(k, v));
    else if (k == "labeler_density_window") p2s.density_window = std::max(1, detail::parse_nonneg(k, v));
    else if (k == "labeler_density_bins") p2s.density_bins = std::max(1, detail::parse_nonneg(k, v));
    else if (k == "labeler_train_scenes") p2s.train_scenes = std::max(1, detail::parse_nonneg(k, v));
    else if (k == "labeler_train_seed") p2s.train_seed = static_cast<std::uint64_t>(detail::parse_nonneg(k, v));
    else if (k == "frame_stride") c.render.frame_stride = std::max(1, detail::parse_nonneg(k, v));
    else if (k == "max_range") {
      c.render.max_range = parse_double(v);
      if (!(c.render.max_range > 0.0)) throw Error(ErrorCode::ParseError, "max_range must be positive");
    }
    else throw Error(ErrorCode::ParseError, "unknown config key '" + k + "'");
  }
  try {
    c.pipeline.aggregator = parse_aggregator(aggregator, ema_alpha);
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return c;
}

inline BuildConfig load_config(const std::string& path) {
  std::istringstream is(read_file(path));
  return parse_config(is);
}

// ---------------------------------------------------------------------------
// Reports: one `metric = value` line each; suite summaries add `± se`.

inline void write_seg_report(std::ostream& os, const SegReport& r) {
  const std::pair<const char*, double> head[] = {{"acc", r.acc},
                                                 {"mrecall", r.mean_recall},
                                                 {"mprecision", r.mean_precision},
                                                 {"miou", r.mean_iou},
                                                 {"mbf1", r.mean_bf1}};
  for (const auto& [name, v] : head) os << name << " = " << format_double(v) << '\n';
  os << "cells = " << r.evaluated_cells << '\n';
  for (int c = 1; c < kNumClasses; ++c) {
    const ClassScores& s = r.per_class[c];
    if (!s.in_gt && !s.in_pred) continue;
    const std::string n = kClassNames[c];
    os << "iou." << n << " = " << format_double(s.iou) << '\n'
       << "recall." << n << " = " << format_double(s.recall) << '\n'
       << "precision." << n << " = " << format_double(s.precision) << '\n'
       << "bf1." << n << " = " << format_double(s.bf1) << '\n';
  }
}

inline void write_summary(std::ostream& os, const std::vector<MetricSummary>& rows) {
  for (const MetricSummary& m : rows)
    os << m.name << " = " << format_double(m.mean) << " ± " << format_double(m.se) << '\n';
}

/// Parses the leading number of each `metric = value [± se]` line.
inline std::map<std::string, double> read_report(std::istream& is) {
  std::map<std::string, double> out;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (split_ws(line).empty()) continue;
    if (eq == std::string::npos) throw Error(ErrorCode::ParseError, "bad report line: " + line);
    const auto key = split_ws(line.substr(0, eq));
    const auto val = split_ws(line.substr(eq + 1));
    if (key.size() != 1 || val.empty()) throw Error(ErrorCode::ParseError, "bad report line: " + line);
    out[key[0]] = parse_double(val[0]);
  }
  return out;
}

}  // namespace semmap

#endif  // SEMMAP_IO_HPP_
