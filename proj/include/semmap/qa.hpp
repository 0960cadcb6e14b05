// Counting questions over top-down maps: connected-component instance counts,
// a most-frequent-answer prior, and QA metrics.
#ifndef SEMMAP_QA_HPP_
#define SEMMAP_QA_HPP_

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "semmap/core.hpp"
#include "semmap/imgproc.hpp"
#include "semmap/map.hpp"
#include "semmap/scene.hpp"

namespace semmap {

/// Answers are 0..19, with 20 standing for "20+".
inline constexpr int kMaxAnswer = 20;

inline int clip_answer(int count) { return std::clamp(count, 0, kMaxAnswer); }

inline std::string answer_to_string(int a) { return a >= kMaxAnswer ? "20+" : std::to_string(a); }

struct CountOptions {
  int connectivity = 8;
  int min_area_cells = 25;
  int window_cells = 0;  // > 0: sum counts over non-overlapping windows of this side
};

namespace detail {

inline int count_components(const BinaryRaster& mask, int connectivity, int min_area) {
  const Components cc = connected_components(mask, connectivity);
  int n = 0;
  for (int a : cc.areas) n += a >= min_area;
  return n;
}

}  // namespace detail

/// Target-class components of at least `min_area_cells`, clipped to the
/// answer domain. In window mode, components are counted per tile and summed,
/// so instances straddling tile borders count more than once.
inline int count_instances(const SemanticMap& map, ClassId target, const CountOptions& opt = {}) {
  const LabelRaster& l = map.labels;
  if (opt.window_cells <= 0) {
    BinaryRaster mask(l.width(), l.height(), 0);
    for (std::size_t i = 0; i < l.size(); ++i) mask[i] = l[i] == target;
    return clip_answer(detail::count_components(mask, opt.connectivity, opt.min_area_cells));
  }
  const int w = opt.window_cells;
  int total = 0;
  for (int y0 = 0; y0 < l.height(); y0 += w)
    for (int x0 = 0; x0 < l.width(); x0 += w) {
      const int tw = std::min(w, l.width() - x0), th = std::min(w, l.height() - y0);
      BinaryRaster tile(tw, th, 0);
      for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x) tile(x, y) = l(x0 + x, y0 + y) == target;
      total += detail::count_components(tile, opt.connectivity, opt.min_area_cells);
    }
  return clip_answer(total);
}

/// Answer frequencies per target class, from training scenes.
using AnswerTable = std::map<ClassId, std::map<int, long long>>;

inline void add_scene_answers(AnswerTable& table, const SceneModel& scene) {
  for (int c = 1; c < kNumClasses; ++c)
    table[static_cast<ClassId>(c)][clip_answer(scene.count_class(static_cast<ClassId>(c)))] += 1;
}

/// Most frequent training answer per class; ties to the smaller count.
inline std::map<ClassId, int> prior_baseline(const AnswerTable& table) {
  if (table.empty()) throw Error(ErrorCode::EmptyTable, "answer table is empty");
  std::map<ClassId, int> out;
  for (const auto& [cls, counts] : table) {
    if (counts.empty()) throw Error(ErrorCode::EmptyTable, "no answers for class " + std::to_string(cls));
    int best = counts.begin()->first;
    long long best_n = -1;
    for (const auto& [answer, n] : counts)
      if (n > best_n) {
        best = answer;
        best_n = n;
      }
    out[cls] = best;
  }
  return out;
}

struct CountQuestion {
  int id = 0;
  ClassId target = 1;
};

struct QaSummary {
  double accuracy = 0;
  double class_balanced_accuracy = 0;
  double rmse = 0;
};

/// `targets` gives the class each question asks about (for class balancing).
inline QaSummary eval_qa(const std::vector<int>& pred, const std::vector<int>& gt,
                         const std::vector<ClassId>& targets) {
  if (pred.size() != gt.size() || targets.size() != gt.size())
    throw Error(ErrorCode::LengthMismatch, "prediction and ground-truth answer lists differ in length");
  QaSummary s;
  if (gt.empty()) return s;
  std::map<ClassId, std::pair<long long, long long>> per_class;  // correct, total
  double sq = 0;
  long long correct = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const int p = clip_answer(pred[i]), g = clip_answer(gt[i]);
    const bool ok = p == g;
    correct += ok;
    per_class[targets[i]].first += ok;
    per_class[targets[i]].second += 1;
    sq += double(p - g) * (p - g);
  }
  s.accuracy = double(correct) / gt.size();
  for (const auto& [c, ct] : per_class) s.class_balanced_accuracy += double(ct.first) / ct.second;
  s.class_balanced_accuracy /= static_cast<double>(per_class.size());
  s.rmse = std::sqrt(sq / gt.size());
  return s;
}

// ---------------------------------------------------------------------------
// SMAPQA questions and answer rows

inline void write_questions(std::ostream& os, const std::vector<CountQuestion>& qs) {
  os << "SMAPQA 1\n";
  for (const CountQuestion& q : qs) os << "q " << q.id << " count " << int(q.target) << '\n';
}

inline std::vector<CountQuestion> read_questions(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || split_ws(line) != std::vector<std::string>{"SMAPQA", "1"})
    throw Error(ErrorCode::ParseError, "missing SMAPQA 1 header");
  std::vector<CountQuestion> qs;
  while (std::getline(is, line)) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 4 || tok[0] != "q" || tok[2] != "count")
      throw Error(ErrorCode::ParseError, "bad question line: " + line);
    const long long c = parse_int(tok[3]);
    if (c < 1 || c > kNumObjectClasses) throw Error(ErrorCode::ParseError, "question class outside 1..12");
    qs.push_back({static_cast<int>(parse_int(tok[1])), static_cast<ClassId>(c)});
  }
  return qs;
}

inline void write_answers(std::ostream& os, const std::vector<std::pair<int, int>>& answers) {
  for (const auto& [id, a] : answers) os << "a " << id << ' ' << a << '\n';
}

}  // namespace semmap

#endif  // SEMMAP_QA_HPP_
