#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftlab/prediction.hpp"

namespace shiftlab {

enum class ShiftKind { base, V2, S, R, A, custom };

inline const char* to_string(ShiftKind k) {
  switch (k) {
    case ShiftKind::base: return "base";
    case ShiftKind::V2: return "V2";
    case ShiftKind::S: return "S";
    case ShiftKind::R: return "R";
    case ShiftKind::A: return "A";
    case ShiftKind::custom: return "custom";
  }
  return "?";
}

inline ShiftKind parse_shift_kind(std::string_view s) {
  if (s == "base") return ShiftKind::base;
  if (s == "V2" || s == "v2") return ShiftKind::V2;
  if (s == "S" || s == "s") return ShiftKind::S;
  if (s == "R" || s == "r") return ShiftKind::R;
  if (s == "A" || s == "a") return ShiftKind::A;
  if (s == "custom") return ShiftKind::custom;
  throw std::invalid_argument("unknown shift kind: " + std::string(s));
}

class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

struct EvalSample {
  std::string sample_id;
  int32_t gt = 0;
};

struct EvalSet {
  std::string id;
  std::string labelset_id;
  ShiftKind shift_kind = ShiftKind::custom;
  std::vector<EvalSample> samples;

  static EvalSet parse(const nlohmann::json& j) {
    EvalSet e;
    e.id = j.value("id", std::string{});
    e.labelset_id = j.value("labelset_id", std::string{});
    e.shift_kind = parse_shift_kind(j.value("shift_kind", std::string{"custom"}));
    std::unordered_map<std::string, size_t> seen;
    for (const auto& s : j.at("samples")) {
      EvalSample sample{s.at("sample_id").get<std::string>(), s.at("gt").get<int32_t>()};
      if (!seen.emplace(sample.sample_id, e.samples.size()).second)
        throw EvalError("eval set " + e.id + " has duplicate sample " + sample.sample_id);
      e.samples.push_back(std::move(sample));
    }
    return e;
  }

  static EvalSet load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EvalError("cannot open eval set file: " + path);
    nlohmann::json j;
    in >> j;
    return parse(j);
  }
};

// Accuracy, per-class accuracy, and a square confusion table over the scored
// class universe. Rows are ground truth, columns predictions; abstentions are
// tallied per row beside the table so row sums (table + abstains) always equal
// the per-class sample counts.
struct EvalResult {
  std::string model_id;
  std::string eval_set_id;
  std::string checkpoint_tag;
  ShiftKind shift_kind = ShiftKind::custom;
  LabelSet classes;
  std::vector<int64_t> confusion;  // size() x size(), row-major
  std::vector<int64_t> abstained;  // per gt class
  uint64_t total = 0;
  uint64_t surplus_predictions = 0;

  int64_t& cell(size_t gt_pos, size_t pred_pos) {
    return confusion[gt_pos * classes.size() + pred_pos];
  }
  int64_t cell(size_t gt_pos, size_t pred_pos) const {
    return confusion[gt_pos * classes.size() + pred_pos];
  }

  int64_t trace() const {
    int64_t t = 0;
    for (size_t i = 0; i < classes.size(); ++i) t += cell(i, i);
    return t;
  }

  int64_t row_count(size_t gt_pos) const {
    int64_t n = abstained[gt_pos];
    for (size_t j = 0; j < classes.size(); ++j) n += cell(gt_pos, j);
    return n;
  }

  double accuracy() const {
    return total ? static_cast<double>(trace()) / static_cast<double>(total) : 0.0;
  }

  // Classes with at least one sample; fraction of them predicted exactly.
  std::map<int32_t, double> per_class_accuracy() const {
    std::map<int32_t, double> out;
    for (size_t i = 0; i < classes.size(); ++i) {
      int64_t n = row_count(i);
      if (n > 0)
        out[classes.at(i).id] = static_cast<double>(cell(i, i)) / static_cast<double>(n);
    }
    return out;
  }
};

// Scores one model/checkpoint's predictions on one eval set. When
// `restrict_ids` is given (the shared-class evaluation for R/A-style shifts),
// samples whose gt falls outside it never enter the denominator and
// predictions are remapped onto the restriction.
inline EvalResult score_predictions(std::span<const PredictionRecord> preds,
                                    const EvalSet& evalset, const LabelSet& labelset,
                                    std::span<const int32_t> restrict_ids = {},
                                    std::string model_id = {}) {
  EvalResult r;
  r.model_id = std::move(model_id);
  r.eval_set_id = evalset.id;
  r.shift_kind = evalset.shift_kind;
  // A restriction covering the whole set is no restriction.
  if (restrict_ids.empty()) {
    r.classes = labelset;
  } else {
    LabelSet restricted = subset(labelset, restrict_ids);
    r.classes = restricted.size() == labelset.size() ? labelset : std::move(restricted);
  }
  r.confusion.assign(r.classes.size() * r.classes.size(), 0);
  r.abstained.assign(r.classes.size(), 0);

  std::unordered_map<std::string, const PredictionRecord*> by_sample;
  by_sample.reserve(preds.size());
  bool first = true;
  for (const PredictionRecord& p : preds) {
    if (!by_sample.emplace(p.sample_id, &p).second)
      throw EvalError("duplicate prediction for sample " + p.sample_id + " on eval set " +
                      evalset.id);
    if (!first && p.checkpoint_tag != r.checkpoint_tag)
      throw EvalError("mixed checkpoint tags in one scoring call on eval set " + evalset.id);
    r.checkpoint_tag = p.checkpoint_tag;
    first = false;
  }

  size_t used = 0;
  for (const EvalSample& s : evalset.samples) {
    if (!labelset.contains(s.gt))
      throw EvalError("eval set " + evalset.id + " sample " + s.sample_id + " has gt " +
                      std::to_string(s.gt) + " outside label set " + labelset.id());
    auto pos = r.classes.position(s.gt);
    if (!pos) continue;  // gt outside the shared classes
    auto it = by_sample.find(s.sample_id);
    if (it == by_sample.end())
      throw EvalError("missing prediction for sample " + s.sample_id + " on eval set " +
                      evalset.id);
    ++used;
    ++r.total;
    std::optional<int32_t> predicted = resolve_prediction(*it->second, labelset, r.classes);
    if (predicted) {
      r.cell(*pos, *r.classes.position(*predicted)) += 1;
    } else {
      r.abstained[*pos] += 1;
    }
  }
  r.surplus_predictions = preds.size() - used;
  return r;
}

inline nlohmann::json eval_result_to_json(const EvalResult& r, bool include_confusion = true) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [c, acc] : r.per_class_accuracy()) per_class[std::to_string(c)] = acc;
  nlohmann::json j{{"model_id", r.model_id},
                   {"eval_set", r.eval_set_id},
                   {"checkpoint", r.checkpoint_tag},
                   {"shift", to_string(r.shift_kind)},
                   {"labelset", r.classes.id()},
                   {"classes", r.classes.ids()},
                   {"total", r.total},
                   {"accuracy", r.accuracy()},
                   {"per_class_accuracy", std::move(per_class)},
                   {"surplus_predictions", r.surplus_predictions}};
  if (include_confusion) {
    nlohmann::json rows = nlohmann::json::array();
    for (size_t i = 0; i < r.classes.size(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (size_t jx = 0; jx < r.classes.size(); ++jx) row.push_back(r.cell(i, jx));
      rows.push_back(std::move(row));
    }
    j["confusion"] = std::move(rows);
    j["abstained"] = r.abstained;
  }
  return j;
}

}  // namespace shiftlab
