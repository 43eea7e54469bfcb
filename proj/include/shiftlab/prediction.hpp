#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftlab/label_set.hpp"

namespace shiftlab {

enum class PredictionKind { dense, topk, argmax, abstain };

class RemapError : public std::runtime_error {
 public:
  explicit RemapError(const std::string& what) : std::runtime_error(what) {}
};

// A model's scores on one sample: a dense vector over a label set, a top-k
// list, or a bare argmax. `abstain` only arises from top-k remapping where no
// retained class appears; it always scores as incorrect.
struct PredictionRecord {
  std::string sample_id;
  std::string eval_set_id;
  std::string checkpoint_tag;
  PredictionKind kind = PredictionKind::argmax;
  std::vector<double> dense;                        // by label set position
  std::vector<std::pair<int32_t, double>> topk;     // sorted descending by score
  int32_t argmax_class = -1;
};

inline PredictionRecord parse_prediction_record(const nlohmann::json& j) {
  PredictionRecord p;
  p.sample_id = j.at("sample_id").get<std::string>();
  p.eval_set_id = j.value("eval_set", std::string{});
  p.checkpoint_tag = j.value("checkpoint", std::string{});
  const nlohmann::json& scores = j.at("scores");
  if (auto it = scores.find("dense"); it != scores.end()) {
    p.kind = PredictionKind::dense;
    p.dense = it->get<std::vector<double>>();
    for (double v : p.dense)
      if (!std::isfinite(v))
        throw std::runtime_error("non-finite dense score for sample " + p.sample_id);
  } else if (auto it = scores.find("topk"); it != scores.end()) {
    p.kind = PredictionKind::topk;
    for (const auto& e : *it) {
      p.topk.emplace_back(e.at(0).get<int32_t>(), e.at(1).get<double>());
    }
    for (size_t i = 0; i < p.topk.size(); ++i) {
      if (!std::isfinite(p.topk[i].second))
        throw std::runtime_error("non-finite top-k score for sample " + p.sample_id);
      if (i > 0 && p.topk[i].second > p.topk[i - 1].second)
        throw std::runtime_error("top-k scores not descending for sample " + p.sample_id);
    }
    if (p.topk.empty()) throw std::runtime_error("empty top-k list for sample " + p.sample_id);
  } else if (auto it = scores.find("argmax"); it != scores.end()) {
    p.kind = PredictionKind::argmax;
    p.argmax_class = it->get<int32_t>();
  } else {
    throw std::runtime_error("prediction for sample " + p.sample_id +
                             " has none of dense/topk/argmax");
  }
  return p;
}

inline PredictionRecord parse_prediction_line(std::string_view line) {
  return parse_prediction_record(nlohmann::json::parse(line));
}

namespace detail {

// Argmax over the positions of `allowed` within `set`; exact ties go to the
// lowest class id so results are stable across platforms.
inline int32_t masked_argmax(const std::vector<double>& scores, const LabelSet& set,
                             const LabelSet& allowed) {
  int32_t best_class = -1;
  double best_score = 0.0;
  for (const auto& c : allowed.classes()) {
    size_t pos = *set.position(c.id);
    double s = scores[pos];
    if (best_class == -1 || s > best_score || (s == best_score && c.id < best_class)) {
      best_class = c.id;
      best_score = s;
    }
  }
  return best_class;
}

}  // namespace detail

// Resolves a prediction over `set` to a predicted class within `allowed`
// (pass `set` itself for an unrestricted evaluation). nullopt = abstain.
inline std::optional<int32_t> resolve_prediction(const PredictionRecord& pred,
                                                 const LabelSet& set,
                                                 const LabelSet& allowed) {
  switch (pred.kind) {
    case PredictionKind::dense:
      if (pred.dense.size() != set.size()) {
        throw std::runtime_error("dense prediction for sample " + pred.sample_id + " has " +
                                 std::to_string(pred.dense.size()) + " scores, label set has " +
                                 std::to_string(set.size()));
      }
      return detail::masked_argmax(pred.dense, set, allowed);
    case PredictionKind::topk:
      for (const auto& [cls, score] : pred.topk) {
        if (!set.contains(cls)) {
          throw std::runtime_error("top-k class " + std::to_string(cls) + " of sample " +
                                   pred.sample_id + " not in label set " + set.id());
        }
        if (allowed.contains(cls)) return cls;
      }
      return std::nullopt;  // nothing retained: abstain-unknown
    case PredictionKind::argmax:
      if (!set.contains(pred.argmax_class)) {
        throw std::runtime_error("argmax class " + std::to_string(pred.argmax_class) +
                                 " of sample " + pred.sample_id + " not in label set " +
                                 set.id());
      }
      if (allowed.size() != set.size()) {
        throw RemapError("argmax-only prediction for sample " + pred.sample_id +
                         " cannot be remapped onto a reduced label set");
      }
      return pred.argmax_class;
    case PredictionKind::abstain:
      return std::nullopt;
  }
  return std::nullopt;
}

// Restricts a prediction over `parent` to `target`. Dense scores keep their
// masked argmax; top-k keeps its best retained class or abstains; a bare
// argmax carries too little information to remap and is rejected.
inline PredictionRecord remap_prediction(const PredictionRecord& pred, const LabelSet& parent,
                                         const LabelSet& target) {
  PredictionRecord out;
  out.sample_id = pred.sample_id;
  out.eval_set_id = pred.eval_set_id;
  out.checkpoint_tag = pred.checkpoint_tag;
  std::optional<int32_t> cls = resolve_prediction(pred, parent, target);
  if (cls) {
    out.kind = PredictionKind::argmax;
    out.argmax_class = *cls;
  } else {
    out.kind = PredictionKind::abstain;
  }
  return out;
}

}  // namespace shiftlab
