#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftlab/dictionary.hpp"

namespace shiftlab {

enum class StrategyKind { strict, single_class, multi_class };

inline const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::strict: return "strict";
    case StrategyKind::single_class: return "sc";
    case StrategyKind::multi_class: return "mc";
  }
  return "?";
}

inline StrategyKind parse_strategy(std::string_view s) {
  if (s == "strict") return StrategyKind::strict;
  if (s == "sc" || s == "single_class") return StrategyKind::single_class;
  if (s == "mc" || s == "multi_class") return StrategyKind::multi_class;
  throw std::invalid_argument("unknown match strategy: " + std::string(s));
}

struct MatchStrategy {
  StrategyKind kind = StrategyKind::single_class;
  int mc_cap = 25;  // only consulted under multi_class
};

struct LabelDecision {
  std::vector<int32_t> labels;
  bool dropped = true;  // dropped iff labels is empty
};

// Resolves matched classes into labels.
//   strict: a label only when exactly one distinct class matched;
//   sc:     the first matching class in caption position order;
//   mc:     the first mc_cap distinct classes in caption position order
//           (repeated terms for one class already collapsed upstream).
inline LabelDecision decide_label(const MatchOutcome& outcome, MatchStrategy strategy) {
  LabelDecision d;
  const auto& dc = outcome.distinct_classes;
  switch (strategy.kind) {
    case StrategyKind::strict:
      if (dc.size() == 1) d.labels = dc;
      break;
    case StrategyKind::single_class:
      if (!dc.empty()) d.labels.assign(dc.begin(), dc.begin() + 1);
      break;
    case StrategyKind::multi_class: {
      size_t n = std::min(dc.size(), static_cast<size_t>(std::max(strategy.mc_cap, 1)));
      d.labels.assign(dc.begin(), dc.begin() + n);
      break;
    }
  }
  d.dropped = d.labels.empty();
  return d;
}

enum class ExclusionMode { per_class, global_drop };

inline const char* to_string(ExclusionMode m) {
  return m == ExclusionMode::per_class ? "per-class" : "global";
}

inline ExclusionMode parse_exclusion_mode(std::string_view s) {
  if (s == "per-class" || s == "per_class") return ExclusionMode::per_class;
  if (s == "global" || s == "global_drop") return ExclusionMode::global_drop;
  throw std::invalid_argument("unknown exclusion mode: " + std::string(s));
}

struct FilterVerdict {
  bool drop_sample = false;                // global_drop: any matching term occurred
  std::vector<int32_t> excluded_classes;   // per_class: classes disqualified here
};

inline FilterVerdict exclusion_filter(std::span<const TokenId> tokens,
                                      const TermDictionary& dict, ExclusionMode mode) {
  ScanResult scan = dict.scan(tokens);
  FilterVerdict v;
  if (mode == ExclusionMode::global_drop) {
    v.drop_sample = !scan.outcome.spans.empty();
  } else {
    v.excluded_classes = std::move(scan.excluded_classes);
  }
  return v;
}

// Removes every span of an excluded class and rebuilds the distinct list.
inline MatchOutcome apply_class_exclusion(const MatchOutcome& outcome,
                                          std::span<const int32_t> excluded) {
  if (excluded.empty()) return outcome;
  MatchOutcome filtered;
  for (const TokenSpan& s : outcome.spans) {
    if (std::find(excluded.begin(), excluded.end(), s.class_id) == excluded.end())
      filtered.spans.push_back(s);
  }
  for (const TokenSpan& s : filtered.spans) {
    auto& dc = filtered.distinct_classes;
    if (std::find(dc.begin(), dc.end(), s.class_id) == dc.end()) dc.push_back(s.class_id);
  }
  return filtered;
}

// One emitted row of the label output: decision plus the admitted evidence.
struct LabeledSample {
  std::string sample_id;
  std::vector<int32_t> labels;
  bool dropped = true;
  std::vector<TokenSpan> spans;
  std::optional<int32_t> gt_label;
};

// Full per-record pipeline: tokenize, scan once, filter, decide.
// Under global_drop the row is a keep/drop verdict: a kept row matched
// nothing and so carries no labels; a dropped row keeps its spans as the
// evidence that triggered the drop.
inline LabeledSample label_record(const CaptionRecord& rec, const TermDictionary& dict,
                                  const std::vector<CaptionField>& field_order,
                                  MatchStrategy strategy, ExclusionMode mode) {
  std::vector<TokenId> tokens = dict.tokenize_caption(rec, field_order);
  ScanResult scan = dict.scan(tokens);

  LabeledSample out;
  out.sample_id = rec.sample_id;
  out.gt_label = rec.gt_label;

  if (mode == ExclusionMode::global_drop) {
    out.dropped = !scan.outcome.spans.empty();
    out.spans = std::move(scan.outcome.spans);
    return out;
  }

  MatchOutcome admitted = apply_class_exclusion(scan.outcome, scan.excluded_classes);
  LabelDecision decision = decide_label(admitted, strategy);
  out.labels = std::move(decision.labels);
  out.dropped = decision.dropped;
  out.spans = std::move(admitted.spans);
  return out;
}

inline void append_label_row_json(const LabeledSample& s, const TermDictionary& dict,
                                  std::string& out) {
  nlohmann::json spans = nlohmann::json::array();
  for (const TokenSpan& sp : s.spans) {
    spans.push_back({{"term", dict.term_text(sp.pattern)},
                     {"class", sp.class_id},
                     {"start", sp.start}});
  }
  nlohmann::json row{{"sample_id", s.sample_id},
                     {"labels", s.labels},
                     {"dropped", s.dropped},
                     {"spans", std::move(spans)}};
  out += row.dump();
  out.push_back('\n');
}

}  // namespace shiftlab
