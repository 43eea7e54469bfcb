#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftlab/labeling.hpp"

namespace shiftlab {

// Labeling quality counters. All fields are associative sums, so partial
// reports from parallel workers merge in any order.
struct AuditReport {
  uint64_t total = 0;       // records processed (malformed lines excluded)
  uint64_t labeled = 0;     // records with at least one label
  uint64_t kept = 0;        // records not dropped (differs from labeled only under global_drop)
  uint64_t correct = 0;     // labeled records whose gt is among the labels
  uint64_t gt_present = 0;  // records carrying a ground-truth label
  uint64_t record_errors = 0;

  double coverage() const { return total ? static_cast<double>(labeled) / total : 0.0; }
  double label_accuracy() const {
    return labeled ? static_cast<double>(correct) / labeled : 0.0;
  }
  double utilization() const { return total ? static_cast<double>(correct) / total : 0.0; }
  // The alternate reading of "label accuracy" with all samples in the
  // denominator; numerically identical to utilization, reported alongside it.
  double label_accuracy_over_total() const { return utilization(); }

  void add(const LabeledSample& s) {
    ++total;
    if (!s.dropped) ++kept;
    if (s.gt_label) ++gt_present;
    if (!s.labels.empty()) {
      ++labeled;
      if (s.gt_label &&
          std::find(s.labels.begin(), s.labels.end(), *s.gt_label) != s.labels.end())
        ++correct;
    }
  }

  void merge(const AuditReport& o) {
    total += o.total;
    labeled += o.labeled;
    kept += o.kept;
    correct += o.correct;
    gt_present += o.gt_present;
    record_errors += o.record_errors;
  }
};

struct IdentityVerdict {
  bool consistent = false;
  double difference = 0.0;
};

// utilization must equal label_accuracy x coverage. The default tolerance
// absorbs 3-decimal rounding of published numbers.
inline IdentityVerdict audit_identity_check(double label_accuracy, double coverage,
                                            double utilization, double tolerance = 1e-3) {
  double diff = std::fabs(label_accuracy * coverage - utilization);
  return {diff <= tolerance, diff};
}

inline IdentityVerdict audit_identity_check(const AuditReport& r, double tolerance = 1e-3) {
  return audit_identity_check(r.label_accuracy(), r.coverage(), r.utilization(), tolerance);
}

// Per-class count of emitted (sample, label) pairs. Classes of the label
// universe with no occurrences are reported as zero.
struct ClassHistogram {
  std::map<int32_t, uint64_t> counts;
  uint64_t total = 0;

  void init_universe(const std::vector<TermDictionary::ClassInfo>& classes) {
    for (const auto& c : classes) counts.emplace(c.id, 0);
  }

  void add_label(int32_t class_id) {
    ++counts[class_id];
    ++total;
  }

  void add(const LabeledSample& s) {
    for (int32_t c : s.labels) add_label(c);
  }

  void merge(const ClassHistogram& o) {
    for (const auto& [c, n] : o.counts) counts[c] += n;
    total += o.total;
  }
};

struct LabeledManifest {
  std::string manifest_id;
  MatchStrategy strategy;
  std::vector<LabeledSample> samples;
};

inline ClassHistogram class_frequency(const LabeledManifest& manifest,
                                      const TermDictionary* dict = nullptr) {
  ClassHistogram h;
  if (dict) h.init_universe(dict->classes());
  for (const LabeledSample& s : manifest.samples) h.add(s);
  return h;
}

struct LabelingResult {
  LabeledManifest manifest;
  AuditReport audit;
  ClassHistogram histogram;
};

// In-memory variant of the labeling pipeline; the streaming equivalent lives
// in pipeline.hpp.
inline LabelingResult apply_labeling(std::span<const CaptionRecord> records,
                                     const TermDictionary& dict, MatchStrategy strategy,
                                     ExclusionMode mode,
                                     const std::vector<CaptionField>& field_order) {
  LabelingResult r;
  r.manifest.strategy = strategy;
  r.histogram.init_universe(dict.classes());
  for (const CaptionRecord& rec : records) {
    LabeledSample s = label_record(rec, dict, field_order, strategy, mode);
    r.audit.add(s);
    r.histogram.add(s);
    r.manifest.samples.push_back(std::move(s));
  }
  return r;
}

// Dataset size in multiples of the 120,000-sample unit.
inline constexpr uint64_t kBudgetUnitSamples = 120000;

struct DataBudget {
  uint64_t sample_count = 0;
  double multiple() const {
    return static_cast<double>(sample_count) / static_cast<double>(kBudgetUnitSamples);
  }
};

inline DataBudget data_budget(uint64_t sample_count) { return DataBudget{sample_count}; }

inline nlohmann::json audit_to_json(const AuditReport& r) {
  bool have_gt = r.gt_present > 0;
  nlohmann::json j{{"total", r.total},
                   {"labeled", r.labeled},
                   {"kept", r.kept},
                   {"gt_present", r.gt_present},
                   {"record_errors", r.record_errors},
                   {"coverage", r.coverage()},
                   {"budget_multiple", data_budget(r.total).multiple()}};
  if (have_gt) {
    j["correct"] = r.correct;
    j["label_accuracy"] = r.label_accuracy();
    j["label_accuracy_over_total"] = r.label_accuracy_over_total();
    j["utilization"] = r.utilization();
    j["identity_consistent"] = audit_identity_check(r).consistent;
  } else {
    j["correct"] = nullptr;
    j["label_accuracy"] = nullptr;
    j["label_accuracy_over_total"] = nullptr;
    j["utilization"] = nullptr;
  }
  return j;
}

inline std::string audit_to_text(const AuditReport& r) {
  char buf[512];
  std::string out;
  auto line = [&](const char* k, const std::string& v) {
    snprintf(buf, sizeof(buf), "%-28s %s\n", k, v.c_str());
    out += buf;
  };
  auto frac = [&](double v) {
    snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  line("total", std::to_string(r.total));
  line("labeled", std::to_string(r.labeled));
  line("kept", std::to_string(r.kept));
  line("coverage", frac(r.coverage()));
  line("budget (1x = 120000)", frac(data_budget(r.total).multiple()) + "x");
  if (r.gt_present > 0) {
    line("gt present", std::to_string(r.gt_present));
    line("correct", std::to_string(r.correct));
    line("label accuracy", frac(r.label_accuracy()));
    line("label accuracy (of total)", frac(r.label_accuracy_over_total()));
    line("utilization", frac(r.utilization()));
  } else {
    line("label accuracy", "n/a (no ground truth)");
    line("utilization", "n/a (no ground truth)");
  }
  if (r.record_errors) line("record errors", std::to_string(r.record_errors));
  return out;
}

inline nlohmann::json histogram_to_json(const ClassHistogram& h) {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [c, n] : h.counts) counts[std::to_string(c)] = n;
  return nlohmann::json{{"total", h.total}, {"counts", std::move(counts)}};
}

// Plot-ready (class, count) series, most frequent first, mirroring
// log-scale class-frequency charts.
inline std::string histogram_to_csv(const ClassHistogram& h,
                                    const TermDictionary* dict = nullptr) {
  std::vector<std::pair<int32_t, uint64_t>> rows(h.counts.begin(), h.counts.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::string out = "class,name,count\n";
  for (const auto& [c, n] : rows) {
    std::string name;
    if (dict) {
      for (const auto& info : dict->classes())
        if (info.id == c) {
          name = info.name;
          break;
        }
    }
    out += std::to_string(c);
    out.push_back(',');
    out += name;
    out.push_back(',');
    out += std::to_string(n);
    out.push_back('\n');
  }
  return out;
}

}  // namespace shiftlab
