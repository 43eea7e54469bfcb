#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shiftlab/audit.hpp"
#include "shiftlab/parallel.hpp"

namespace shiftlab {

// Lines whose object is a lone "_meta" header (written at the top of our own
// JSONL artifacts) are not records.
inline bool is_meta_line(std::string_view line) {
  size_t i = line.find_first_not_of(" \t");
  if (i == std::string_view::npos || line[i] != '{') return false;
  size_t j = line.find_first_not_of(" \t", i + 1);
  return j != std::string_view::npos && line.compare(j, 7, "\"_meta\"") == 0;
}

struct LabelPipelineConfig {
  MatchStrategy strategy;
  ExclusionMode mode = ExclusionMode::per_class;
  std::vector<CaptionField> field_order = kDefaultFieldOrder;
  PipelineOptions parallel;
};

inline constexpr size_t kMaxStoredErrors = 100;

struct LabelPipelineStats {
  AuditReport audit;
  ClassHistogram histogram;
  std::vector<std::pair<uint64_t, std::string>> errors;  // (line number, message)
  uint64_t lines = 0;

  void merge(LabelPipelineStats&& o) {
    audit.merge(o.audit);
    histogram.merge(o.histogram);
    for (auto& e : o.errors) {
      if (errors.size() >= kMaxStoredErrors) break;
      errors.push_back(std::move(e));
    }
    lines += o.lines;
  }
};

// Streams a caption manifest through the matcher and writes one label row per
// record, preserving input order. Malformed lines are counted and reported
// with their line numbers; the run continues.
inline LabelPipelineStats run_label_pipeline(std::istream& in, std::ostream& out,
                                             const TermDictionary& dict,
                                             const LabelPipelineConfig& config) {
  LabelPipelineStats stats;
  auto map_batch = [&dict, &config](uint64_t first_line, const std::vector<std::string>& lines,
                                    std::string& out_buf, LabelPipelineStats& local) {
    out_buf.reserve(lines.size() * 64);
    for (size_t i = 0; i < lines.size(); ++i) {
      const std::string& line = lines[i];
      if (line.empty() || is_meta_line(line)) continue;
      CaptionRecord rec;
      try {
        rec = parse_caption_record_line(line);
      } catch (const std::exception& ex) {
        ++local.audit.record_errors;
        if (local.errors.size() < kMaxStoredErrors)
          local.errors.emplace_back(first_line + i, ex.what());
        continue;
      }
      LabeledSample s =
          label_record(rec, dict, config.field_order, config.strategy, config.mode);
      local.audit.add(s);
      local.histogram.add(s);
      append_label_row_json(s, dict, out_buf);
    }
  };
  stats.lines = process_lines_ordered(in, out, map_batch, stats, config.parallel);

  // Report universe classes with zero occurrences explicitly.
  for (const auto& c : dict.classes()) stats.histogram.counts.emplace(c.id, 0);
  return stats;
}

}  // namespace shiftlab
