#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shiftlab/binning.hpp"
#include "shiftlab/io.hpp"

namespace shiftlab {

struct SeriesPoint {
  std::string x;      // axis category (metric label)
  size_t x_index = 0;
  double y = 0.0;
  uint64_t n = 0;     // members behind the point
};

struct ScatterSeries {
  std::string bin;
  std::string kind;  // "trend" or "scatter"
  std::vector<SeriesPoint> points;
};

// One trend series (bin means) plus one scatter series (individual top-k
// values) per bin, points ordered along the axis. `axis` fixes the x order;
// summaries whose metric is not on the axis are skipped.
inline std::vector<ScatterSeries> emit_series(std::span<const BinSummary> summaries,
                                              std::span<const std::string> axis) {
  auto axis_index = [&](const std::string& metric) -> std::optional<size_t> {
    for (size_t i = 0; i < axis.size(); ++i)
      if (axis[i] == metric) return i;
    return std::nullopt;
  };

  // Bins in first-appearance order.
  std::vector<std::pair<size_t, std::string>> bins;
  for (const BinSummary& s : summaries) {
    bool known = false;
    for (const auto& [idx, label] : bins)
      if (idx == s.bin_index) known = true;
    if (!known) bins.emplace_back(s.bin_index, s.bin_label);
  }
  std::sort(bins.begin(), bins.end());

  std::vector<ScatterSeries> out;
  for (const auto& [bin_index, bin_label] : bins) {
    ScatterSeries trend{bin_label, "trend", {}};
    ScatterSeries scatter{bin_label, "scatter", {}};
    for (const BinSummary& s : summaries) {
      if (s.bin_index != bin_index) continue;
      auto xi = axis_index(s.metric);
      if (!xi || !s.top_k_mean) continue;
      trend.points.push_back({s.metric, *xi, *s.top_k_mean, s.member_count});
      for (double v : s.top_values)
        scatter.points.push_back({s.metric, *xi, v, s.member_count});
    }
    auto by_x = [](const SeriesPoint& a, const SeriesPoint& b) {
      if (a.x_index != b.x_index) return a.x_index < b.x_index;
      return a.y > b.y;
    };
    std::stable_sort(trend.points.begin(), trend.points.end(), by_x);
    std::stable_sort(scatter.points.begin(), scatter.points.end(), by_x);
    if (!trend.points.empty()) out.push_back(std::move(trend));
    if (!scatter.points.empty()) out.push_back(std::move(scatter));
  }
  return out;
}

// Plot-ready flat table; one row per point.
inline std::string series_to_csv(std::span<const ScatterSeries> series) {
  std::string out = "x,y,series,bin,n\n";
  for (const ScatterSeries& s : series) {
    for (const SeriesPoint& p : s.points) {
      out += p.x;
      out.push_back(',');
      out += format_double(p.y);
      out.push_back(',');
      out += s.kind;
      out.push_back(',');
      out += s.bin;
      out.push_back(',');
      out += std::to_string(p.n);
      out.push_back('\n');
    }
  }
  return out;
}

}  // namespace shiftlab
