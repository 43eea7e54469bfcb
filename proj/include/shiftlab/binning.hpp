#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shiftlab/metadata.hpp"

namespace shiftlab {

namespace detail {

// "50m", "1.5m", "2b", "225" - the compact spelling used in figure legends.
inline std::string compact_number(double v) {
  const char* suffix = "";
  if (std::fabs(v) >= 1e9) {
    v /= 1e9;
    suffix = "b";
  } else if (std::fabs(v) >= 1e6) {
    v /= 1e6;
    suffix = "m";
  } else if (std::fabs(v) >= 1e3) {
    v /= 1e3;
    suffix = "k";
  }
  char buf[32];
  snprintf(buf, sizeof(buf), "%g", v);
  return std::string(buf) + suffix;
}

}  // namespace detail

// How to slice the model zoo: half-open numeric intervals over one metadata
// field ([low, high), last bin closed above), or one bin per category.
struct BinSpec {
  enum class Dimension {
    parameter_count,
    architecture_family,
    input_resolution,
    train_sample_count,
    loss_kind
  };

  Dimension dimension = Dimension::parameter_count;
  std::vector<double> edges;             // numeric dimensions
  std::vector<std::string> categories;   // categorical dimensions

  static BinSpec numeric(Dimension d, std::vector<double> edges) {
    if (edges.empty()) throw std::invalid_argument("numeric bin spec needs at least one edge");
    for (size_t i = 1; i < edges.size(); ++i)
      if (!(edges[i - 1] < edges[i]))
        throw std::invalid_argument("bin edges must be strictly increasing");
    BinSpec s;
    s.dimension = d;
    s.edges = std::move(edges);
    return s;
  }

  static BinSpec categorical(Dimension d) {
    BinSpec s;
    s.dimension = d;
    if (d == Dimension::architecture_family) {
      s.categories = {"vit", "convolution", "hybrid", "other"};
    } else if (d == Dimension::loss_kind) {
      s.categories = {"VL", "CE", "other"};
    } else {
      throw std::invalid_argument("dimension is not categorical");
    }
    return s;
  }

  bool is_categorical() const {
    return dimension == Dimension::architecture_family || dimension == Dimension::loss_kind;
  }

  size_t bin_count() const {
    return is_categorical() ? categories.size() : edges.size() + 1;
  }

  std::string bin_label(size_t bin) const {
    if (is_categorical()) return categories.at(bin);
    if (bin == 0) return "<" + detail::compact_number(edges.front());
    if (bin == edges.size()) return ">=" + detail::compact_number(edges.back());
    return detail::compact_number(edges[bin - 1]) + "-" + detail::compact_number(edges[bin]);
  }

  // Open-ended extreme bins: every value lands somewhere.
  size_t numeric_bin(double v) const {
    size_t b = 0;
    while (b < edges.size() && v >= edges[b]) ++b;
    return b;
  }
};

inline const char* to_string(BinSpec::Dimension d) {
  switch (d) {
    case BinSpec::Dimension::parameter_count: return "parameter_count";
    case BinSpec::Dimension::architecture_family: return "architecture_family";
    case BinSpec::Dimension::input_resolution: return "input_resolution";
    case BinSpec::Dimension::train_sample_count: return "train_sample_count";
    case BinSpec::Dimension::loss_kind: return "loss_kind";
  }
  return "?";
}

inline BinSpec::Dimension parse_dimension(std::string_view s) {
  if (s == "parameter_count") return BinSpec::Dimension::parameter_count;
  if (s == "architecture_family") return BinSpec::Dimension::architecture_family;
  if (s == "input_resolution") return BinSpec::Dimension::input_resolution;
  if (s == "train_sample_count") return BinSpec::Dimension::train_sample_count;
  if (s == "loss_kind") return BinSpec::Dimension::loss_kind;
  throw std::invalid_argument("unknown binning dimension: " + std::string(s));
}

struct Binning {
  BinSpec spec;
  std::vector<std::vector<size_t>> bins;  // model indexes per bin
  std::vector<std::pair<std::string, std::string>> excluded;  // (model, reason)
};

// Every binnable model lands in exactly one bin; models missing the
// dimension's field are excluded with a reason.
inline Binning bin_models(std::span<const ModelMetadata> models, const BinSpec& spec) {
  Binning b;
  b.spec = spec;
  b.bins.assign(spec.bin_count(), {});
  for (size_t i = 0; i < models.size(); ++i) {
    const ModelMetadata& m = models[i];
    std::optional<size_t> bin;
    std::string reason;
    switch (spec.dimension) {
      case BinSpec::Dimension::parameter_count:
        if (m.parameter_count)
          bin = spec.numeric_bin(static_cast<double>(*m.parameter_count));
        else
          reason = "missing parameter_count";
        break;
      case BinSpec::Dimension::train_sample_count:
        if (m.train_sample_count)
          bin = spec.numeric_bin(static_cast<double>(*m.train_sample_count));
        else
          reason = "missing train_sample_count";
        break;
      case BinSpec::Dimension::input_resolution:
        if (m.input_resolution)
          bin = spec.numeric_bin(static_cast<double>(*m.input_resolution));
        else
          reason = "missing input_resolution";
        break;
      case BinSpec::Dimension::architecture_family:
        if (m.architecture_family) {
          std::string label = to_string(*m.architecture_family);
          auto it = std::find(spec.categories.begin(), spec.categories.end(), label);
          if (it != spec.categories.end())
            bin = static_cast<size_t>(it - spec.categories.begin());
          else
            reason = "architecture family " + label + " not in bin spec";
        } else {
          reason = "missing architecture_family";
        }
        break;
      case BinSpec::Dimension::loss_kind:
        if (m.loss_kind) {
          std::string label = to_string(*m.loss_kind);
          auto it = std::find(spec.categories.begin(), spec.categories.end(), label);
          if (it != spec.categories.end())
            bin = static_cast<size_t>(it - spec.categories.begin());
          else
            reason = "loss kind " + label + " not in bin spec";
        } else {
          reason = "missing loss_kind";
        }
        break;
    }
    if (bin)
      b.bins[*bin].push_back(i);
    else
      b.excluded.emplace_back(m.model_id, reason);
  }
  return b;
}

// Mean of the k best models in a bin on one metric, plus the values backing
// the corresponding scatter marks.
struct BinSummary {
  size_t bin_index = 0;
  std::string bin_label;
  std::string metric;
  size_t member_count = 0;                // bin members carrying the metric
  std::vector<std::string> top_ids;       // |top_ids| = min(k, member_count)
  std::vector<double> top_values;
  std::optional<double> top_k_mean;
  std::vector<double> values;             // all member values, descending
};

inline BinSummary top_k_average(std::span<const ModelMetadata> models,
                                std::span<const size_t> bin_members, const std::string& metric,
                                size_t k, size_t bin_index = 0, std::string bin_label = {}) {
  if (bin_members.empty()) throw std::invalid_argument("top_k_average: empty bin");
  if (k < 1) throw std::invalid_argument("top_k_average: k must be >= 1");

  BinSummary s;
  s.bin_index = bin_index;
  s.bin_label = std::move(bin_label);
  s.metric = metric;

  std::vector<std::pair<double, const std::string*>> scored;
  for (size_t idx : bin_members) {
    if (auto v = models[idx].metric(metric))
      scored.emplace_back(*v, &models[idx].model_id);
  }
  s.member_count = scored.size();
  if (scored.empty()) return s;  // nothing to rank on this metric

  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;  // deterministic tie-break by model id
  });

  for (const auto& [v, id] : scored) s.values.push_back(v);
  size_t take = std::min(k, scored.size());
  double sum = 0.0;
  for (size_t i = 0; i < take; ++i) {
    s.top_ids.push_back(*scored[i].second);
    s.top_values.push_back(scored[i].first);
    sum += scored[i].first;
  }
  s.top_k_mean = sum / static_cast<double>(take);
  return s;
}

struct MarginalCheck {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double difference = 0.0;
  bool pass = false;
};

// Two marginal vectors claimed to come from one accuracy grid must have equal
// means; the default tolerance absorbs 3-decimal rounding of published rows.
inline MarginalCheck marginal_consistency_check(std::span<const double> marginal_a,
                                                std::span<const double> marginal_b,
                                                double tolerance = 0.002) {
  if (marginal_a.empty() || marginal_b.empty())
    throw std::invalid_argument("marginal_consistency_check: empty marginal");
  auto mean = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  MarginalCheck c;
  c.mean_a = mean(marginal_a);
  c.mean_b = mean(marginal_b);
  c.difference = std::fabs(c.mean_a - c.mean_b);
  c.pass = c.difference <= tolerance;
  return c;
}

}  // namespace shiftlab
