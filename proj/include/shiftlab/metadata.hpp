#pragma once

#include <cstdint>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftlab/io.hpp"

namespace shiftlab {

enum class ArchitectureFamily { vit, convolution, hybrid, other };
enum class LossKind { VL, CE, other };

inline const char* to_string(ArchitectureFamily f) {
  switch (f) {
    case ArchitectureFamily::vit: return "vit";
    case ArchitectureFamily::convolution: return "convolution";
    case ArchitectureFamily::hybrid: return "hybrid";
    case ArchitectureFamily::other: return "other";
  }
  return "?";
}

inline const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::VL: return "VL";
    case LossKind::CE: return "CE";
    case LossKind::other: return "other";
  }
  return "?";
}

inline ArchitectureFamily parse_architecture_family(std::string_view s) {
  if (s == "vit" || s == "ViT" || s == "transformer") return ArchitectureFamily::vit;
  if (s == "convolution" || s == "conv" || s == "cnn") return ArchitectureFamily::convolution;
  if (s == "hybrid") return ArchitectureFamily::hybrid;
  return ArchitectureFamily::other;
}

inline LossKind parse_loss_kind(std::string_view s) {
  if (s == "VL" || s == "vl") return LossKind::VL;
  if (s == "CE" || s == "ce") return LossKind::CE;
  return LossKind::other;
}

// One row of the model-zoo sheet: identity, the metadata dimensions models
// get binned by, and any number of named metric columns (average robustness
// per label set, base accuracies, ...). Fields a row does not carry stay
// absent; models are excluded per-dimension, not globally.
struct ModelMetadata {
  std::string model_id;
  std::optional<uint64_t> parameter_count;
  std::optional<ArchitectureFamily> architecture_family;
  std::optional<LossKind> loss_kind;
  std::optional<uint64_t> train_sample_count;
  std::optional<uint32_t> input_resolution;
  std::string pretrain_dataset;
  std::map<std::string, double> metrics;

  std::optional<double> metric(const std::string& name) const {
    auto it = metrics.find(name);
    if (it == metrics.end()) return std::nullopt;
    return it->second;
  }
};

namespace detail {

// RFC-4180-style row split: quoted fields, doubled quotes inside quotes.
inline std::vector<std::string> split_csv_row(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace detail

struct MetadataLoad {
  std::vector<ModelMetadata> models;
  std::vector<std::string> warnings;
};

inline MetadataLoad load_metadata_csv(std::istream& in) {
  MetadataLoad out;
  std::string line;
  if (!read_line(in, line)) return out;
  std::vector<std::string> header = detail::split_csv_row(line);

  uint64_t line_no = 1;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = detail::split_csv_row(line);
    ModelMetadata m;
    for (size_t i = 0; i < header.size() && i < fields.size(); ++i) {
      const std::string& key = header[i];
      const std::string& value = fields[i];
      if (value.empty()) continue;
      if (key == "model_id" || key == "model" || key == "name") {
        m.model_id = value;
      } else if (key == "parameter_count") {
        if (auto v = parse_number(value); v && *v > 0)
          m.parameter_count = static_cast<uint64_t>(*v);
        else
          out.warnings.push_back("line " + std::to_string(line_no) +
                                 ": bad parameter_count \"" + value + "\"");
      } else if (key == "train_sample_count") {
        if (auto v = parse_number(value); v && *v >= 0)
          m.train_sample_count = static_cast<uint64_t>(*v);
        else
          out.warnings.push_back("line " + std::to_string(line_no) +
                                 ": bad train_sample_count \"" + value + "\"");
      } else if (key == "input_resolution") {
        if (auto v = parse_number(value); v && *v > 0)
          m.input_resolution = static_cast<uint32_t>(*v);
        else
          out.warnings.push_back("line " + std::to_string(line_no) +
                                 ": bad input_resolution \"" + value + "\"");
      } else if (key == "architecture_family") {
        m.architecture_family = parse_architecture_family(value);
      } else if (key == "loss_kind") {
        m.loss_kind = parse_loss_kind(value);
      } else if (key == "pretrain_dataset") {
        m.pretrain_dataset = value;
      } else {
        if (auto v = parse_number(value)) {
          m.metrics[key] = *v;
        } else {
          out.warnings.push_back("line " + std::to_string(line_no) + ": non-numeric value \"" +
                                 value + "\" in metric column " + key);
        }
      }
    }
    if (m.model_id.empty()) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": row without model_id skipped");
      continue;
    }
    out.models.push_back(std::move(m));
  }
  return out;
}

inline MetadataLoad load_metadata_jsonl(std::istream& in) {
  MetadataLoad out;
  std::string line;
  uint64_t line_no = 0;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& ex) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": " + ex.what());
      continue;
    }
    if (j.contains("_meta")) continue;
    ModelMetadata m;
    m.model_id = j.value("model_id", std::string{});
    if (m.model_id.empty()) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": row without model_id skipped");
      continue;
    }
    if (auto it = j.find("parameter_count"); it != j.end() && it->is_number())
      m.parameter_count = it->get<uint64_t>();
    if (auto it = j.find("train_sample_count"); it != j.end() && it->is_number())
      m.train_sample_count = it->get<uint64_t>();
    if (auto it = j.find("input_resolution"); it != j.end() && it->is_number())
      m.input_resolution = it->get<uint32_t>();
    if (auto it = j.find("architecture_family"); it != j.end() && it->is_string())
      m.architecture_family = parse_architecture_family(it->get<std::string>());
    if (auto it = j.find("loss_kind"); it != j.end() && it->is_string())
      m.loss_kind = parse_loss_kind(it->get<std::string>());
    m.pretrain_dataset = j.value("pretrain_dataset", std::string{});
    if (auto it = j.find("metrics"); it != j.end() && it->is_object()) {
      for (const auto& [k, v] : it->items())
        if (v.is_number()) m.metrics[k] = v.get<double>();
    }
    out.models.push_back(std::move(m));
  }
  return out;
}

}  // namespace shiftlab
