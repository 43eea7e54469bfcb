#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftlab/text.hpp"

namespace shiftlab {

// One row of a caption manifest: a web-scraped image's text fields plus an
// optional ground-truth class.
struct CaptionRecord {
  std::string sample_id;
  std::optional<std::string> title;
  std::optional<std::vector<std::string>> tags;
  std::optional<std::string> description;
  std::optional<std::string> alt_text;
  std::optional<int32_t> gt_label;
  std::string source;

  bool has_any_caption_field() const {
    return title.has_value() || tags.has_value() || description.has_value() ||
           alt_text.has_value();
  }
};

inline CaptionRecord parse_caption_record(const nlohmann::json& j) {
  if (!j.is_object()) throw std::runtime_error("caption record is not an object");
  CaptionRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  if (r.sample_id.empty()) throw std::runtime_error("caption record has empty sample_id");
  if (auto it = j.find("title"); it != j.end() && !it->is_null())
    r.title = it->get<std::string>();
  if (auto it = j.find("tags"); it != j.end() && !it->is_null())
    r.tags = it->get<std::vector<std::string>>();
  if (auto it = j.find("description"); it != j.end() && !it->is_null())
    r.description = it->get<std::string>();
  if (auto it = j.find("alt_text"); it != j.end() && !it->is_null())
    r.alt_text = it->get<std::string>();
  if (auto it = j.find("gt_label"); it != j.end() && !it->is_null())
    r.gt_label = it->get<int32_t>();
  if (auto it = j.find("source"); it != j.end() && !it->is_null())
    r.source = it->get<std::string>();
  if (!r.has_any_caption_field())
    throw std::runtime_error("caption record has no caption field");
  return r;
}

inline CaptionRecord parse_caption_record_line(std::string_view line) {
  return parse_caption_record(nlohmann::json::parse(line));
}

namespace detail {

// Walks the requested fields in order and yields each field's normalized
// tokens. `boundary()` fires between non-empty contributions — between
// fields and also between individual tags, which are independent phrases.
template <typename OnToken, typename OnBoundary>
void visit_caption(const CaptionRecord& rec, const std::vector<CaptionField>& order,
                   OnToken&& on_token, OnBoundary&& on_boundary) {
  bool any_emitted = false;
  bool pending_boundary = false;
  auto emit_text = [&](std::string_view text) {
    bool first_of_chunk = true;
    tokenize_visit(text, [&](std::string_view token) {
      if (first_of_chunk) {
        if (any_emitted && pending_boundary) on_boundary();
        first_of_chunk = false;
        pending_boundary = false;
        any_emitted = true;
      }
      on_token(token);
    });
    if (!first_of_chunk) pending_boundary = true;
  };
  for (CaptionField f : order) {
    switch (f) {
      case CaptionField::title:
        if (rec.title) emit_text(*rec.title);
        break;
      case CaptionField::tags:
        if (rec.tags)
          for (const std::string& tag : *rec.tags) emit_text(tag);
        break;
      case CaptionField::description:
        if (rec.description) emit_text(*rec.description);
        break;
      case CaptionField::alt_text:
        if (rec.alt_text) emit_text(*rec.alt_text);
        break;
    }
  }
}

}  // namespace detail

// Concatenates the record's requested fields, in `order`, into one normalized
// token sequence with a boundary sentinel between fields. A record with none
// of the requested fields yields an empty sequence.
inline std::vector<std::string> normalize_caption(const CaptionRecord& rec,
                                                  const std::vector<CaptionField>& order) {
  std::vector<std::string> tokens;
  detail::visit_caption(
      rec, order, [&](std::string_view t) { tokens.emplace_back(t); },
      [&] { tokens.push_back(kFieldBoundaryToken); });
  return tokens;
}

}  // namespace shiftlab
