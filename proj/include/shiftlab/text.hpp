#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace shiftlab {

// Token that separates caption fields (and individual tags) so phrase
// matches never straddle a field boundary. 0x1e is US-ASCII record
// separator; it is always a token boundary for real text, so this token
// cannot collide with one produced by tokenization.
inline const std::string kFieldBoundaryToken = "\x1e";

inline bool is_field_boundary(std::string_view token) {
  return token == kFieldBoundaryToken;
}

namespace detail {

inline bool ascii_alnum(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

inline char ascii_lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

inline void append_utf8(std::string& out, UChar32 cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline const icu::Normalizer2& nfc() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
      throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    return n;
  }();
  return *instance;
}

// Tokenization of text containing non-ASCII bytes: NFC-normalize, then
// treat every non-alphanumeric code point as a token boundary and lowercase
// the rest.
template <typename Visitor>
void tokenize_unicode(std::string_view text, Visitor&& visit) {
  icu::UnicodeString us = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString norm = nfc().normalize(us, status);
  if (U_FAILURE(status)) norm = us;

  std::string token;
  for (int32_t i = 0; i < norm.length();) {
    UChar32 cp = norm.char32At(i);
    i += U16_LENGTH(cp);
    bool alnum = cp < 0x80 ? ascii_alnum(static_cast<unsigned char>(cp)) : u_isalnum(cp) != 0;
    if (alnum) {
      UChar32 low = cp < 0x80 ? static_cast<UChar32>(ascii_lower(static_cast<unsigned char>(cp)))
                              : u_tolower(cp);
      append_utf8(token, low);
    } else if (!token.empty()) {
      visit(std::string_view(token));
      token.clear();
    }
  }
  if (!token.empty()) visit(std::string_view(token));
}

}  // namespace detail

// Splits `text` into normalized tokens and calls `visit(std::string_view)`
// for each one. Tokens are maximal runs of alphanumeric code points,
// lowercased; everything else is a boundary. Pure-ASCII input takes a
// single-pass path with no ICU calls; anything else is NFC-normalized first.
// The view passed to `visit` is only valid during the call.
template <typename Visitor>
void tokenize_visit(std::string_view text, Visitor&& visit) {
  bool ascii = true;
  for (unsigned char c : text) {
    if (c >= 0x80) {
      ascii = false;
      break;
    }
  }
  if (!ascii) {
    detail::tokenize_unicode(text, visit);
    return;
  }
  std::string token;
  for (unsigned char c : text) {
    if (detail::ascii_alnum(c)) {
      token.push_back(detail::ascii_lower(c));
    } else if (!token.empty()) {
      visit(std::string_view(token));
      token.clear();
    }
  }
  if (!token.empty()) visit(std::string_view(token));
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  tokenize_visit(text, [&out](std::string_view t) { out.emplace_back(t); });
  return out;
}

enum class CaptionField { title, tags, description, alt_text };

inline const char* to_string(CaptionField f) {
  switch (f) {
    case CaptionField::title: return "title";
    case CaptionField::tags: return "tags";
    case CaptionField::description: return "description";
    case CaptionField::alt_text: return "alt_text";
  }
  return "?";
}

inline CaptionField parse_caption_field(std::string_view name) {
  if (name == "title") return CaptionField::title;
  if (name == "tags") return CaptionField::tags;
  if (name == "description") return CaptionField::description;
  if (name == "alt_text") return CaptionField::alt_text;
  throw std::invalid_argument("unknown caption field: " + std::string(name));
}

// Comma-separated list, e.g. "title,tags,description".
inline std::vector<CaptionField> parse_field_order(std::string_view spec) {
  std::vector<CaptionField> order;
  size_t pos = 0;
  while (pos <= spec.size()) {
    size_t comma = spec.find(',', pos);
    if (comma == std::string_view::npos) comma = spec.size();
    std::string_view name = spec.substr(pos, comma - pos);
    if (!name.empty()) order.push_back(parse_caption_field(name));
    pos = comma + 1;
  }
  if (order.empty()) throw std::invalid_argument("empty caption field order");
  return order;
}

// title, tags, description first (the Flickr "ttd" composition), alt text as
// the fallback field.
inline const std::vector<CaptionField> kDefaultFieldOrder = {
    CaptionField::title, CaptionField::tags, CaptionField::description, CaptionField::alt_text};

}  // namespace shiftlab
