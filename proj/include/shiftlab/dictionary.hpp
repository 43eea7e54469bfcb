#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "shiftlab/matcher.hpp"
#include "shiftlab/record.hpp"
#include "shiftlab/text.hpp"

namespace shiftlab {

// Raw per-class phrase tables as read from a dictionary file. Terms are
// normalized (tokenized) at dictionary build time.
struct ClassEntry {
  int32_t class_id = 0;
  std::string class_name;
  std::vector<std::string> terms;
  std::vector<std::string> exclude_terms;
};

// A corrupt dictionary is fatal: it defines the labeling problem.
class DictionaryError : public std::runtime_error {
 public:
  explicit DictionaryError(const std::string& what) : std::runtime_error(what) {}
};

struct ScanResult {
  MatchOutcome outcome;
  std::vector<int32_t> excluded_classes;  // ascending class ids with an exclusion hit
};

// Immutable after construction; shareable across worker threads.
class TermDictionary {
 public:
  struct ClassInfo {
    int32_t id = 0;
    std::string name;
  };

  struct Pattern {
    std::vector<TokenId> tokens;
    std::string text;                           // normalized tokens joined by ' '
    int32_t match_class = -1;                   // class id, or -1 if exclusion-only
    std::vector<int32_t> exclude_classes;       // class ids this pattern disqualifies
  };

  static TermDictionary from_entries(std::string labelset_id,
                                     const std::vector<ClassEntry>& entries) {
    TermDictionary d;
    d.labelset_id_ = std::move(labelset_id);
    std::map<std::vector<TokenId>, size_t> pattern_index;

    for (const ClassEntry& entry : entries) {
      if (d.class_index_.count(entry.class_id)) {
        throw DictionaryError("class id " + std::to_string(entry.class_id) +
                              " appears in more than one entry");
      }
      if (entry.class_id < 0) {
        throw DictionaryError("class id " + std::to_string(entry.class_id) + " is negative");
      }
      if (entry.terms.empty()) {
        throw DictionaryError("class " + std::to_string(entry.class_id) +
                              " (" + entry.class_name + ") has no matching terms");
      }
      d.class_index_[entry.class_id] = d.classes_.size();
      d.classes_.push_back({entry.class_id, entry.class_name});

      for (const std::string& term : entry.terms) {
        size_t p = d.intern_pattern(term, entry.class_id, pattern_index);
        Pattern& pat = d.patterns_[p];
        if (pat.match_class == entry.class_id) continue;  // duplicate within entry
        if (pat.match_class != -1) {
          throw DictionaryError("term \"" + pat.text + "\" maps to both class " +
                                std::to_string(pat.match_class) + " and class " +
                                std::to_string(entry.class_id));
        }
        pat.match_class = entry.class_id;
      }
      for (const std::string& term : entry.exclude_terms) {
        size_t p = d.intern_pattern(term, entry.class_id, pattern_index);
        Pattern& pat = d.patterns_[p];
        auto& ex = pat.exclude_classes;
        if (std::find(ex.begin(), ex.end(), entry.class_id) == ex.end())
          ex.push_back(entry.class_id);
      }
    }

    std::vector<std::vector<TokenId>> seqs;
    seqs.reserve(d.patterns_.size());
    for (const Pattern& p : d.patterns_) {
      seqs.push_back(p.tokens);
      d.max_term_tokens_ = std::max<size_t>(d.max_term_tokens_, p.tokens.size());
    }
    d.automaton_.build(seqs, static_cast<TokenId>(d.vocab_list_.size()));
    return d;
  }

  static TermDictionary parse(const nlohmann::json& j) {
    if (!j.is_object()) throw DictionaryError("dictionary document is not an object");
    std::string labelset_id = j.value("labelset_id", std::string{});
    std::vector<ClassEntry> entries;
    for (const auto& c : j.at("classes")) {
      ClassEntry e;
      e.class_id = c.at("id").get<int32_t>();
      e.class_name = c.value("name", std::string{});
      e.terms = c.at("terms").get<std::vector<std::string>>();
      if (auto it = c.find("exclude"); it != c.end() && !it->is_null())
        e.exclude_terms = it->get<std::vector<std::string>>();
      entries.push_back(std::move(e));
    }
    return from_entries(std::move(labelset_id), entries);
  }

  static TermDictionary load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DictionaryError("cannot open dictionary file: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& ex) {
      throw DictionaryError("dictionary " + path + " is not valid JSON: " + ex.what());
    }
    try {
      return parse(j);
    } catch (const nlohmann::json::exception& ex) {
      throw DictionaryError("dictionary " + path + ": " + ex.what());
    }
  }

  const std::string& labelset_id() const { return labelset_id_; }
  size_t class_count() const { return classes_.size(); }
  const ClassInfo& class_at(size_t i) const { return classes_[i]; }
  const std::vector<ClassInfo>& classes() const { return classes_; }
  bool has_class(int32_t class_id) const { return class_index_.count(class_id) != 0; }

  size_t pattern_count() const { return patterns_.size(); }
  const Pattern& pattern_at(size_t i) const { return patterns_[i]; }
  const std::string& term_text(uint32_t pattern) const { return patterns_[pattern].text; }
  size_t max_term_tokens() const { return max_term_tokens_; }
  TokenId vocab_size() const { return static_cast<TokenId>(vocab_list_.size()); }

  TokenId token_id(std::string_view token) const {
    if (is_field_boundary(token)) return kSentinelTokenId;
    auto it = vocab_.find(token);
    return it == vocab_.end() ? kNonVocabTokenId : it->second;
  }

  std::vector<TokenId> intern(std::span<const std::string> tokens) const {
    std::vector<TokenId> ids;
    ids.reserve(tokens.size());
    for (const std::string& t : tokens) ids.push_back(token_id(t));
    return ids;
  }

  // Tokenizes the record's fields directly to ids; no per-token strings.
  std::vector<TokenId> tokenize_caption(const CaptionRecord& rec,
                                        const std::vector<CaptionField>& order) const {
    std::vector<TokenId> ids;
    detail::visit_caption(
        rec, order,
        [&](std::string_view tok) {
          auto it = vocab_.find(tok);
          ids.push_back(it == vocab_.end() ? kNonVocabTokenId : it->second);
        },
        [&] { ids.push_back(kSentinelTokenId); });
    return ids;
  }

  // Single automaton pass over the caption; collects matching-term spans and
  // exclusion hits together.
  ScanResult scan(std::span<const TokenId> tokens) const {
    ScanResult result;
    std::vector<int32_t> excluded;
    automaton_.scan(tokens, [&](uint32_t pattern, uint32_t start) {
      const Pattern& p = patterns_[pattern];
      if (p.match_class != -1) {
        result.outcome.spans.push_back(TokenSpan{start, static_cast<uint32_t>(p.tokens.size()),
                                                 p.match_class, pattern});
      }
      for (int32_t c : p.exclude_classes) excluded.push_back(c);
    });

    auto& spans = result.outcome.spans;
    std::sort(spans.begin(), spans.end(), [](const TokenSpan& a, const TokenSpan& b) {
      if (a.start != b.start) return a.start < b.start;
      if (a.length != b.length) return a.length > b.length;
      if (a.class_id != b.class_id) return a.class_id < b.class_id;
      return a.pattern < b.pattern;
    });
    for (const TokenSpan& s : spans) {
      auto& dc = result.outcome.distinct_classes;
      if (std::find(dc.begin(), dc.end(), s.class_id) == dc.end()) dc.push_back(s.class_id);
    }

    std::sort(excluded.begin(), excluded.end());
    excluded.erase(std::unique(excluded.begin(), excluded.end()), excluded.end());
    result.excluded_classes = std::move(excluded);
    return result;
  }

 private:
  size_t intern_pattern(const std::string& term, int32_t class_id,
                        std::map<std::vector<TokenId>, size_t>& pattern_index) {
    std::vector<std::string> toks = tokenize(term);
    if (toks.empty()) {
      throw DictionaryError("term \"" + term + "\" of class " + std::to_string(class_id) +
                            " is empty after normalization");
    }
    std::vector<TokenId> ids;
    std::string text;
    for (const std::string& t : toks) {
      auto [it, inserted] = vocab_.try_emplace(t, static_cast<TokenId>(vocab_list_.size()));
      if (inserted) vocab_list_.push_back(t);
      ids.push_back(it->second);
      if (!text.empty()) text.push_back(' ');
      text += t;
    }
    auto [it, inserted] = pattern_index.try_emplace(ids, patterns_.size());
    if (inserted) patterns_.push_back(Pattern{std::move(ids), std::move(text), -1, {}});
    return it->second;
  }

  struct StringHash {
    using is_transparent = void;
    size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  std::string labelset_id_;
  std::vector<ClassInfo> classes_;
  std::unordered_map<int32_t, size_t> class_index_;
  std::unordered_map<std::string, TokenId, StringHash, std::equal_to<>> vocab_;
  std::vector<std::string> vocab_list_;
  std::vector<Pattern> patterns_;
  TokenAutomaton automaton_;
  size_t max_term_tokens_ = 0;
};

// Every occurrence of every matching term, with exact token-boundary
// alignment; matches never cross the field sentinel.
inline MatchOutcome find_matches(std::span<const TokenId> tokens, const TermDictionary& dict) {
  return dict.scan(tokens).outcome;
}

inline MatchOutcome find_matches(std::span<const std::string> tokens,
                                 const TermDictionary& dict) {
  return find_matches(dict.intern(tokens), dict);
}

}  // namespace shiftlab
