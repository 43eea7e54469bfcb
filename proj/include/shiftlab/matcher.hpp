#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace shiftlab {

using TokenId = uint32_t;

// Ids at or above the dictionary vocabulary size never take part in a match.
// The automaton resets on them, which is exactly the field-boundary rule.
inline constexpr TokenId kSentinelTokenId = std::numeric_limits<TokenId>::max() - 1;
inline constexpr TokenId kNonVocabTokenId = std::numeric_limits<TokenId>::max();

// One dictionary-term occurrence in a tokenized caption.
struct TokenSpan {
  uint32_t start = 0;    // token index of the first matched token
  uint32_t length = 0;   // term length in tokens
  int32_t class_id = 0;  // class the matched term maps to
  uint32_t pattern = 0;  // dictionary pattern index (for term text lookup)
};

struct MatchOutcome {
  // Sorted by (start asc, length desc, class asc): position-greedy order.
  std::vector<TokenSpan> spans;
  // First-occurrence order over the sorted spans, no duplicates.
  std::vector<int32_t> distinct_classes;
};

// Aho-Corasick over token ids. Patterns are contiguous token sequences;
// matches are reported with exact token-boundary alignment by construction.
class TokenAutomaton {
 public:
  TokenAutomaton() = default;

  void build(const std::vector<std::vector<TokenId>>& patterns, TokenId vocab_size) {
    vocab_size_ = vocab_size;
    nodes_.clear();
    nodes_.emplace_back();
    root_next_.assign(vocab_size, 0);
    pattern_len_.resize(patterns.size());

    for (size_t p = 0; p < patterns.size(); ++p) {
      const auto& pat = patterns[p];
      pattern_len_[p] = static_cast<uint32_t>(pat.size());
      int32_t state = 0;
      for (TokenId t : pat) {
        int32_t next = state == 0 ? root_next_[t] : find_next(state, t);
        if (next == 0) {  // node 0 is the root, never a child
          next = static_cast<int32_t>(nodes_.size());
          nodes_.emplace_back();
          if (state == 0) {
            root_next_[t] = next;
          } else {
            insert_next(state, t, next);
          }
        }
        state = next;
      }
      nodes_[state].patterns.push_back(static_cast<int32_t>(p));
    }

    // BFS for fail links and output chains.
    std::queue<int32_t> bfs;
    for (TokenId t = 0; t < vocab_size_; ++t) {
      int32_t n = root_next_[t];
      if (n != 0) {
        nodes_[n].fail = 0;
        bfs.push(n);
      }
    }
    while (!bfs.empty()) {
      int32_t s = bfs.front();
      bfs.pop();
      for (const auto& [tok, child] : nodes_[s].next) {
        int32_t f = step(nodes_[s].fail, tok);
        nodes_[child].fail = f;
        bfs.push(child);
      }
      int32_t f = nodes_[s].fail;
      nodes_[s].out_link = nodes_[f].patterns.empty() ? nodes_[f].out_link : f;
    }
  }

  // Calls emit(pattern_index, start_token) for every occurrence.
  template <typename Emit>
  void scan(std::span<const TokenId> tokens, Emit&& emit) const {
    int32_t state = 0;
    for (size_t i = 0; i < tokens.size(); ++i) {
      TokenId t = tokens[i];
      if (t >= vocab_size_) {
        state = 0;
        continue;
      }
      state = step(state, t);
      int32_t n = nodes_[state].patterns.empty() ? nodes_[state].out_link : state;
      while (n != -1) {
        for (int32_t p : nodes_[n].patterns) {
          emit(static_cast<uint32_t>(p),
               static_cast<uint32_t>(i + 1 - pattern_len_[p]));
        }
        n = nodes_[n].out_link;
      }
    }
  }

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<std::pair<TokenId, int32_t>> next;  // sorted by token
    int32_t fail = 0;
    int32_t out_link = -1;
    std::vector<int32_t> patterns;
  };

  int32_t find_next(int32_t state, TokenId t) const {
    const auto& next = nodes_[state].next;
    auto it = std::lower_bound(next.begin(), next.end(), t,
                               [](const auto& e, TokenId v) { return e.first < v; });
    return (it != next.end() && it->first == t) ? it->second : 0;
  }

  void insert_next(int32_t state, TokenId t, int32_t child) {
    auto& next = nodes_[state].next;
    auto it = std::lower_bound(next.begin(), next.end(), t,
                               [](const auto& e, TokenId v) { return e.first < v; });
    next.insert(it, {t, child});
  }

  // Goto function with fail fallback; the root falls through to itself.
  int32_t step(int32_t state, TokenId t) const {
    while (state != 0) {
      int32_t n = find_next(state, t);
      if (n != 0) return n;
      state = nodes_[state].fail;
    }
    return root_next_[t];
  }

  std::vector<Node> nodes_;
  std::vector<int32_t> root_next_;
  std::vector<uint32_t> pattern_len_;
  TokenId vocab_size_ = 0;
};

}  // namespace shiftlab
