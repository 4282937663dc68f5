#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "dualcoder/error.hpp"

namespace dualcoder {

inline constexpr int kMaxTextSteps = 128;
inline const std::string kPadToken = "_PAD_";
inline const std::string kUnkToken = "_UNK_";

namespace detail {

inline bool is_strip_punct(char c) {
  return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':' || c == '"' ||
         c == '\'' || c == '(' || c == ')';
}

}  // namespace detail

// Lowercases, splits on whitespace, peels leading/trailing punctuation
// [.,!?;:"'()] into separate tokens, and splits contractions at the first
// interior apostrophe ("don't" -> "do" "n't", "it's" -> "it" "'s").
inline std::vector<std::string> tokenize(const std::string& transcript) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = transcript.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(transcript[i]))) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(transcript[j]))) ++j;
    std::string chunk = transcript.substr(i, j - i);
    i = j;
    for (char& c : chunk) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    std::size_t lo = 0, hi = chunk.size();
    while (lo < hi && detail::is_strip_punct(chunk[lo])) {
      tokens.emplace_back(1, chunk[lo]);
      ++lo;
    }
    std::vector<std::string> trailing;
    while (hi > lo && detail::is_strip_punct(chunk[hi - 1])) {
      trailing.emplace_back(1, chunk[hi - 1]);
      --hi;
    }
    std::string core = chunk.substr(lo, hi - lo);
    if (!core.empty()) {
      const std::size_t apos = core.find('\'');
      if (apos != std::string::npos && apos > 0 && apos + 1 < core.size()) {
        if (core[apos - 1] == 'n' && core.compare(apos + 1, std::string::npos, "t") == 0) {
          tokens.push_back(core.substr(0, apos - 1));
          tokens.push_back("n't");
        } else {
          tokens.push_back(core.substr(0, apos));
          tokens.push_back(core.substr(apos));
        }
      } else {
        tokens.push_back(core);
      }
    }
    // Trailing punctuation goes back in original order.
    tokens.insert(tokens.end(), trailing.rbegin(), trailing.rend());
  }
  return tokens;
}

// Token ids, dense in [0, V): _PAD_ = 0, _UNK_ = 1, then corpus tokens by
// descending frequency with lexicographic tie-break.
class Vocabulary {
 public:
  static constexpr std::int32_t kPadId = 0;
  static constexpr std::int32_t kUnkId = 1;

  Vocabulary() : id_to_token_{kPadToken, kUnkToken} { rebuild_map(); }
  explicit Vocabulary(std::vector<std::string> tokens) : id_to_token_(std::move(tokens)) {
    if (id_to_token_.size() < 2 || id_to_token_[0] != kPadToken || id_to_token_[1] != kUnkToken)
      throw ValueError("Vocabulary: first two entries must be _PAD_ and _UNK_");
    rebuild_map();
  }

  std::int32_t size() const { return static_cast<std::int32_t>(id_to_token_.size()); }

  std::int32_t id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
  }

  const std::string& token_of(std::int32_t id) const {
    if (id < 0 || id >= size()) throw ValueError("Vocabulary: id out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  const std::vector<std::string>& tokens() const { return id_to_token_; }

  // One token per line, line number = id.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write vocabulary file: " + path);
    for (const auto& t : id_to_token_) out << t << '\n';
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocabulary file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) tokens.push_back(line);
    return Vocabulary(std::move(tokens));
  }

 private:
  void rebuild_map() {
    token_to_id_.clear();
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
      if (!token_to_id_.emplace(id_to_token_[i], static_cast<std::int32_t>(i)).second)
        throw ValueError("Vocabulary: duplicate token '" + id_to_token_[i] + "'");
    }
  }

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::int32_t> token_to_id_;
};

inline Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus) {
  std::map<std::string, std::size_t> freq;
  for (const auto& doc : corpus)
    for (const auto& tok : doc) ++freq[tok];
  if (freq.empty()) throw ValueError("build_vocab: empty corpus");

  std::vector<std::pair<std::string, std::size_t>> entries(freq.begin(), freq.end());
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens{kPadToken, kUnkToken};
  tokens.reserve(entries.size() + 2);
  for (auto& [tok, count] : entries) tokens.push_back(tok);
  return Vocabulary(std::move(tokens));
}

// Fixed-length id sequence; ids beyond true_len are _PAD_.
struct TokenSequence {
  std::vector<std::int32_t> ids;
  int true_len = 0;
};

inline TokenSequence encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                            int max_len = kMaxTextSteps) {
  if (max_len < 1) throw ValueError("encode: max_len must be >= 1");
  TokenSequence seq;
  seq.ids.assign(static_cast<std::size_t>(max_len), Vocabulary::kPadId);
  seq.true_len = static_cast<int>(std::min<std::size_t>(tokens.size(), static_cast<std::size_t>(max_len)));
  for (int t = 0; t < seq.true_len; ++t)
    seq.ids[static_cast<std::size_t>(t)] = vocab.id_of(tokens[static_cast<std::size_t>(t)]);
  return seq;
}

}  // namespace dualcoder
