#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "bizcorpus/document.hpp"
#include "bizcorpus/errors.hpp"
#include "bizcorpus/stats.hpp"
#include "bizcorpus/utf8.hpp"

namespace bizcorpus {

/// Counts tokens in a text. Implementations may throw BackendError.
class TokenizerBackend {
 public:
  virtual ~TokenizerBackend() = default;
  virtual std::string name() const = 0;
  virtual std::uint64_t count(std::string_view text) const = 0;
};

/// Whitespace-delimited runs count as one token each, except that every CJK
/// character (kana, kanji, hangul, CJK punctuation) is a token on its own.
class DefaultTokenizer final : public TokenizerBackend {
 public:
  std::string name() const override { return "whitespace-cjk-v1"; }

  std::uint64_t count(std::string_view text) const override {
    std::uint64_t tokens = 0;
    bool in_run = false;
    for (std::size_t pos = 0; pos < text.size();) {
      const auto d = utf8::decode_at(text, pos);
      pos += d.length;
      if (utf8::is_space(d.cp)) {
        in_run = false;
      } else if (utf8::is_cjk(d.cp)) {
        ++tokens;
        in_run = false;
      } else if (!in_run) {
        ++tokens;
        in_run = true;
      }
    }
    return tokens;
  }
};

/// Per-source token totals. Every source has a row, so empty sources report 0.
inline TokenStats count_tokens(const Corpus& corpus, const TokenizerBackend& tokenizer) {
  TokenStats stats;
  stats.tokenizer = tokenizer.name();
  for (SourceTag tag : kAllSources) stats.per_source[tag] = 0;
  for (const auto& doc : corpus) {
    std::uint64_t n = 0;
    try {
      n = tokenizer.count(doc.text);
    } catch (const std::exception& e) {
      throw StageError("count_tokens", doc.id, e.what());
    }
    stats.per_source[doc.source] += n;
  }
  stats.grand_total = total(stats.per_source);
  return stats;
}

}  // namespace bizcorpus
