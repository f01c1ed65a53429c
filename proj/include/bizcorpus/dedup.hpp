#pragma once

// Exact-match deduplication.
//
// Document level: documents are grouped by a 64-bit FNV-1a fingerprint of
// their text and confirmed byte-for-byte, keeping the first one seen.
// Sentence level: sentences are counted across the whole corpus and every
// occurrence of a sentence seen more than `sentence_frequency_threshold`
// times is removed. Documents left without sentences are dropped.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bizcorpus/document.hpp"
#include "bizcorpus/errors.hpp"
#include "bizcorpus/hash.hpp"
#include "bizcorpus/parallel.hpp"
#include "bizcorpus/stats.hpp"
#include "bizcorpus/utf8.hpp"

namespace bizcorpus {

struct DedupConfig {
  std::uint64_t sentence_frequency_threshold = 15;
  // Sentence splitting uses the same terminator sets as the noise filter.
  std::u32string jp_terminators = U"。！？";
  std::u32string latin_terminators = U".!?";

  void validate() const {
    if (sentence_frequency_threshold < 1) {
      throw ConfigError("dedup.sentence_frequency_threshold must be >= 1");
    }
    if (jp_terminators.empty() || latin_terminators.empty()) {
      throw ConfigError("dedup terminator sets must be non-empty");
    }
  }
};

inline std::uint64_t document_fingerprint(const Document& doc) { return fnv1a64(doc.text); }

using FingerprintFn = std::function<std::uint64_t(const Document&)>;

/// Keeps the first document of every byte-equal class, in order. Fingerprint
/// matches are always confirmed by comparing the texts, so a weak
/// fingerprint can only cost time, never merge distinct documents.
inline Corpus dedup_documents(const DedupConfig& config, const Corpus& corpus,
                              StageStats* stats = nullptr,
                              const FingerprintFn& fingerprint = document_fingerprint) {
  config.validate();
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> groups;
  groups.reserve(corpus.size());
  Corpus out;
  out.provenance = corpus.provenance;
  std::uint64_t duplicates = 0, collisions = 0;

  for (const auto& doc : corpus) {
    auto& members = groups[fingerprint(doc)];
    const bool dup = std::any_of(members.begin(), members.end(), [&](std::size_t k) {
      return out.documents[k].text == doc.text;
    });
    if (dup) {
      ++duplicates;
      continue;
    }
    collisions += !members.empty();
    members.push_back(out.documents.size());
    out.documents.push_back(doc);
  }

  if (stats) {
    stats->name = "dedup_documents";
    stats->before = count_by_source(corpus);
    stats->after = count_by_source(out);
    stats->removed = {{"duplicate_document", duplicates}};
    stats->counters = {{"fingerprint_collisions", collisions}};
  }
  return out;
}

/// A sentence inside one line: `begin..end` covers the raw bytes including
/// leading whitespace; `key` is the trimmed text used for counting.
struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string_view key;
};

namespace detail {

inline bool is_terminator(const DedupConfig& c, char32_t cp) {
  return c.jp_terminators.find(cp) != std::u32string::npos ||
         c.latin_terminators.find(cp) != std::u32string::npos;
}

inline bool is_sentence_closer(char32_t cp) {
  switch (cp) {
    case U'」': case U'』': case U'）': case U')': case U'】': case U'"': case U'”': case U'’':
      return true;
    default:
      return false;
  }
}

}  // namespace detail

/// Splits a single line. A Japanese terminator always ends a sentence; a
/// Latin one only when followed by whitespace or the end of the line (so
/// "3.5" and "example.com" stay whole). Runs of terminators and closing
/// brackets stay with the sentence they end.
inline std::vector<SentenceSpan> split_line_sentences(const DedupConfig& config,
                                                      std::string_view line) {
  std::vector<SentenceSpan> spans;
  std::size_t start = 0;
  std::size_t pos = 0;
  auto emit = [&](std::size_t end) {
    const auto key = utf8::trim(line.substr(start, end - start));
    if (!key.empty()) {
      spans.push_back({start, end, key});
      start = end;
    }
  };
  while (pos < line.size()) {
    const auto d = utf8::decode_at(line, pos);
    pos += d.length;
    if (!detail::is_terminator(config, d.cp)) continue;
    const bool latin = config.jp_terminators.find(d.cp) == std::u32string::npos;
    bool strong = !latin;
    std::size_t end = pos;
    while (end < line.size()) {
      const auto n = utf8::decode_at(line, end);
      if (!detail::is_terminator(config, n.cp) && !detail::is_sentence_closer(n.cp)) break;
      strong |= config.jp_terminators.find(n.cp) != std::u32string::npos;
      end += n.length;
    }
    if (!strong && end < line.size() && !utf8::is_space(utf8::decode_at(line, end).cp)) {
      pos = end;
      continue;
    }
    emit(end);
    pos = end;
  }
  emit(line.size());
  // Trailing whitespace belongs to the last sentence so rebuilding is lossless.
  if (!spans.empty() && start < line.size()) spans.back().end = line.size();
  return spans;
}

/// All sentence keys of a document, in order.
inline std::vector<std::string_view> split_sentences(const DedupConfig& config,
                                                     std::string_view text) {
  std::vector<std::string_view> keys;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    for (const auto& s : split_line_sentences(config, line)) keys.push_back(s.key);
    pos = nl + 1;
  }
  return keys;
}

class SentenceFrequencyTable {
 public:
  void add(std::string_view sentence, std::uint64_t n = 1) {
    auto it = counts_.find(sentence);
    if (it == counts_.end()) {
      counts_.emplace(std::string(sentence), n);
    } else {
      it->second += n;
    }
    total_ += n;
  }

  void merge(const SentenceFrequencyTable& other) {
    for (const auto& [s, n] : other.counts_) add(s, n);
  }

  /// 0 for sentences never seen.
  std::uint64_t count(std::string_view sentence) const {
    auto it = counts_.find(sentence);
    return it == counts_.end() ? 0 : it->second;
  }

  bool contains(std::string_view sentence) const { return counts_.find(sentence) != counts_.end(); }
  std::size_t distinct() const noexcept { return counts_.size(); }
  std::uint64_t total() const noexcept { return total_; }
  bool empty() const noexcept { return counts_.empty(); }

  std::size_t distinct_above(std::uint64_t threshold) const {
    std::size_t n = 0;
    for (const auto& [_, c] : counts_) n += c > threshold;
    return n;
  }

  /// Entries sorted by descending count, then by sentence bytes.
  std::vector<std::pair<std::string, std::uint64_t>> sorted() const {
    std::vector<std::pair<std::string, std::uint64_t>> out(counts_.begin(), counts_.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return out;
  }

  /// Audit dump: one {"sentence": ..., "count": ...} record per line.
  std::string to_jsonl() const {
    std::string out;
    for (const auto& [s, n] : sorted()) {
      out += nlohmann::json{{"count", n}, {"sentence", s}}.dump();
      out += '\n';
    }
    return out;
  }

  bool operator==(const SentenceFrequencyTable& other) const {
    return total_ == other.total_ && counts_ == other.counts_;
  }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::unordered_map<std::string, std::uint64_t, Hash, std::equal_to<>> counts_;
  std::uint64_t total_ = 0;
};

/// Corpus-wide sentence counts. Shards are counted independently and merged.
inline SentenceFrequencyTable count_sentences(const DedupConfig& config, const Corpus& corpus,
                                              unsigned workers = 1) {
  config.validate();
  std::vector<SentenceFrequencyTable> shards(std::max(1u, workers));
  for_each_shard(corpus.size(), workers, [&](std::size_t k, std::size_t begin, std::size_t end) {
    auto& table = shards[k];
    for (std::size_t i = begin; i < end; ++i) {
      for (auto key : split_sentences(config, corpus.documents[i].text)) table.add(key);
    }
  });
  SentenceFrequencyTable merged = std::move(shards[0]);
  for (std::size_t k = 1; k < shards.size(); ++k) merged.merge(shards[k]);
  return merged;
}

namespace detail {

struct SentenceRemoval {
  std::optional<std::string> text;  // nullopt: no sentences left
  std::uint64_t removed = 0;
};

inline bool ends_with_latin_terminator(const DedupConfig& config, std::string_view s) {
  const std::u32string cps = utf8::decode(s);
  auto it = cps.rbegin();
  while (it != cps.rend() && is_sentence_closer(*it)) ++it;
  return it != cps.rend() && config.latin_terminators.find(*it) != std::u32string::npos;
}

inline SentenceRemoval remove_frequent(const DedupConfig& config, const Document& doc,
                                       const SentenceFrequencyTable& table) {
  SentenceRemoval result;
  std::string rebuilt;
  bool first_line = true;
  bool changed = false;
  std::uint64_t kept_sentences = 0;
  std::string_view text = doc.text;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;

    const auto spans = split_line_sentences(config, line);
    std::string out_line;
    bool dropped_any = false;
    bool gap = false;
    std::uint64_t kept_here = 0;
    for (const auto& span : spans) {
      if (!table.contains(span.key)) {
        throw ConsistencyError("sentence table does not cover document " + doc.id +
                               "; it must be computed over the corpus being filtered");
      }
      if (table.count(span.key) > config.sentence_frequency_threshold) {
        ++result.removed;
        dropped_any = gap = true;
        continue;
      }
      const auto piece = line.substr(span.begin, span.end - span.begin);
      // Keep a Latin terminator separated from what now follows it, or the
      // two sentences would merge on the next split.
      if (gap && !out_line.empty() && !utf8::is_space(utf8::decode_at(piece, 0).cp) &&
          ends_with_latin_terminator(config, out_line)) {
        out_line += ' ';
      }
      out_line += piece;
      gap = false;
      ++kept_here;
    }
    kept_sentences += kept_here;

    std::string_view emitted = line;
    if (dropped_any) {
      changed = true;
      if (kept_here == 0) continue;  // line consisted only of removed sentences
      emitted = out_line;
    }
    if (!first_line) rebuilt += '\n';
    rebuilt += emitted;
    first_line = false;
  }
  if (kept_sentences == 0) return result;
  result.text = changed ? std::move(rebuilt) : doc.text;
  return result;
}

}  // namespace detail

/// Removes every occurrence of any sentence whose corpus count exceeds the
/// threshold. Throws ConsistencyError if the table is missing a sentence.
inline Corpus dedup_sentences(const DedupConfig& config, const Corpus& corpus,
                              const SentenceFrequencyTable& table, StageStats* stats = nullptr,
                              unsigned workers = 1) {
  config.validate();
  auto results = parallel_map<detail::SentenceRemoval>(corpus.size(), workers, [&](std::size_t i) {
    return detail::remove_frequent(config, corpus.documents[i], table);
  });

  Corpus out;
  out.provenance = corpus.provenance;
  std::uint64_t sentences_removed = 0, emptied = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    sentences_removed += results[i].removed;
    if (!results[i].text) {
      ++emptied;
      continue;
    }
    Document doc = corpus.documents[i];
    doc.text = std::move(*results[i].text);
    out.documents.push_back(std::move(doc));
  }
  const std::uint64_t distinct_removed = table.distinct_above(config.sentence_frequency_threshold);

  if (stats) {
    stats->name = "dedup_sentences";
    stats->before = count_by_source(corpus);
    stats->after = count_by_source(out);
    stats->removed = {{"empty_after_sentence_removal", emptied}};
    stats->counters = {{"sentences_removed", sentences_removed},
                       {"distinct_sentences_removed", distinct_removed}};
  }
  return out;
}

}  // namespace bizcorpus
