#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bizcorpus/document.hpp"
#include "bizcorpus/errors.hpp"

namespace bizcorpus {

using SourceCounts = std::map<SourceTag, std::uint64_t>;

inline SourceCounts count_by_source(const Corpus& corpus) {
  SourceCounts counts;
  for (SourceTag tag : kAllSources) counts[tag] = 0;
  for (const auto& doc : corpus) ++counts[doc.source];
  return counts;
}

inline std::uint64_t total(const SourceCounts& counts) {
  std::uint64_t n = 0;
  for (const auto& [_, c] : counts) n += c;
  return n;
}

/// Accounting for one stage. `removed` holds whole-document removals keyed by
/// reason and always sums to before - after. `counters` holds everything that
/// is not a document removal (lines stripped, sentences dropped, rule hits).
struct StageStats {
  std::string name;
  SourceCounts before;
  SourceCounts after;
  std::map<std::string, std::uint64_t> removed;
  std::map<std::string, std::uint64_t> counters;

  std::uint64_t removed_total() const {
    std::uint64_t n = 0;
    for (const auto& [_, c] : removed) n += c;
    return n;
  }

  /// Throws ConsistencyError if the stage grew a source or the reasons do
  /// not add up.
  void check() const {
    for (SourceTag tag : kAllSources) {
      const auto b = before.contains(tag) ? before.at(tag) : 0;
      const auto a = after.contains(tag) ? after.at(tag) : 0;
      if (a > b) {
        throw ConsistencyError(name + ": source " + std::string(to_string(tag)) + " grew from " +
                               std::to_string(b) + " to " + std::to_string(a));
      }
    }
    if (total(before) - total(after) != removed_total()) {
      throw ConsistencyError(name + ": removal reasons sum to " + std::to_string(removed_total()) +
                             " but " + std::to_string(total(before) - total(after)) +
                             " documents were removed");
    }
  }
};

struct IngestStats {
  std::string path;
  SourceTag source = SourceTag::other;
  std::string digest;
  std::uint64_t lines = 0;
  std::uint64_t documents = 0;
  std::uint64_t malformed = 0;
};

struct TokenStats {
  std::string tokenizer;
  SourceCounts per_source;
  std::uint64_t grand_total = 0;
};

struct PipelineStats {
  std::vector<IngestStats> ingest;
  std::vector<StageStats> stages;
  TokenStats tokens;

  const StageStats* stage(std::string_view name) const {
    for (const auto& s : stages) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }
};

}  // namespace bizcorpus
