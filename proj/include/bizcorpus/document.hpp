#pragma once

#include <array>
#include <compare>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "bizcorpus/errors.hpp"

namespace bizcorpus {

/// Origin of a document. Declaration order is the row order used in reports.
enum class SourceTag : std::uint8_t {
  curated_business,
  patent,
  wikipedia,
  cc100,
  mc4,
  common_crawl,
  latest_update,
  other,
};

inline constexpr std::array<SourceTag, 8> kAllSources = {
    SourceTag::curated_business, SourceTag::patent,        SourceTag::wikipedia,
    SourceTag::cc100,            SourceTag::mc4,           SourceTag::common_crawl,
    SourceTag::latest_update,    SourceTag::other,
};

inline constexpr std::string_view to_string(SourceTag tag) {
  switch (tag) {
    case SourceTag::curated_business: return "curated_business";
    case SourceTag::patent: return "patent";
    case SourceTag::wikipedia: return "wikipedia";
    case SourceTag::cc100: return "cc100";
    case SourceTag::mc4: return "mc4";
    case SourceTag::common_crawl: return "common_crawl";
    case SourceTag::latest_update: return "latest_update";
    case SourceTag::other: return "other";
  }
  return "other";
}

/// Human-readable row label for reports.
inline constexpr std::string_view display_name(SourceTag tag) {
  switch (tag) {
    case SourceTag::curated_business: return "Curated business corpus";
    case SourceTag::patent: return "Patent";
    case SourceTag::wikipedia: return "Wikipedia";
    case SourceTag::cc100: return "CC100";
    case SourceTag::mc4: return "mC4";
    case SourceTag::common_crawl: return "Common Crawl";
    case SourceTag::latest_update: return "Latest update";
    case SourceTag::other: return "Other";
  }
  return "Other";
}

inline std::optional<SourceTag> parse_source(std::string_view name) {
  for (SourceTag tag : kAllSources) {
    if (to_string(tag) == name) return tag;
  }
  return std::nullopt;
}

inline SourceTag source_from_string(std::string_view name) {
  if (auto tag = parse_source(name)) return *tag;
  throw ConfigError("unknown source tag '" + std::string(name) + "'");
}

struct Date {
  int year = 0;
  unsigned month = 0;
  unsigned day = 0;

  auto operator<=>(const Date&) const = default;

  /// Accepts YYYY-MM-DD with a real calendar day.
  static std::optional<Date> parse(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto num = [&](std::size_t at, std::size_t n) -> std::optional<int> {
      int v = 0;
      for (std::size_t i = at; i < at + n; ++i) {
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
        v = v * 10 + (s[i] - '0');
      }
      return v;
    };
    auto y = num(0, 4), m = num(5, 2), d = num(8, 2);
    if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1) return std::nullopt;
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (*y % 4 == 0 && *y % 100 != 0) || *y % 400 == 0;
    const int max_day = kDays[*m - 1] + (*m == 2 && leap ? 1 : 0);
    if (*d > max_day) return std::nullopt;
    return Date{*y, static_cast<unsigned>(*m), static_cast<unsigned>(*d)};
  }

  std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
    return buf;
  }
};

struct Document {
  std::string id;
  std::string url;
  SourceTag source = SourceTag::other;
  std::optional<Date> published_date;
  std::string text;
  std::optional<std::string> lang;

  bool operator==(const Document&) const = default;
};

/// Ordered document container. Order is ingestion order and every stage
/// preserves the relative order of the documents it keeps.
struct Corpus {
  std::vector<Document> documents;
  std::string provenance;

  std::size_t size() const noexcept { return documents.size(); }
  bool empty() const noexcept { return documents.empty(); }

  auto begin() const noexcept { return documents.begin(); }
  auto end() const noexcept { return documents.end(); }

  void append(Corpus other) {
    documents.insert(documents.end(), std::make_move_iterator(other.documents.begin()),
                     std::make_move_iterator(other.documents.end()));
    if (!other.provenance.empty()) {
      provenance += provenance.empty() ? other.provenance : "; " + other.provenance;
    }
  }

  /// Throws ConsistencyError naming the first repeated id.
  void require_unique_ids() const {
    std::unordered_set<std::string_view> seen;
    seen.reserve(documents.size());
    for (const auto& doc : documents) {
      if (!seen.insert(doc.id).second) {
        throw ConsistencyError("duplicate document id '" + doc.id + "'");
      }
    }
  }

  std::size_t count(SourceTag tag) const {
    std::size_t n = 0;
    for (const auto& doc : documents) n += doc.source == tag;
    return n;
  }
};

}  // namespace bizcorpus
