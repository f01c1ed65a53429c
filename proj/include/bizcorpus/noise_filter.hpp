#pragma once

// Line-level noise stripping and document-level sentential filtering.
//
// Each line is classified; date-only, markup and bare-URL lines are dropped.
// A document then survives only if enough of its remaining lines end with a
// sentence terminator, unless its language does not use terminators.

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bizcorpus/document.hpp"
#include "bizcorpus/errors.hpp"
#include "bizcorpus/parallel.hpp"
#include "bizcorpus/stats.hpp"
#include "bizcorpus/utf8.hpp"

namespace bizcorpus {

enum class LineClass { date_only, markup_fragment, url_only, sentential, non_sentential };

inline constexpr std::string_view to_string(LineClass c) {
  switch (c) {
    case LineClass::date_only: return "date_only";
    case LineClass::markup_fragment: return "markup_fragment";
    case LineClass::url_only: return "url_only";
    case LineClass::sentential: return "sentential";
    case LineClass::non_sentential: return "non_sentential";
  }
  return "non_sentential";
}

inline bool is_noise(LineClass c) {
  return c == LineClass::date_only || c == LineClass::markup_fragment || c == LineClass::url_only;
}

struct NoiseConfig {
  std::u32string jp_terminators = U"。！？";
  std::u32string latin_terminators = U".!?";
  double min_sentential_ratio = 0.5;
  std::set<std::string> punctuationless_languages = {"th"};

  void validate() const {
    if (jp_terminators.empty() || latin_terminators.empty()) {
      throw ConfigError("noise terminator sets must be non-empty");
    }
    if (!(min_sentential_ratio >= 0.0 && min_sentential_ratio <= 1.0)) {
      throw ConfigError("noise.min_sentential_ratio must be in [0,1]");
    }
  }

  bool is_terminator(char32_t cp) const {
    return jp_terminators.find(cp) != std::u32string::npos ||
           latin_terminators.find(cp) != std::u32string::npos;
  }
};

namespace detail {

// Closing quotes and brackets that may follow a terminator: 「…。」
inline bool is_closer(char32_t cp) {
  switch (cp) {
    case U'」': case U'』': case U'）': case U')': case U'】': case U'〉': case U'》':
    case U'"': case U'\'': case U'”': case U'’': case U']': case U'］':
      return true;
    default:
      return false;
  }
}

inline bool is_nav_delimiter(char32_t cp) {
  switch (cp) {
    case U'|': case U'｜': case U'>': case U'＞': case U'›': case U'»': case U'≫': case U'/':
    case U'／': case U'・': case U'·': case U'•': case U'-': case U'‐': case U'–': case U'—':
    case U'→': case U':': case U'：': case U'_':
      return true;
    default:
      return utf8::is_space(cp);
  }
}

struct DatePatterns {
  std::regex numeric;
  std::regex kanji;
  std::regex era;
};

inline const DatePatterns& date_patterns() {
  static const std::string tail =
      R"((?:\s*\(\s*(?:月|火|水|木|金|土|日|祝|[A-Za-z]{3,9}\.?)\s*\))?(?:\s+\d{1,2}:\d{2}(?::\d{2})?)?)";
  static const DatePatterns p{
      std::regex(R"(^\d{4}\s*[-/.]\s*(\d{1,2})\s*[-/.]\s*(\d{1,2}))" + tail + "$"),
      std::regex(R"(^\d{4}\s*年\s*(\d{1,2})\s*月(?:\s*(\d{1,2})\s*日)?)" + tail + "$"),
      std::regex(R"(^(?:令和|平成|昭和|大正|明治)\s*(?:元|\d{1,2})\s*年\s*(\d{1,2})\s*月(?:\s*(\d{1,2})\s*日)?)" +
                 tail + "$"),
  };
  return p;
}

inline bool in_range(const std::ssub_match& m, int lo, int hi) {
  if (!m.matched) return true;
  const int v = std::stoi(m.str());
  return v >= lo && v <= hi;
}

inline bool is_date_only(std::string_view narrowed) {
  if (narrowed.empty()) return false;
  const auto first = static_cast<unsigned char>(narrowed.front());
  if (!(first >= '0' && first <= '9') && first < 0x80) return false;
  const std::string s(narrowed);
  const auto& p = date_patterns();
  std::smatch m;
  for (const std::regex* re : {&p.numeric, &p.kanji, &p.era}) {
    if (std::regex_match(s, m, *re)) return in_range(m[1], 1, 12) && in_range(m[2], 1, 31);
  }
  return false;
}

inline bool is_url_only(std::string_view s) {
  static const std::regex re(R"(^(?:(?:https?|ftp)://|www\.)[^\s<>"]+$)", std::regex::icase);
  return std::regex_match(std::string(s), re);
}

/// Removes angle-bracket tags; sets `had_tag` if at least one was found.
inline std::string strip_tags(std::string_view s, bool& had_tag) {
  std::string out;
  had_tag = false;
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (s[pos] == '<') {
      const std::size_t close = s.find('>', pos + 1);
      const bool tag_like = close != std::string_view::npos && pos + 1 < s.size() &&
                            (std::isalpha(static_cast<unsigned char>(s[pos + 1])) ||
                             s[pos + 1] == '/' || s[pos + 1] == '!');
      if (tag_like) {
        had_tag = true;
        out.push_back(' ');
        pos = close + 1;
        continue;
      }
    }
    out.push_back(s[pos++]);
  }
  return out;
}

inline bool ends_with_terminator(const NoiseConfig& config, std::string_view trimmed);

inline bool is_markup_fragment(const NoiseConfig& config, std::string_view s) {
  bool had_tag = false;
  const std::string rest = strip_tags(s, had_tag);
  if (utf8::trim(rest).empty()) return had_tag;
  // Menu items do not end sentences; "It is ok." is prose, not navigation.
  if (ends_with_terminator(config, utf8::trim(rest))) return false;

  // Navigation strip: two or more short tokens separated by delimiters.
  std::size_t tokens = 0, current = 0;
  bool saw_delimiter = false;
  for (std::size_t pos = 0; pos < rest.size();) {
    const auto d = utf8::decode_at(rest, pos);
    pos += d.length;
    if (is_nav_delimiter(d.cp)) {
      saw_delimiter = true;
      if (current > 0) ++tokens;
      current = 0;
      continue;
    }
    if (++current > 3) return false;
  }
  if (current > 0) ++tokens;
  return (had_tag || saw_delimiter) && tokens >= 2 - (had_tag ? 1 : 0);
}

inline bool ends_with_terminator(const NoiseConfig& config, std::string_view trimmed) {
  const std::u32string cps = utf8::decode(trimmed);
  auto it = cps.rbegin();
  while (it != cps.rend() && (is_closer(*it) || utf8::is_space(*it))) ++it;
  return it != cps.rend() && config.is_terminator(*it);
}

}  // namespace detail

/// Checks run in order: date, URL, markup, terminator (ignoring tags).
inline LineClass classify_line(const NoiseConfig& config, std::string_view line) {
  const std::string_view trimmed = utf8::trim(line);
  if (trimmed.empty()) return LineClass::non_sentential;
  const std::string narrowed = utf8::narrow_fullwidth(trimmed);
  const std::string_view narrow_trimmed = utf8::trim(narrowed);
  if (detail::is_date_only(narrow_trimmed)) return LineClass::date_only;
  if (detail::is_url_only(narrow_trimmed)) return LineClass::url_only;
  if (detail::is_markup_fragment(config, trimmed)) return LineClass::markup_fragment;
  // Prose wrapped in inline tags still counts: <p>本文です。</p>
  bool had_tag = false;
  const std::string untagged = detail::strip_tags(trimmed, had_tag);
  if (detail::ends_with_terminator(config, utf8::trim(untagged))) return LineClass::sentential;
  return LineClass::non_sentential;
}

/// Per-document outcome of the noise filter.
struct NoiseTally {
  std::array<std::uint64_t, 5> lines{};  // indexed by LineClass; noise entries are removed lines
  std::optional<std::string> removed_reason;

  std::uint64_t& operator[](LineClass c) { return lines[static_cast<std::size_t>(c)]; }
  std::uint64_t operator[](LineClass c) const { return lines[static_cast<std::size_t>(c)]; }
};

/// Strips noise lines and returns the document, or nullopt when it is not
/// sentential enough. Surviving text is the original lines minus noise lines,
/// joined with '\n'; blank lines are kept and do not count toward the ratio.
inline std::optional<Document> filter_document(const NoiseConfig& config, const Document& doc,
                                               NoiseTally* tally = nullptr) {
  if (!doc.lang) {
    throw ConsistencyError("noise filter needs an identified language (document " + doc.id + ")");
  }
  NoiseTally local;
  std::vector<std::string_view> kept;
  std::uint64_t content_lines = 0;
  bool stripped = false;

  std::string_view text = doc.text;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;

    if (utf8::trim(line).empty()) {
      kept.push_back(line);
      continue;
    }
    const LineClass c = classify_line(config, line);
    ++local[c];
    if (is_noise(c)) {
      stripped = true;
      continue;
    }
    ++content_lines;
    kept.push_back(line);
  }

  auto reject = [&](const char* reason) -> std::optional<Document> {
    local.removed_reason = reason;
    if (tally) *tally = local;
    return std::nullopt;
  };
  if (content_lines == 0) return reject("empty_after_strip");
  const bool exempt = config.punctuationless_languages.contains(*doc.lang);
  if (!exempt) {
    const double ratio = static_cast<double>(local[LineClass::sentential]) /
                         static_cast<double>(content_lines);
    if (ratio < config.min_sentential_ratio) return reject("non_sentential");
  }

  Document out = doc;
  if (stripped) {
    out.text.clear();
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (i) out.text += '\n';
      out.text += kept[i];
    }
  }
  if (tally) *tally = local;
  return out;
}

/// Corpus-level noise stage. Stripped lines are tallied in counters as
/// "lines_removed:<class>"; dropped documents in `removed` by reason.
inline Corpus filter_noise(const NoiseConfig& config, const Corpus& corpus,
                           StageStats* stats = nullptr, unsigned workers = 1) {
  config.validate();
  struct Result {
    std::optional<Document> doc;
    NoiseTally tally;
  };
  auto results = parallel_map<Result>(corpus.size(), workers, [&](std::size_t i) {
    Result r;
    r.doc = filter_document(config, corpus.documents[i], &r.tally);
    return r;
  });

  Corpus out;
  out.provenance = corpus.provenance;
  StageStats local;
  local.name = "denoise";
  local.before = count_by_source(corpus);
  for (LineClass c : {LineClass::date_only, LineClass::markup_fragment, LineClass::url_only}) {
    local.counters["lines_removed:" + std::string(to_string(c))] = 0;
  }
  local.removed["non_sentential"] = 0;
  local.removed["empty_after_strip"] = 0;
  for (auto& r : results) {
    for (LineClass c : {LineClass::date_only, LineClass::markup_fragment, LineClass::url_only}) {
      local.counters["lines_removed:" + std::string(to_string(c))] += r.tally[c];
    }
    if (r.doc) {
      out.documents.push_back(std::move(*r.doc));
    } else {
      ++local.removed[*r.tally.removed_reason];
    }
  }
  local.after = count_by_source(out);
  if (stats) *stats = std::move(local);
  return out;
}

}  // namespace bizcorpus
