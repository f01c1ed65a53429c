#pragma once

// Rule-based domain curation: a document is kept when its URL matches one of
// the configured patterns or its text contains at least one cue word.

#include <fnmatch.h>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bizcorpus/document.hpp"
#include "bizcorpus/errors.hpp"
#include "bizcorpus/jsonl.hpp"
#include "bizcorpus/parallel.hpp"
#include "bizcorpus/stats.hpp"
#include "bizcorpus/utf8.hpp"

namespace bizcorpus {

struct UrlPattern {
  enum class Kind { prefix, glob };
  Kind kind = Kind::prefix;
  std::string pattern;
};

struct CurationRuleSet {
  std::vector<UrlPattern> url_patterns;
  std::vector<std::string> cue_words;
  std::string rule_set_version;

  void validate() const {
    if (url_patterns.empty() && cue_words.empty()) {
      throw ConfigError("curation rule set needs at least one URL pattern or cue word");
    }
    for (const auto& w : cue_words) {
      if (w.empty()) throw ConfigError("curation rule set contains an empty cue word");
    }
    for (const auto& p : url_patterns) {
      if (p.pattern.empty()) throw ConfigError("curation rule set contains an empty URL pattern");
    }
  }
};

namespace detail {

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  return out;
}

inline bool url_matches(const UrlPattern& rule, const std::string& lowered_url) {
  const std::string pattern = ascii_lower(rule.pattern);
  switch (rule.kind) {
    case UrlPattern::Kind::prefix:
      return lowered_url.starts_with(pattern);
    case UrlPattern::Kind::glob:
      return ::fnmatch(pattern.c_str(), lowered_url.c_str(), 0) == 0;
  }
  return false;
}

}  // namespace detail

/// URLs compare case-insensitively (ASCII); empty URLs never match.
inline bool matches_url(const CurationRuleSet& rules, std::string_view url) {
  if (url.empty()) return false;
  const std::string lowered = detail::ascii_lower(url);
  for (const auto& rule : rules.url_patterns) {
    if (detail::url_matches(rule, lowered)) return true;
  }
  return false;
}

/// Plain substring search after case folding; uncased scripts (kana, kanji)
/// are compared exactly.
inline bool contains_cue_word(const CurationRuleSet& rules, std::string_view text) {
  if (rules.cue_words.empty() || text.empty()) return false;
  const std::string folded = utf8::fold_case(text);
  for (const auto& word : rules.cue_words) {
    if (folded.find(utf8::fold_case(word)) != std::string::npos) return true;
  }
  return false;
}

/// Precompiled form used when the same rules are applied to many documents.
class CurationMatcher {
 public:
  explicit CurationMatcher(const CurationRuleSet& rules) : rules_(rules) {
    for (auto& rule : rules_.url_patterns) rule.pattern = detail::ascii_lower(rule.pattern);
    folded_cues_.reserve(rules_.cue_words.size());
    for (const auto& w : rules_.cue_words) folded_cues_.push_back(utf8::fold_case(w));
  }

  bool url_hit(std::string_view url) const {
    if (url.empty()) return false;
    const std::string lowered = detail::ascii_lower(url);
    for (const auto& rule : rules_.url_patterns) {
      if (detail::url_matches(rule, lowered)) return true;
    }
    return false;
  }

  bool cue_hit(std::string_view text) const {
    if (folded_cues_.empty() || text.empty()) return false;
    const std::string folded = utf8::fold_case(text);
    for (const auto& w : folded_cues_) {
      if (folded.find(w) != std::string::npos) return true;
    }
    return false;
  }

 private:
  CurationRuleSet rules_;
  std::vector<std::string> folded_cues_;
};

/// Keeps documents with a URL hit or a cue-word hit, in order. When
/// `applies_to` is given, documents from other sources pass through
/// untouched (curation only defines domain corpora).
inline Corpus curate(const CurationRuleSet& rules, const Corpus& corpus, StageStats* stats = nullptr,
                     unsigned workers = 1,
                     const std::vector<SourceTag>* applies_to = nullptr) {
  const CurationMatcher matcher(rules);
  auto subject = [&](SourceTag tag) {
    if (!applies_to) return true;
    for (SourceTag t : *applies_to) {
      if (t == tag) return true;
    }
    return false;
  };

  struct Verdict {
    bool checked = false;
    bool url = false;
    bool cue = false;
  };
  const auto verdicts = parallel_map<Verdict>(corpus.size(), workers, [&](std::size_t i) {
    const auto& doc = corpus.documents[i];
    if (!subject(doc.source)) return Verdict{};
    return Verdict{true, matcher.url_hit(doc.url), matcher.cue_hit(doc.text)};
  });

  Corpus out;
  out.provenance = corpus.provenance;
  StageStats local;
  local.name = "curate";
  local.before = count_by_source(corpus);
  std::uint64_t url_hits = 0, cue_hits = 0, both = 0, rejected = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& v = verdicts[i];
    if (v.checked) {
      url_hits += v.url;
      cue_hits += v.cue;
      both += v.url && v.cue;
      if (!v.url && !v.cue) {
        ++rejected;
        continue;
      }
    }
    out.documents.push_back(corpus.documents[i]);
  }
  local.after = count_by_source(out);
  local.removed["no_rule_match"] = rejected;
  local.counters["url_hits"] = url_hits;
  local.counters["cue_word_hits"] = cue_hits;
  local.counters["both_hits"] = both;
  if (stats) *stats = std::move(local);
  return out;
}

/// {"version": "...", "url_patterns": ["prefix", {"glob": "..."}, {"prefix": "..."}],
///  "cue_words": ["..."]}. Bare strings containing '*' or '?' are globs.
inline CurationRuleSet parse_rule_set(const nlohmann::json& j) {
  CurationRuleSet rules;
  try {
    rules.rule_set_version = j.value("version", std::string{});
    for (const auto& p : j.value("url_patterns", nlohmann::json::array())) {
      UrlPattern rule;
      if (p.is_string()) {
        rule.pattern = p.get<std::string>();
        rule.kind = rule.pattern.find_first_of("*?[") == std::string::npos ? UrlPattern::Kind::prefix
                                                                          : UrlPattern::Kind::glob;
      } else if (p.contains("glob")) {
        rule.kind = UrlPattern::Kind::glob;
        rule.pattern = p.at("glob").get<std::string>();
      } else {
        rule.pattern = p.at("prefix").get<std::string>();
      }
      rules.url_patterns.push_back(std::move(rule));
    }
    for (const auto& w : j.value("cue_words", nlohmann::json::array())) {
      rules.cue_words.push_back(w.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed curation rule set: ") + e.what());
  }
  rules.validate();
  return rules;
}

inline CurationRuleSet load_rule_set(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("curation rule file not found: " + path.string());
  try {
    return parse_rule_set(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse curation rule file " + path.string() + ": " + e.what());
  }
}

}  // namespace bizcorpus
