#pragma once

// Two-stage language identification. A pluggable primary classifier answers
// first; when it is not confident enough, a built-in script-statistics
// heuristic decides. Only documents identified as Japanese survive.

#include <algorithm>
#include <array>
#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bizcorpus/document.hpp"
#include "bizcorpus/errors.hpp"
#include "bizcorpus/parallel.hpp"
#include "bizcorpus/stats.hpp"
#include "bizcorpus/utf8.hpp"
#include "bizcorpus/wire.hpp"

namespace bizcorpus {

enum class LangStage { primary_classifier, characteristics_fallback };

inline constexpr std::string_view to_string(LangStage stage) {
  return stage == LangStage::primary_classifier ? "primary_classifier" : "characteristics_fallback";
}

struct LangVerdict {
  std::string lang;
  double confidence = 0.0;
  LangStage stage = LangStage::characteristics_fallback;

  bool operator==(const LangVerdict&) const = default;
};

struct ClassifierResult {
  std::string lang;
  double confidence = 0.0;
};

class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  virtual std::string name() const = 0;
  /// Throws BackendError when the backend cannot answer.
  virtual ClassifierResult classify(std::string_view text) = 0;
  /// True if classify may be called from several threads at once.
  virtual bool shareable() const { return false; }
};

/// In-process backend wrapping a callable.
class FunctionClassifier final : public ClassifierBackend {
 public:
  using Fn = std::function<ClassifierResult(std::string_view)>;

  FunctionClassifier(std::string name, Fn fn, bool shareable = true)
      : name_(std::move(name)), fn_(std::move(fn)), shareable_(shareable) {}

  std::string name() const override { return name_; }
  ClassifierResult classify(std::string_view text) override { return fn_(text); }
  bool shareable() const override { return shareable_; }

 private:
  std::string name_;
  Fn fn_;
  bool shareable_;
};

/// Request {"text": ...}; response {"lang": ..., "confidence": ...}.
class WireClassifier final : public ClassifierBackend {
 public:
  explicit WireClassifier(std::unique_ptr<JsonTransport> transport, std::string name = "wire")
      : transport_(std::move(transport)), name_(std::move(name)) {}

  std::string name() const override { return name_; }

  ClassifierResult classify(std::string_view text) override {
    const auto response = transport_->call({{"text", std::string(text)}});
    try {
      return {response.at("lang").get<std::string>(), response.at("confidence").get<double>()};
    } catch (const nlohmann::json::exception& e) {
      throw BackendError("classifier response missing lang/confidence: " + std::string(e.what()));
    }
  }

 private:
  std::unique_ptr<JsonTransport> transport_;
  std::string name_;
};

struct LangIdConfig {
  double uncertainty_threshold = 0.9;
  double jp_script_ratio_threshold = 0.05;
  /// Null means fallback-only mode.
  std::shared_ptr<ClassifierBackend> classifier;

  void validate() const {
    if (!(uncertainty_threshold >= 0.0 && uncertainty_threshold <= 1.0)) {
      throw ConfigError("lang_id.uncertainty_threshold must be in [0,1]");
    }
    if (!(jp_script_ratio_threshold >= 0.0 && jp_script_ratio_threshold <= 1.0)) {
      throw ConfigError("lang_id.jp_script_ratio_threshold must be in [0,1]");
    }
  }
};

inline LangVerdict classify_primary(const LangIdConfig& config, std::string_view text) {
  if (!config.classifier) {
    throw BackendError(
        "no primary language classifier is configured; use fallback-only mode "
        "(leave lang_id.classifier unset)");
  }
  ClassifierResult r;
  try {
    r = config.classifier->classify(text);
  } catch (const BackendError& e) {
    throw BackendError(std::string("primary language classifier unavailable (") + e.what() +
                       "); rerun in fallback-only mode by leaving lang_id.classifier unset");
  }
  if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
    throw BackendError("primary language classifier returned confidence outside [0,1]");
  }
  return {std::move(r.lang), r.confidence, LangStage::primary_classifier};
}

namespace detail {

inline std::string_view language_for(utf8::Script s) {
  using utf8::Script;
  switch (s) {
    case Script::latin: return "en";
    case Script::han: return "zh";
    case Script::hangul: return "ko";
    case Script::thai: return "th";
    case Script::cyrillic: return "ru";
    case Script::greek: return "el";
    case Script::arabic: return "ar";
    case Script::hebrew: return "he";
    case Script::devanagari: return "hi";
    default: return "und";
  }
}

}  // namespace detail

/// Fraction of non-whitespace characters that are hiragana or katakana.
inline double japanese_script_ratio(std::string_view text) {
  std::size_t total = 0, kana = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    const auto d = utf8::decode_at(text, pos);
    pos += d.length;
    if (utf8::is_space(d.cp)) continue;
    ++total;
    const auto s = utf8::script_of(d.cp);
    kana += s == utf8::Script::hiragana || s == utf8::Script::katakana;
  }
  return total == 0 ? 0.0 : static_cast<double>(kana) / static_cast<double>(total);
}

/// Script-characteristics heuristic. Kana at or above the ratio threshold
/// means Japanese; otherwise the dominant non-kana script names the language
/// and its share of characters is the confidence.
inline LangVerdict classify_fallback(const LangIdConfig& config, std::string_view text) {
  constexpr std::size_t kScripts = static_cast<std::size_t>(utf8::Script::other) + 1;
  std::array<std::size_t, kScripts> counts{};
  std::size_t total = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    const auto d = utf8::decode_at(text, pos);
    pos += d.length;
    if (utf8::is_space(d.cp)) continue;
    ++total;
    ++counts[static_cast<std::size_t>(utf8::script_of(d.cp))];
  }
  if (total == 0) return {"und", 0.0, LangStage::characteristics_fallback};

  const auto kana = counts[static_cast<std::size_t>(utf8::Script::hiragana)] +
                    counts[static_cast<std::size_t>(utf8::Script::katakana)];
  const double ratio = static_cast<double>(kana) / static_cast<double>(total);
  const double threshold = config.jp_script_ratio_threshold;
  if (kana > 0 && ratio >= threshold) {
    const double confidence = threshold <= 0.0 ? 1.0 : std::min(1.0, ratio / threshold);
    return {"ja", confidence, LangStage::characteristics_fallback};
  }

  utf8::Script best = utf8::Script::common;
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < kScripts; ++i) {
    const auto s = static_cast<utf8::Script>(i);
    if (s == utf8::Script::common || s == utf8::Script::hiragana || s == utf8::Script::katakana) {
      continue;
    }
    if (counts[i] > best_count) {
      best = s;
      best_count = counts[i];
    }
  }
  if (best_count == 0) return {"und", 0.0, LangStage::characteristics_fallback};
  return {std::string(detail::language_for(best)),
          static_cast<double>(best_count) / static_cast<double>(total),
          LangStage::characteristics_fallback};
}

/// Primary verdict if confident (>= uncertainty_threshold), else fallback.
/// Without a primary classifier, or if it fails, the fallback decides.
inline LangVerdict identify(const LangIdConfig& config, std::string_view text,
                            bool* primary_failed = nullptr) {
  if (primary_failed) *primary_failed = false;
  if (config.classifier) {
    try {
      auto verdict = classify_primary(config, text);
      if (verdict.confidence >= config.uncertainty_threshold) return verdict;
    } catch (const BackendError&) {
      if (primary_failed) *primary_failed = true;
    }
  }
  return classify_fallback(config, text);
}

/// Keeps documents identified as "ja" and records their language. Removed
/// documents are tallied as "lang:<code>".
inline Corpus filter_non_japanese(const LangIdConfig& config, const Corpus& corpus,
                                  StageStats* stats = nullptr, unsigned workers = 1) {
  config.validate();
  // Non-shareable backends get one call at a time.
  std::mutex backend_mutex;
  const bool serialize = config.classifier && !config.classifier->shareable();

  struct Outcome {
    LangVerdict verdict;
    bool primary_failed = false;
  };
  const auto outcomes = parallel_map<Outcome>(corpus.size(), workers, [&](std::size_t i) {
    Outcome o;
    const auto& text = corpus.documents[i].text;
    if (serialize) {
      std::lock_guard lock(backend_mutex);
      o.verdict = identify(config, text, &o.primary_failed);
    } else {
      o.verdict = identify(config, text, &o.primary_failed);
    }
    return o;
  });

  Corpus out;
  out.provenance = corpus.provenance;
  StageStats local;
  local.name = "lang_id";
  local.before = count_by_source(corpus);
  std::uint64_t by_primary = 0, by_fallback = 0, failures = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& o = outcomes[i];
    (o.verdict.stage == LangStage::primary_classifier ? by_primary : by_fallback) += 1;
    failures += o.primary_failed;
    if (o.verdict.lang != "ja") {
      ++local.removed["lang:" + o.verdict.lang];
      continue;
    }
    Document doc = corpus.documents[i];
    doc.lang = "ja";
    out.documents.push_back(std::move(doc));
  }
  local.after = count_by_source(out);
  local.counters["decided_by_primary"] = by_primary;
  local.counters["decided_by_fallback"] = by_fallback;
  local.counters["primary_failures"] = failures;
  if (stats) *stats = std::move(local);
  return out;
}

}  // namespace bizcorpus
