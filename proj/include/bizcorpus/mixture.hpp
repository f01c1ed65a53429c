#pragma once

// Training-data mixture plans.
//
// Epoch plans repeat each source according to a per-source weight: every
// document appears floor(w) times, and a seeded subset of round(frac(w) * n)
// documents appears once more. Update plans mix latest and non-latest
// documents so that exactly round(r * total) instances come from the
// non-latest pool.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bizcorpus/document.hpp"
#include "bizcorpus/errors.hpp"
#include "bizcorpus/hash.hpp"
#include "bizcorpus/jsonl.hpp"
#include "bizcorpus/random.hpp"
#include "bizcorpus/stats.hpp"
#include "bizcorpus/tokenizer.hpp"

namespace bizcorpus {

/// floor(x + 0.5). The tiny slack keeps products like 0.35 * 10, which land
/// just below .5 in binary floating point, on the half-up side.
inline std::uint64_t round_half_up(double x) {
  return static_cast<std::uint64_t>(std::floor(x + 0.5 + 1e-9 * std::max(1.0, std::fabs(x))));
}

struct MixtureSpec {
  std::map<SourceTag, double> weights = {{SourceTag::wikipedia, 2.0},
                                         {SourceTag::curated_business, 2.0}};
  std::uint64_t seed = 0;

  double weight(SourceTag tag) const {
    auto it = weights.find(tag);
    return it == weights.end() ? 1.0 : it->second;
  }

  void validate() const {
    for (const auto& [tag, w] : weights) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw ConfigError("mixture weight for " + std::string(to_string(tag)) + " must be > 0");
      }
    }
  }
};

struct UpdateMixSpec {
  double r = 0.1;
  std::uint64_t total = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("update mix ratio r must be in [0,1]");
    if (total < 1) throw ConfigError("update mix total must be >= 1");
  }

  std::uint64_t non_latest_count() const {
    return round_half_up(r * static_cast<double>(total));
  }
};

struct PlanEntry {
  SourceTag source = SourceTag::other;
  std::string id;

  bool operator==(const PlanEntry&) const = default;
};

struct SamplePlan {
  std::vector<PlanEntry> entries;
  SourceCounts counts;

  std::size_t size() const noexcept { return entries.size(); }

  void recount() {
    counts.clear();
    for (SourceTag tag : kAllSources) counts[tag] = 0;
    for (const auto& e : entries) ++counts[e.source];
  }

  std::string to_jsonl() const {
    std::string out;
    for (const auto& e : entries) {
      out += nlohmann::json{{"id", e.id}, {"source", to_string(e.source)}}.dump();
      out += '\n';
    }
    return out;
  }

  static SamplePlan from_jsonl(std::string_view content) {
    SamplePlan plan;
    for_each_line(content, [&](std::size_t line_no, std::string_view line) {
      if (is_blank(line)) return;
      try {
        const auto j = nlohmann::json::parse(line);
        plan.entries.push_back(
            {source_from_string(j.at("source").get<std::string>()), j.at("id").get<std::string>()});
      } catch (const std::exception& e) {
        throw ConfigError("plan line " + std::to_string(line_no) + ": " + e.what());
      }
    });
    plan.recount();
    return plan;
  }

  bool operator==(const SamplePlan& other) const { return entries == other.entries; }
};

inline SamplePlan plan_epoch(const MixtureSpec& spec, const Corpus& corpus) {
  spec.validate();
  std::map<SourceTag, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_source[corpus.documents[i].source].push_back(i);
  for (const auto& [tag, w] : spec.weights) {
    if (w > 1.0 && !by_source.contains(tag)) {
      throw ConfigError("mixture weight " + std::to_string(w) + " set for source " +
                        std::string(to_string(tag)) + " but the corpus has no such documents");
    }
  }

  SamplePlan plan;
  for (const auto& [tag, docs] : by_source) {
    const double w = spec.weight(tag);
    const auto whole = static_cast<std::uint64_t>(std::floor(w));
    const auto extra = std::min<std::uint64_t>(
        docs.size(), round_half_up((w - static_cast<double>(whole)) * static_cast<double>(docs.size())));
    for (std::uint64_t rep = 0; rep < whole; ++rep) {
      for (std::size_t i : docs) plan.entries.push_back({tag, corpus.documents[i].id});
    }
    if (extra > 0) {
      std::vector<std::size_t> pick = docs;
      Rng rng(derive_seed(spec.seed, "epoch/extra/" + std::string(to_string(tag))));
      rng.shuffle(std::span(pick));
      pick.resize(extra);
      std::sort(pick.begin(), pick.end());
      for (std::size_t i : pick) plan.entries.push_back({tag, corpus.documents[i].id});
    }
  }
  Rng order(derive_seed(spec.seed, "epoch/order"));
  order.shuffle(std::span(plan.entries));
  plan.recount();
  return plan;
}

namespace detail {

/// `count` draws from `pool`: without replacement until the pool is
/// exhausted, then uniformly with replacement.
inline std::vector<std::size_t> draw(std::size_t pool, std::uint64_t count, Rng& rng) {
  std::vector<std::size_t> order(pool);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span(order));
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    out.push_back(k < pool ? order[k] : static_cast<std::size_t>(rng.below(pool)));
  }
  return out;
}

}  // namespace detail

/// Entries drawn from `latest` are tagged latest_update; entries from
/// `non_latest` keep their own source tag, which must not be latest_update.
inline SamplePlan sample_update_mix(const UpdateMixSpec& spec, const Corpus& latest,
                                    const Corpus& non_latest) {
  spec.validate();
  const std::uint64_t from_old = spec.non_latest_count();
  const std::uint64_t from_new = spec.total - from_old;
  if (from_old > 0 && non_latest.empty()) {
    throw ConfigError("update mix needs " + std::to_string(from_old) +
                      " non-latest instances but the non-latest pool is empty");
  }
  if (from_new > 0 && latest.empty()) {
    throw ConfigError("update mix needs " + std::to_string(from_new) +
                      " latest instances but the latest pool is empty");
  }
  for (const auto& doc : non_latest) {
    if (doc.source == SourceTag::latest_update) {
      throw ConfigError("non-latest pool contains latest_update document " + doc.id);
    }
  }

  SamplePlan plan;
  plan.entries.reserve(spec.total);
  Rng old_rng(derive_seed(spec.seed, "update/non_latest"));
  for (std::size_t i : detail::draw(non_latest.size(), from_old, old_rng)) {
    const auto& doc = non_latest.documents[i];
    plan.entries.push_back({doc.source, doc.id});
  }
  Rng new_rng(derive_seed(spec.seed, "update/latest"));
  for (std::size_t i : detail::draw(latest.size(), from_new, new_rng)) {
    plan.entries.push_back({SourceTag::latest_update, latest.documents[i].id});
  }
  Rng order(derive_seed(spec.seed, "update/order"));
  order.shuffle(std::span(plan.entries));
  plan.recount();
  return plan;
}

struct PlanReport {
  bool ok = false;
  std::uint64_t expected_non_latest = 0;
  std::uint64_t realized_non_latest = 0;
  std::uint64_t realized_latest = 0;
  SourceCounts histogram;
  std::string message;
};

inline PlanReport verify_plan(const SamplePlan& plan, const UpdateMixSpec& spec) {
  spec.validate();
  PlanReport report;
  for (SourceTag tag : kAllSources) report.histogram[tag] = 0;
  for (const auto& e : plan.entries) ++report.histogram[e.source];
  report.realized_latest = report.histogram[SourceTag::latest_update];
  report.realized_non_latest = plan.size() - report.realized_latest;
  report.expected_non_latest = spec.non_latest_count();
  const bool size_ok = plan.size() == spec.total;
  report.ok = size_ok && report.realized_non_latest == report.expected_non_latest;
  if (report.ok) {
    report.message = "ok: " + std::to_string(report.realized_non_latest) + " non-latest / " +
                     std::to_string(report.realized_latest) + " latest";
  } else {
    report.message = "mismatch: expected " + std::to_string(report.expected_non_latest) +
                     " non-latest of " + std::to_string(spec.total) + ", plan has " +
                     std::to_string(report.realized_non_latest) + " non-latest of " +
                     std::to_string(plan.size());
  }
  return report;
}

/// Tokens a trainer would see per source when consuming the plan.
inline SourceCounts plan_token_totals(const SamplePlan& plan, const Corpus& corpus,
                                      const TokenizerBackend& tokenizer) {
  std::unordered_map<std::string_view, std::uint64_t> tokens_by_id;
  tokens_by_id.reserve(corpus.size());
  for (const auto& doc : corpus) tokens_by_id.emplace(doc.id, tokenizer.count(doc.text));
  SourceCounts out;
  for (SourceTag tag : kAllSources) out[tag] = 0;
  for (const auto& e : plan.entries) {
    auto it = tokens_by_id.find(e.id);
    if (it == tokens_by_id.end()) {
      throw ConsistencyError("plan references unknown document " + e.id);
    }
    out[e.source] += it->second;
  }
  return out;
}

}  // namespace bizcorpus
