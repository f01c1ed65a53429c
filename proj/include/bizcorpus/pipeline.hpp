#pragma once

// End-to-end corpus pipeline driven by one declarative JSON config:
// ingest -> curate -> lang_id -> denoise -> dedup -> count_tokens, followed by
// the epoch mixture plan and, when configured, the update-mix plan.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bizcorpus/curation.hpp"
#include "bizcorpus/dedup.hpp"
#include "bizcorpus/document.hpp"
#include "bizcorpus/errors.hpp"
#include "bizcorpus/hash.hpp"
#include "bizcorpus/jsonl.hpp"
#include "bizcorpus/lang_id.hpp"
#include "bizcorpus/mixture.hpp"
#include "bizcorpus/noise_filter.hpp"
#include "bizcorpus/parallel.hpp"
#include "bizcorpus/stats.hpp"
#include "bizcorpus/tokenizer.hpp"
#include "bizcorpus/utf8.hpp"
#include "bizcorpus/wire.hpp"

namespace bizcorpus {

struct InputSpec {
  std::filesystem::path path;
  SourceTag source = SourceTag::other;
};

struct ClassifierCommand {
  std::string command;
  std::chrono::milliseconds timeout{30000};
};

struct PipelineConfig {
  std::vector<InputSpec> inputs;
  std::optional<std::filesystem::path> curation_rules;
  std::vector<SourceTag> curate_sources = {SourceTag::curated_business};
  LangIdConfig lang_id;
  std::optional<ClassifierCommand> classifier_command;
  NoiseConfig noise;
  DedupConfig dedup;
  bool dump_sentence_table = false;
  MixtureSpec mixture;
  std::optional<UpdateMixSpec> update_mix;
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;
  std::uint64_t seed = 0;

  /// Checks values and that every referenced file exists.
  void validate() const {
    for (const auto& in : inputs) {
      if (!std::filesystem::is_regular_file(in.path)) {
        throw ConfigError("input file not found: " + in.path.string());
      }
    }
    if (curation_rules && !std::filesystem::is_regular_file(*curation_rules)) {
      throw ConfigError("curation rule file not found: " + curation_rules->string());
    }
    if (classifier_command && classifier_command->command.empty()) {
      throw ConfigError("lang_id.classifier.command must be non-empty");
    }
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (output_dir.empty()) throw ConfigError("output_dir must be set");
    lang_id.validate();
    noise.validate();
    dedup.validate();
    mixture.validate();
    if (update_mix) update_mix->validate();
  }
};

namespace detail {

inline std::u32string terminators_from(const nlohmann::json& j, const char* key,
                                       std::u32string fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  const auto s = it->get<std::string>();
  if (!utf8::is_valid(s)) throw ConfigError(std::string("noise.") + key + " is not valid UTF-8");
  return utf8::decode(s);
}

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                                const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

}  // namespace detail

/// Relative paths resolve against `base_dir` (the config file's directory).
inline PipelineConfig parse_pipeline_config(const nlohmann::json& j,
                                            const std::filesystem::path& base_dir = {}) {
  using nlohmann::json;
  if (!j.is_object()) throw ConfigError("pipeline config must be a JSON object");
  detail::reject_unknown_keys(j,
                              {"seed", "output_dir", "threads", "inputs", "curation", "lang_id",
                               "noise", "dedup", "mixture", "update_mix"},
                              "");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };

  PipelineConfig c;
  try {
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = resolve(j.value("output_dir", c.output_dir.string()));
    c.threads = j.value("threads", 1u);
    for (const auto& in : j.value("inputs", json::array())) {
      c.inputs.push_back({resolve(in.at("path").get<std::string>()),
                          source_from_string(in.at("source").get<std::string>())});
    }
    if (auto it = j.find("curation"); it != j.end()) {
      detail::reject_unknown_keys(*it, {"rules", "sources"}, "curation.");
      if (it->contains("rules")) c.curation_rules = resolve(it->at("rules").get<std::string>());
      if (it->contains("sources")) {
        c.curate_sources.clear();
        for (const auto& s : it->at("sources")) {
          c.curate_sources.push_back(source_from_string(s.get<std::string>()));
        }
      }
    }
    if (auto it = j.find("lang_id"); it != j.end()) {
      detail::reject_unknown_keys(
          *it, {"uncertainty_threshold", "jp_script_ratio_threshold", "classifier"}, "lang_id.");
      c.lang_id.uncertainty_threshold = it->value("uncertainty_threshold", 0.9);
      c.lang_id.jp_script_ratio_threshold = it->value("jp_script_ratio_threshold", 0.05);
      if (auto cl = it->find("classifier"); cl != it->end() && !cl->is_null()) {
        c.classifier_command = ClassifierCommand{
            cl->at("command").get<std::string>(),
            std::chrono::milliseconds(cl->value("timeout_ms", std::int64_t{30000}))};
      }
    }
    if (auto it = j.find("noise"); it != j.end()) {
      detail::reject_unknown_keys(*it,
                                  {"jp_terminators", "latin_terminators", "min_sentential_ratio",
                                   "punctuationless_languages"},
                                  "noise.");
      c.noise.jp_terminators = detail::terminators_from(*it, "jp_terminators", c.noise.jp_terminators);
      c.noise.latin_terminators =
          detail::terminators_from(*it, "latin_terminators", c.noise.latin_terminators);
      c.noise.min_sentential_ratio = it->value("min_sentential_ratio", 0.5);
      if (it->contains("punctuationless_languages")) {
        c.noise.punctuationless_languages.clear();
        for (const auto& l : it->at("punctuationless_languages")) {
          c.noise.punctuationless_languages.insert(l.get<std::string>());
        }
      }
    }
    if (auto it = j.find("dedup"); it != j.end()) {
      detail::reject_unknown_keys(*it, {"sentence_frequency_threshold", "dump_sentence_table"},
                                  "dedup.");
      const auto threshold = it->value("sentence_frequency_threshold", std::int64_t{15});
      if (threshold < 1) throw ConfigError("dedup.sentence_frequency_threshold must be >= 1");
      c.dedup.sentence_frequency_threshold = static_cast<std::uint64_t>(threshold);
      c.dump_sentence_table = it->value("dump_sentence_table", false);
    }
    c.dedup.jp_terminators = c.noise.jp_terminators;
    c.dedup.latin_terminators = c.noise.latin_terminators;
    if (auto it = j.find("mixture"); it != j.end()) {
      detail::reject_unknown_keys(*it, {"weights"}, "mixture.");
      if (it->contains("weights")) {
        c.mixture.weights.clear();
        for (const auto& [name, w] : it->at("weights").items()) {
          c.mixture.weights[source_from_string(name)] = w.get<double>();
        }
      }
    }
    c.mixture.seed = c.seed;
    if (auto it = j.find("update_mix"); it != j.end() && !it->is_null()) {
      detail::reject_unknown_keys(*it, {"r", "total"}, "update_mix.");
      UpdateMixSpec u;
      u.r = it->value("r", 0.1);
      const auto total = it->value("total", std::int64_t{1000});
      if (total < 1) throw ConfigError("update_mix.total must be >= 1");
      u.total = static_cast<std::uint64_t>(total);
      u.seed = c.seed;
      c.update_mix = u;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed pipeline config: ") + e.what());
  }
  return c;
}

/// BIZCORPUS_OUTPUT_DIR and BIZCORPUS_THREADS override the file.
inline void apply_env_overrides(PipelineConfig& c) {
  if (const char* dir = std::getenv("BIZCORPUS_OUTPUT_DIR"); dir && *dir) c.output_dir = dir;
  if (const char* t = std::getenv("BIZCORPUS_THREADS"); t && *t) {
    char* end = nullptr;
    const long n = std::strtol(t, &end, 10);
    if (*end != '\0' || n < 1) throw ConfigError(std::string("BIZCORPUS_THREADS must be a positive integer, got '") + t + "'");
    c.threads = static_cast<unsigned>(n);
  }
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path, bool env = true) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
  }
  auto c = parse_pipeline_config(j, path.parent_path());
  if (env) apply_env_overrides(c);
  return c;
}

/// Everything that determines outputs. Output location and thread count are
/// execution details and stay out of the digest.
inline nlohmann::json canonical_config(const PipelineConfig& c) {
  using nlohmann::json;
  json inputs = json::array();
  for (const auto& in : c.inputs) {
    inputs.push_back({{"path", in.path.lexically_normal().string()}, {"source", to_string(in.source)}});
  }
  json curate = json::array();
  for (SourceTag t : c.curate_sources) curate.push_back(to_string(t));
  json weights = json::object();
  for (const auto& [tag, w] : c.mixture.weights) weights[std::string(to_string(tag))] = w;
  json langs = json::array();
  for (const auto& l : c.noise.punctuationless_languages) langs.push_back(l);
  json j = {
      {"seed", c.seed},
      {"inputs", inputs},
      {"curation",
       {{"rules", c.curation_rules ? json(c.curation_rules->lexically_normal().string()) : json(nullptr)},
        {"sources", curate}}},
      {"lang_id",
       {{"uncertainty_threshold", c.lang_id.uncertainty_threshold},
        {"jp_script_ratio_threshold", c.lang_id.jp_script_ratio_threshold},
        {"classifier", c.classifier_command ? json(c.classifier_command->command) : json(nullptr)}}},
      {"noise",
       {{"jp_terminators", utf8::encode(c.noise.jp_terminators)},
        {"latin_terminators", utf8::encode(c.noise.latin_terminators)},
        {"min_sentential_ratio", c.noise.min_sentential_ratio},
        {"punctuationless_languages", langs}}},
      {"dedup", {{"sentence_frequency_threshold", c.dedup.sentence_frequency_threshold}}},
      {"mixture", {{"weights", weights}}},
      {"update_mix", c.update_mix ? json{{"r", c.update_mix->r}, {"total", c.update_mix->total}}
                                  : json(nullptr)},
  };
  return j;
}

inline std::string config_digest(const PipelineConfig& c) {
  return to_hex(fnv1a64(canonical_config(c).dump()));
}

// ---------------------------------------------------------------------------
// Stats serialization

inline nlohmann::json to_json(const SourceCounts& counts) {
  nlohmann::json j = nlohmann::json::object();
  for (SourceTag tag : kAllSources) {
    auto it = counts.find(tag);
    j[std::string(to_string(tag))] = it == counts.end() ? 0 : it->second;
  }
  return j;
}

inline nlohmann::json to_json(const StageStats& s) {
  return {{"name", s.name},
          {"before", to_json(s.before)},
          {"after", to_json(s.after)},
          {"documents_before", total(s.before)},
          {"documents_after", total(s.after)},
          {"removed", s.removed},
          {"counters", s.counters}};
}

inline nlohmann::json to_json(const IngestStats& s) {
  return {{"path", s.path},
          {"source", to_string(s.source)},
          {"digest", s.digest},
          {"lines", s.lines},
          {"documents", s.documents},
          {"malformed", s.malformed}};
}

/// Manifest fields that are not stage statistics.
struct ManifestInfo {
  std::string status = "complete";
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string generated_at;
  std::optional<std::string> failed_stage;
  std::optional<std::string> error;
  MixtureSpec mixture;
  /// Set once the epoch plan exists.
  std::optional<SourceCounts> epoch_instances;
  std::optional<SourceCounts> epoch_tokens;
  nlohmann::json update_mix;
  nlohmann::json outputs = nlohmann::json::object();
};

/// One row per source tag, including empty sources, shaped like a
/// per-source token table with a grand total.
inline nlohmann::json build_manifest(const PipelineStats& stats, const ManifestInfo& info) {
  using nlohmann::json;
  json ingest = json::array();
  for (const auto& s : stats.ingest) ingest.push_back(to_json(s));
  json stages = json::array();
  for (const auto& s : stats.stages) stages.push_back(to_json(s));

  const SourceCounts* final_docs = stats.stages.empty() ? nullptr : &stats.stages.back().after;
  json rows = json::array();
  std::uint64_t documents = 0;
  for (SourceTag tag : kAllSources) {
    auto get = [tag](const SourceCounts* c) -> std::uint64_t {
      if (!c) return 0;
      auto it = c->find(tag);
      return it == c->end() ? 0 : it->second;
    };
    const auto docs = get(final_docs);
    documents += docs;
    json row = {{"source", to_string(tag)},
                {"label", display_name(tag)},
                {"documents", docs},
                {"tokens", get(&stats.tokens.per_source)},
                {"weight", info.mixture.weight(tag)}};
    if (info.epoch_instances) row["epoch_instances"] = get(&*info.epoch_instances);
    if (info.epoch_tokens) row["epoch_tokens"] = get(&*info.epoch_tokens);
    rows.push_back(std::move(row));
  }
  json totals = {{"documents", documents}, {"tokens", stats.tokens.grand_total}};
  if (info.epoch_instances) totals["epoch_instances"] = total(*info.epoch_instances);
  if (info.epoch_tokens) totals["epoch_tokens"] = total(*info.epoch_tokens);

  json j = {{"status", info.status},
            {"generated_at", info.generated_at},
            {"seed", info.seed},
            {"config_digest", info.config_digest},
            {"tokenizer", stats.tokens.tokenizer},
            {"ingest", ingest},
            {"stages", stages},
            {"sources", rows},
            {"totals", totals},
            {"update_mix", info.update_mix},
            {"outputs", info.outputs}};
  if (info.failed_stage) j["failed_stage"] = *info.failed_stage;
  if (info.error) j["error"] = *info.error;
  return j;
}

/// Throws IoError if the path cannot be written.
inline void emit_manifest(const PipelineStats& stats, const ManifestInfo& info,
                          const std::filesystem::path& path) {
  write_file(path, build_manifest(stats, info).dump(2) + "\n");
}

/// Blanks the timestamp so manifests from different runs compare equal.
inline nlohmann::json normalize_manifest(nlohmann::json manifest) {
  if (manifest.contains("generated_at")) manifest["generated_at"] = "";
  return manifest;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Running

struct PipelineHooks {
  /// Overrides the configured classifier command (tests, embedding).
  std::shared_ptr<ClassifierBackend> classifier;
  std::shared_ptr<const TokenizerBackend> tokenizer;
  std::function<std::string()> clock = utc_timestamp;
};

struct PipelineResult {
  PipelineStats stats;
  Corpus cleaned;
  SamplePlan epoch_plan;
  std::optional<SamplePlan> update_plan;
  nlohmann::json manifest;
};

/// Ingests every input and runs all stages in their fixed order. Writes
/// cleaned.jsonl, epoch_plan.jsonl, update_plan.jsonl (if configured),
/// sentence_frequencies.jsonl (if requested) and manifest.json under the
/// output directory. On a stage failure the manifest is still written with
/// status "incomplete" and a StageError is thrown.
inline PipelineResult run_pipeline(const PipelineConfig& config, const PipelineHooks& hooks = {}) {
  config.validate();
  const CurationRuleSet rules =
      config.curation_rules ? load_rule_set(*config.curation_rules) : CurationRuleSet{};

  LangIdConfig lang_id = config.lang_id;
  if (hooks.classifier) {
    lang_id.classifier = hooks.classifier;
  } else if (config.classifier_command) {
    lang_id.classifier = std::make_shared<WireClassifier>(
        std::make_unique<ProcessTransport>(config.classifier_command->command,
                                           config.classifier_command->timeout),
        "wire:" + config.classifier_command->command);
  }
  std::shared_ptr<const TokenizerBackend> tokenizer =
      hooks.tokenizer ? hooks.tokenizer : std::make_shared<DefaultTokenizer>();

  const auto& out_dir = config.output_dir;
  std::filesystem::create_directories(out_dir);
  const unsigned workers = config.threads;

  PipelineResult result;
  ManifestInfo info;
  info.seed = config.seed;
  info.config_digest = config_digest(config);
  info.mixture = config.mixture;
  info.update_mix = nullptr;
  info.status = "incomplete";

  auto write_manifest = [&] {
    info.generated_at = hooks.clock ? hooks.clock() : std::string{};
    result.manifest = build_manifest(result.stats, info);
    write_file(out_dir / "manifest.json", result.manifest.dump(2) + "\n");
  };
  std::string current = "ingest";
  auto fail = [&](const std::string& document_id, const std::string& what) -> StageError {
    info.failed_stage = current;
    info.error = what;
    try {
      write_manifest();
    } catch (const std::exception&) {
      // report the original failure
    }
    return StageError(current, document_id, what);
  };

  try {
    Corpus corpus;
    for (const auto& in : config.inputs) {
      IngestStats is;
      Corpus part = ingest_jsonl(in.path, in.source, &is);
      result.stats.ingest.push_back(std::move(is));
      corpus.append(std::move(part));
    }
    corpus.require_unique_ids();

    auto record = [&](StageStats s) {
      s.check();
      result.stats.stages.push_back(std::move(s));
    };
    StageStats s;

    current = "curate";
    corpus = curate(rules, corpus, &s, workers, &config.curate_sources);
    record(std::move(s));

    current = "lang_id";
    corpus = filter_non_japanese(lang_id, corpus, &s, workers);
    record(std::move(s));

    current = "denoise";
    corpus = filter_noise(config.noise, corpus, &s, workers);
    record(std::move(s));

    current = "dedup_documents";
    corpus = dedup_documents(config.dedup, corpus, &s);
    record(std::move(s));

    current = "dedup_sentences";
    const auto table = count_sentences(config.dedup, corpus, workers);
    corpus = dedup_sentences(config.dedup, corpus, table, &s, workers);
    // Removing shared sentences can make two documents identical; a second
    // document pass keeps the output free of byte-equal pairs.
    StageStats residual;
    corpus = dedup_documents(config.dedup, corpus, &residual);
    s.after = residual.after;
    s.removed["duplicate_after_sentence_removal"] = residual.removed["duplicate_document"];
    record(std::move(s));
    if (config.dump_sentence_table) {
      write_file(out_dir / "sentence_frequencies.jsonl", table.to_jsonl());
      info.outputs["sentence_frequencies"] = "sentence_frequencies.jsonl";
    }

    current = "count_tokens";
    result.stats.tokens = count_tokens(corpus, *tokenizer);

    current = "mixture";
    result.epoch_plan = plan_epoch(config.mixture, corpus);
    info.epoch_instances = result.epoch_plan.counts;
    info.epoch_tokens = plan_token_totals(result.epoch_plan, corpus, *tokenizer);
    write_file(out_dir / "epoch_plan.jsonl", result.epoch_plan.to_jsonl());
    info.outputs["epoch_plan"] = "epoch_plan.jsonl";

    if (config.update_mix) {
      current = "update_mix";
      Corpus latest, non_latest;
      for (const auto& doc : corpus) {
        (doc.source == SourceTag::latest_update ? latest : non_latest).documents.push_back(doc);
      }
      result.update_plan = sample_update_mix(*config.update_mix, latest, non_latest);
      const auto report = verify_plan(*result.update_plan, *config.update_mix);
      if (!report.ok) throw ConsistencyError(report.message);
      info.update_mix = {{"r", config.update_mix->r},
                         {"total", config.update_mix->total},
                         {"non_latest", report.realized_non_latest},
                         {"latest", report.realized_latest}};
      write_file(out_dir / "update_plan.jsonl", result.update_plan->to_jsonl());
      info.outputs["update_plan"] = "update_plan.jsonl";
    }

    current = "write";
    write_jsonl(out_dir / "cleaned.jsonl", corpus);
    info.outputs["cleaned"] = "cleaned.jsonl";
    result.cleaned = std::move(corpus);
  } catch (const StageError& e) {
    current = e.stage();
    throw fail(e.document_id(), e.what());
  } catch (const std::exception& e) {
    throw fail({}, e.what());
  }

  info.status = "complete";
  write_manifest();
  return result;
}

}  // namespace bizcorpus
