// bizcorpus command-line front end.
//
// Exit codes: 0 success, 1 validation error, 2 stage failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bizcorpus/bizcorpus.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bizcorpus;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kStageFailure = 2;

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw ConfigError(std::string(what) + " not found: " + path);
}

struct CorpusInput {
  std::vector<std::string> paths;
  std::string source = "other";
};

void add_input_options(CLI::App* cmd, CorpusInput& in) {
  cmd->add_option("-i,--input", in.paths, "Input JSONL file(s)")->required();
  cmd->add_option("-s,--source", in.source,
                  "Source tag for records without a \"source\" field")
      ->capture_default_str();
}

Corpus load_inputs(const CorpusInput& in) {
  const SourceTag tag = source_from_string(in.source);
  for (const auto& p : in.paths) require_file(p, "input file");
  Corpus corpus;
  for (const auto& p : in.paths) corpus.append(ingest_jsonl(p, tag));
  corpus.require_unique_ids();
  return corpus;
}

void print(const json& j) { std::cout << j.dump(2) << std::endl; }

std::map<SourceTag, double> parse_weights(const std::vector<std::string>& items) {
  std::map<SourceTag, double> weights;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("weight must look like source=value: " + item);
    try {
      weights[source_from_string(item.substr(0, eq))] = std::stod(item.substr(eq + 1));
    } catch (const std::logic_error&) {
      throw ConfigError("bad weight value in " + item);
    }
  }
  return weights;
}

bench::PromptTemplates resolve_templates(const std::string& name) {
  if (name == "ja-v1") return bench::japanese_templates();
  if (name == "en-v1") return bench::english_templates();
  require_file(name, "prompt template file");
  return bench::load_templates(name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Business-domain Japanese corpus pipeline and QA benchmark harness"};
  app.require_subcommand(1);

  // run
  std::string config_path;
  std::string output_override;
  auto* run = app.add_subcommand("run", "Run the full pipeline from a config file");
  run->add_option("-c,--config", config_path, "Pipeline config (JSON)")->required();
  run->add_option("-o,--output-dir", output_override, "Override the output directory");

  // curate
  CorpusInput curate_in;
  std::string rules_path, curate_out;
  std::vector<std::string> curate_sources;
  auto* curate_cmd = app.add_subcommand("curate", "Keep documents matching curation rules");
  add_input_options(curate_cmd, curate_in);
  curate_cmd->add_option("-r,--rules", rules_path, "Curation rule file (JSON)")->required();
  curate_cmd->add_option("-o,--output", curate_out, "Output JSONL")->required();
  curate_cmd->add_option("--only", curate_sources,
                         "Apply rules only to these sources; others pass through");

  // langid
  CorpusInput lang_in;
  std::string lang_out, classifier_cmd;
  double uncertainty = 0.9, jp_ratio = 0.05;
  int classifier_timeout_ms = 30000;
  auto* lang_cmd = app.add_subcommand("langid", "Keep Japanese documents");
  add_input_options(lang_cmd, lang_in);
  lang_cmd->add_option("-o,--output", lang_out, "Output JSONL")->required();
  lang_cmd->add_option("--classifier", classifier_cmd,
                       "Primary classifier command (wire protocol); omit for fallback-only mode");
  lang_cmd->add_option("--classifier-timeout-ms", classifier_timeout_ms)->capture_default_str();
  lang_cmd->add_option("--uncertainty-threshold", uncertainty)->capture_default_str();
  lang_cmd->add_option("--jp-script-ratio", jp_ratio)->capture_default_str();

  // denoise
  CorpusInput noise_in;
  std::string noise_out, assume_lang;
  double min_ratio = 0.5;
  auto* noise_cmd = app.add_subcommand("denoise", "Strip noise lines and drop non-sentential documents");
  add_input_options(noise_cmd, noise_in);
  noise_cmd->add_option("-o,--output", noise_out, "Output JSONL")->required();
  noise_cmd->add_option("--min-sentential-ratio", min_ratio)->capture_default_str();
  noise_cmd->add_option("--assume-lang", assume_lang,
                        "Language for documents without a \"lang\" field");

  // dedup
  CorpusInput dedup_in;
  std::string dedup_out, table_out;
  std::uint64_t threshold = 15;
  unsigned dedup_threads = 1;
  auto* dedup_cmd = app.add_subcommand("dedup", "Remove duplicate documents and frequent sentences");
  add_input_options(dedup_cmd, dedup_in);
  dedup_cmd->add_option("-o,--output", dedup_out, "Output JSONL")->required();
  dedup_cmd->add_option("--threshold", threshold, "Sentences seen more often than this are removed")
      ->capture_default_str();
  dedup_cmd->add_option("--sentence-table", table_out, "Write the sentence frequency table");
  dedup_cmd->add_option("-j,--threads", dedup_threads)->capture_default_str();

  // mix
  auto* mix = app.add_subcommand("mix", "Build or verify sampling plans");
  mix->require_subcommand(1);
  CorpusInput epoch_in;
  std::vector<std::string> weight_items;
  std::uint64_t seed = 0;
  std::string plan_out;
  auto* epoch = mix->add_subcommand("epoch", "Per-source weighted epoch plan");
  add_input_options(epoch, epoch_in);
  epoch->add_option("-w,--weight", weight_items,
                    "source=weight (default wikipedia=2 curated_business=2, others 1)");
  epoch->add_option("--seed", seed)->capture_default_str();
  epoch->add_option("-o,--output", plan_out, "Plan JSONL")->required();

  std::vector<std::string> latest_paths, old_paths;
  UpdateMixSpec update_spec;
  auto* update = mix->add_subcommand("update", "Latest / non-latest update mixture");
  update->add_option("--latest", latest_paths, "Latest-update corpus (JSONL)")->required();
  update->add_option("--non-latest", old_paths, "Non-latest corpus (JSONL)")->required();
  update->add_option("-r,--ratio", update_spec.r, "Non-latest fraction")->capture_default_str();
  update->add_option("-n,--total", update_spec.total)->capture_default_str();
  update->add_option("--seed", update_spec.seed)->capture_default_str();
  update->add_option("-o,--output", plan_out, "Plan JSONL")->required();

  std::string verify_plan_path;
  UpdateMixSpec verify_spec;
  auto* verify = mix->add_subcommand("verify", "Check an update plan against r and total");
  verify->add_option("-p,--plan", verify_plan_path)->required();
  verify->add_option("-r,--ratio", verify_spec.r)->capture_default_str();
  verify->add_option("-n,--total", verify_spec.total)->capture_default_str();

  // stats
  CorpusInput stats_in;
  auto* stats_cmd = app.add_subcommand("stats", "Per-source document and token counts");
  add_input_options(stats_cmd, stats_in);

  // bench-run
  std::string questions_path, setting_name = "no_context", model_cmd, model_id = "model",
                              search_cmd, run_dir, templates_name = "ja-v1";
  unsigned in_flight = 1;
  std::size_t truncation = 1000;
  bool echo = false, resume = false;
  int backend_timeout_ms = 120000;
  auto* brun = app.add_subcommand("bench-run", "Run benchmark questions through a model");
  brun->add_option("-q,--questions", questions_path, "Questions JSONL")->required();
  brun->add_option("--setting", setting_name, "no_context | auto_rag | manual_rag")
      ->capture_default_str();
  brun->add_option("--model-command", model_cmd, "Model backend command (wire protocol)");
  brun->add_flag("--echo", echo, "Use the built-in echo model");
  brun->add_option("--model-id", model_id)->capture_default_str();
  brun->add_option("--search-command", search_cmd, "Search backend command for auto_rag");
  brun->add_option("--backend-timeout-ms", backend_timeout_ms)->capture_default_str();
  brun->add_option("--run-dir", run_dir, "Directory for per-question records")->required();
  brun->add_option("--templates", templates_name, "ja-v1 | en-v1 | path to template JSON")
      ->capture_default_str();
  brun->add_option("--truncation-chars", truncation)->capture_default_str();
  brun->add_option("--max-in-flight", in_flight)->capture_default_str();
  brun->add_flag("--resume", resume, "Reuse completed records in the run directory");

  // bench-judge
  std::string judge_run_dir, verdicts_path, judgments_out, judge_id;
  auto* bjudge = app.add_subcommand("bench-judge", "Record a judge's verdicts for a run");
  bjudge->add_option("--run-dir", judge_run_dir)->required();
  bjudge->add_option("--verdicts", verdicts_path, "Verdict JSONL")->required();
  bjudge->add_option("-o,--output", judgments_out, "Judgments JSONL")->required();
  bjudge->add_option("--judge", judge_id, "Judge id for verdicts without one");

  // bench-score
  std::vector<std::string> judgment_paths;
  auto* bscore = app.add_subcommand("bench-score", "Accuracy per model, setting and question set");
  bscore->add_option("-j,--judgments", judgment_paths, "Judgments JSONL file(s)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*run) {
      require_file(config_path, "config file");
      auto config = load_pipeline_config(config_path);
      if (!output_override.empty()) config.output_dir = output_override;
      const auto result = run_pipeline(config);
      json summary = {{"status", result.manifest["status"]},
                      {"output_dir", config.output_dir.string()},
                      {"documents", result.cleaned.size()},
                      {"totals", result.manifest["totals"]}};
      print(summary);
    } else if (*curate_cmd) {
      require_file(rules_path, "curation rule file");
      const auto rules = load_rule_set(rules_path);
      std::vector<SourceTag> only;
      for (const auto& s : curate_sources) only.push_back(source_from_string(s));
      const auto corpus = load_inputs(curate_in);
      StageStats st;
      const auto out = curate(rules, corpus, &st, 1, only.empty() ? nullptr : &only);
      write_jsonl(curate_out, out);
      print(to_json(st));
    } else if (*lang_cmd) {
      LangIdConfig lc;
      lc.uncertainty_threshold = uncertainty;
      lc.jp_script_ratio_threshold = jp_ratio;
      lc.validate();
      if (!classifier_cmd.empty()) {
        lc.classifier = std::make_shared<WireClassifier>(
            std::make_unique<ProcessTransport>(classifier_cmd,
                                               std::chrono::milliseconds(classifier_timeout_ms)),
            "wire:" + classifier_cmd);
      }
      const auto corpus = load_inputs(lang_in);
      StageStats st;
      const auto out = filter_non_japanese(lc, corpus, &st);
      write_jsonl(lang_out, out);
      print(to_json(st));
    } else if (*noise_cmd) {
      NoiseConfig nc;
      nc.min_sentential_ratio = min_ratio;
      nc.validate();
      auto corpus = load_inputs(noise_in);
      if (!assume_lang.empty()) {
        for (auto& doc : corpus.documents) {
          if (!doc.lang) doc.lang = assume_lang;
        }
      }
      StageStats st;
      const auto out = filter_noise(nc, corpus, &st);
      write_jsonl(noise_out, out);
      print(to_json(st));
    } else if (*dedup_cmd) {
      DedupConfig dc;
      dc.sentence_frequency_threshold = threshold;
      dc.validate();
      const auto corpus = load_inputs(dedup_in);
      StageStats docs_st, sent_st;
      auto out = dedup_documents(dc, corpus, &docs_st);
      const auto table = count_sentences(dc, out, std::max(1u, dedup_threads));
      out = dedup_sentences(dc, out, table, &sent_st, std::max(1u, dedup_threads));
      StageStats residual;
      out = dedup_documents(dc, out, &residual);
      sent_st.after = residual.after;
      sent_st.removed["duplicate_after_sentence_removal"] = residual.removed["duplicate_document"];
      write_jsonl(dedup_out, out);
      if (!table_out.empty()) write_file(table_out, table.to_jsonl());
      print(json::array({to_json(docs_st), to_json(sent_st)}));
    } else if (*epoch) {
      MixtureSpec spec;
      if (!weight_items.empty()) spec.weights = parse_weights(weight_items);
      spec.seed = seed;
      spec.validate();
      const auto corpus = load_inputs(epoch_in);
      const auto plan = plan_epoch(spec, corpus);
      write_file(plan_out, plan.to_jsonl());
      print({{"instances", to_json(plan.counts)}, {"total", plan.size()}});
    } else if (*update) {
      update_spec.validate();
      CorpusInput latest_in{latest_paths, "latest_update"};
      CorpusInput old_in{old_paths, "other"};
      const auto latest = load_inputs(latest_in);
      const auto old = load_inputs(old_in);
      const auto plan = sample_update_mix(update_spec, latest, old);
      write_file(plan_out, plan.to_jsonl());
      const auto report = verify_plan(plan, update_spec);
      print({{"non_latest", report.realized_non_latest},
             {"latest", report.realized_latest},
             {"total", plan.size()}});
    } else if (*verify) {
      require_file(verify_plan_path, "plan file");
      const auto plan = SamplePlan::from_jsonl(read_file(verify_plan_path));
      const auto report = verify_plan(plan, verify_spec);
      print({{"ok", report.ok},
             {"expected_non_latest", report.expected_non_latest},
             {"non_latest", report.realized_non_latest},
             {"latest", report.realized_latest},
             {"histogram", to_json(report.histogram)},
             {"message", report.message}});
      return report.ok ? kOk : kStageFailure;
    } else if (*stats_cmd) {
      const auto corpus = load_inputs(stats_in);
      const DefaultTokenizer tokenizer;
      const auto tokens = count_tokens(corpus, tokenizer);
      const auto docs = count_by_source(corpus);
      json rows = json::array();
      for (SourceTag tag : kAllSources) {
        rows.push_back({{"source", to_string(tag)},
                        {"label", display_name(tag)},
                        {"documents", docs.at(tag)},
                        {"tokens", tokens.per_source.at(tag)}});
      }
      print({{"tokenizer", tokens.tokenizer},
             {"sources", rows},
             {"totals", {{"documents", corpus.size()}, {"tokens", tokens.grand_total}}}});
    } else if (*brun) {
      require_file(questions_path, "questions file");
      const bench::TaskSetting setting{bench::parse_setting(setting_name), truncation};
      if (echo == !model_cmd.empty()) {
        throw ConfigError("give exactly one of --echo or --model-command");
      }
      const auto questions = bench::load_questions(questions_path);
      std::unique_ptr<bench::ModelBackend> model;
      if (echo) {
        model = std::make_unique<bench::EchoModel>(model_id);
      } else {
        model = std::make_unique<bench::WireModel>(
            model_id, std::make_unique<ProcessTransport>(
                          model_cmd, std::chrono::milliseconds(backend_timeout_ms)));
      }
      std::unique_ptr<bench::SearchBackend> search;
      if (!search_cmd.empty()) {
        search = std::make_unique<bench::WireSearch>(std::make_unique<ProcessTransport>(
            search_cmd, std::chrono::milliseconds(backend_timeout_ms)));
      }
      bench::RunOptions options;
      options.run_dir = run_dir;
      options.max_in_flight = std::max(1u, in_flight);
      options.resume = resume;
      options.search = search.get();
      options.templates = resolve_templates(templates_name);
      const auto records = bench::run_benchmark(setting, questions, *model, options);
      print(bench::run_manifest(setting, *model, options, records));
    } else if (*bjudge) {
      require_file(verdicts_path, "verdict file");
      const auto loaded = bench::load_run(judge_run_dir);
      const auto judgments =
          bench::record_judgments(loaded.records, read_file(verdicts_path), judge_id);
      write_file(judgments_out, bench::to_jsonl(judgments));
      print({{"judged", judgments.size()}, {"output", judgments_out}});
    } else if (*bscore) {
      std::vector<bench::Judgment> all;
      for (const auto& p : judgment_paths) {
        require_file(p, "judgments file");
        auto part = bench::parse_judgments(read_file(p));
        all.insert(all.end(), part.begin(), part.end());
      }
      json groups = json::array();
      for (const auto& g : bench::compute_accuracy(all)) groups.push_back(bench::to_json(g));
      print({{"groups", groups}});
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kStageFailure;
  }
  return kOk;
}
