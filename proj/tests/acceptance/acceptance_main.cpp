// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "bizcorpus/bizcorpus.hpp"
#include "support/synthetic.hpp"

using namespace bizcorpus;
using nlohmann::json;

namespace {

// Pinned limits. Every other comparison is exact.
constexpr double kDedupSecondsLimit = 10.0;
constexpr double kEndToEndSecondsLimit = 60.0;
constexpr std::size_t kTruncationChars = 1000;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t occurrences(const Corpus& c, const std::string& needle) {
  std::uint64_t n = 0;
  for (const auto& d : c) {
    for (auto pos = d.text.find(needle); pos != std::string::npos; pos = d.text.find(needle, pos + 1)) ++n;
  }
  return n;
}

std::uint64_t byte_equal_pairs(const Corpus& c) {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) n += c.documents[i].text == c.documents[j].text;
  }
  return n;
}

/// Runs the whole pipeline over one input file of `corpus`.
PipelineResult run_single_input(const Corpus& corpus, const std::filesystem::path& dir) {
  write_jsonl(dir / "input.jsonl", corpus);
  PipelineConfig c;
  c.inputs = {{dir / "input.jsonl", SourceTag::mc4}};
  c.mixture.weights = {{SourceTag::mc4, 1.0}};
  c.output_dir = dir / "out";
  c.threads = 4;
  return run_pipeline(c);
}

Corpus retag(Corpus c, SourceTag tag) {
  for (auto& d : c.documents) d.source = tag;
  return c;
}

void ac1(Outcome& o) {
  const auto t0 = Clock::now();
  const auto truth = synth::make_dedup_corpus(900, 100, {15, 15, 16, 16, 40}, 2024);
  synth::TempDir dir;
  const auto r = run_single_input(retag(truth.corpus, SourceTag::mc4), dir.path());
  const double secs = seconds_since(t0);

  o.require(truth.corpus.size() == 1000, "corpus has 1000 documents");
  bool same = r.cleaned.size() == truth.expected.size();
  for (std::size_t i = 0; same && i < truth.expected.size(); ++i) {
    same = r.cleaned.documents[i].id == truth.expected[i].first &&
           r.cleaned.documents[i].text == truth.expected[i].second;
  }
  o.require(same, "output equals oracle");
  const auto* docs = r.stats.stage("dedup_documents");
  o.require(docs && docs->removed.at("duplicate_document") == truth.duplicate_documents,
            "all planted duplicates removed");
  std::uint64_t planted_removed = 0;
  for (const auto& [s, f] : truth.boilerplate_frequency) planted_removed += f > truth.threshold ? f : 0;
  const auto* sent = r.stats.stage("dedup_sentences");
  o.require(sent && sent->counters.at("sentences_removed") == planted_removed,
            "exactly the planted over-threshold occurrences removed");
  const auto pairs = byte_equal_pairs(r.cleaned);
  o.require(pairs == 0, "no byte-equal pairs");
  o.require(secs < kDedupSecondsLimit, "runtime under limit");
  o.detail << "docs=" << truth.corpus.size() << " kept=" << r.cleaned.size()
           << " duplicates_removed=" << truth.duplicate_documents
           << " sentences_removed=" << planted_removed << " equal_pairs=" << pairs << " time=" << secs
           << "s";
}

void ac2(Outcome& o) {
  const auto truth = synth::make_dedup_corpus(200, 0, {15, 16}, 77);
  synth::TempDir dir;
  const auto r = run_single_input(truth.corpus, dir.path());
  for (const auto& [sentence, freq] : truth.boilerplate_frequency) {
    const auto before = occurrences(truth.corpus, sentence);
    const auto after = occurrences(r.cleaned, sentence);
    o.require(before == freq, "planted frequency");
    o.require(after == (freq <= 15 ? freq : 0), "frequency " + std::to_string(freq));
    o.detail << "freq" << freq << ":" << before << "->" << after << " ";
  }
}

void ac3(Outcome& o) {
  Corpus latest, old;
  for (int i = 0; i < 1000; ++i) {
    latest.documents.push_back(synth::doc("new" + std::to_string(i), "新" + std::to_string(i),
                                          SourceTag::latest_update));
    old.documents.push_back(synth::doc("old" + std::to_string(i), "旧" + std::to_string(i),
                                       i % 2 ? SourceTag::wikipedia : SourceTag::mc4));
  }
  const std::pair<double, std::uint64_t> grid[] = {{0.0, 0}, {0.1, 100}, {0.3, 300}};
  for (auto [r, expected] : grid) {
    UpdateMixSpec s;
    s.r = r;
    s.total = 1000;
    s.seed = 1234;
    const auto a = sample_update_mix(s, latest, old);
    const auto b = sample_update_mix(s, latest, old);
    const auto report = verify_plan(a, s);
    o.require(a.size() == 1000, "total 1000");
    o.require(report.ok && report.realized_non_latest == expected, "r=" + std::to_string(r));
    o.require(a.to_jsonl() == b.to_jsonl(), "rerun byte-identical");
    o.detail << "r=" << r << ":non_latest=" << report.realized_non_latest << " ";
  }
}

void ac4(Outcome& o) {
  const auto corpus = synth::make_table_fixture();
  MixtureSpec spec;
  spec.weights = {{SourceTag::wikipedia, 2.0},  {SourceTag::curated_business, 2.0},
                  {SourceTag::patent, 1.0},     {SourceTag::cc100, 1.0},
                  {SourceTag::mc4, 1.0},        {SourceTag::common_crawl, 1.0}};
  spec.seed = 9;
  const auto plan = plan_epoch(spec, corpus);
  std::map<std::string, std::uint64_t> per_doc;
  for (const auto& e : plan.entries) ++per_doc[e.id];
  for (const auto& [tag, units] : synth::table_fixture_units()) {
    const std::uint64_t factor = spec.weights.at(tag) == 2.0 ? 2 : 1;
    const auto got = plan.counts.count(tag) ? plan.counts.at(tag) : 0;
    o.require(got == factor * units, std::string(to_string(tag)));
    o.detail << to_string(tag) << "=" << got << "/" << units << " ";
  }
  bool each = per_doc.size() == corpus.size();
  for (const auto& d : corpus) {
    const std::uint64_t factor = spec.weights.at(d.source) == 2.0 ? 2 : 1;
    each = each && per_doc[d.id] == factor;
  }
  o.require(each, "every document repeated by its weight");
}

void ac5(Outcome& o) {
  auto stub = [](double confidence) {
    LangIdConfig c;
    c.classifier = std::make_shared<FunctionClassifier>(
        "stub", [=](std::string_view) { return ClassifierResult{"en", confidence}; });
    return c;
  };
  const std::string text = "こんにちはせかい";
  const auto low = identify(stub(0.5), text);
  const auto high = identify(stub(0.95), text);
  o.require(low.stage == LangStage::characteristics_fallback && low.lang == "ja", "0.5 defers");
  o.require(high.stage == LangStage::primary_classifier && high.lang == "en", "0.95 decides");

  // The same cascade through an external classifier process.
  auto wire = [](const char* confidence) {
    LangIdConfig c;
    c.classifier = std::make_shared<WireClassifier>(
        std::make_unique<ProcessTransport>(std::string(BIZCORPUS_STUB_PATH) +
                                               " --mode classifier --lang en --confidence " + confidence,
                                           std::chrono::milliseconds(10000)));
    return c;
  };
  const auto wlow = identify(wire("0.5"), text);
  const auto whigh = identify(wire("0.95"), text);
  o.require(wlow.stage == LangStage::characteristics_fallback, "process stub 0.5 defers");
  o.require(whigh.stage == LangStage::primary_classifier, "process stub 0.95 decides");

  std::mt19937_64 rng(5);
  std::uint64_t hiragana_ok = 0;
  const int trials = 500;
  for (int i = 0; i < trials; ++i) {
    std::u32string s;
    const auto n = 1 + rng() % 40;
    for (std::uint64_t k = 0; k < n; ++k) s += static_cast<char32_t>(0x3041 + rng() % 86);
    hiragana_ok += classify_fallback(LangIdConfig{}, utf8::encode(s)).lang == "ja";
  }
  o.require(hiragana_ok == trials, "pure hiragana is Japanese");
  o.detail << "0.5->" << to_string(low.stage) << " 0.95->" << to_string(high.stage)
           << " hiragana=" << hiragana_ok << "/" << trials;
}

void ac6(Outcome& o) {
  const auto truth = synth::make_noise_corpus(600, 31);
  StageStats st;
  const auto out = filter_noise(NoiseConfig{}, truth.corpus, &st, 4);
  const std::pair<const char*, std::uint64_t> checks[] = {
      {"lines_removed:date_only", truth.date_lines},
      {"lines_removed:url_only", truth.url_lines},
      {"lines_removed:markup_fragment", truth.markup_lines}};
  for (const auto& [key, planted] : checks) {
    const auto got = st.counters.at(key);
    o.require(got == planted, key);
    o.detail << key << "=" << got << "/" << planted << " ";
  }
  o.require(st.removed.at("non_sentential") == truth.non_sentential_documents, "non_sentential");
  o.require(st.removed.at("empty_after_strip") == truth.empty_documents, "empty_after_strip");
  bool texts = out.size() == truth.expected.size();
  for (const auto& d : out) texts = texts && truth.expected.count(d.id) && truth.expected.at(d.id) == d.text;
  o.require(texts, "surviving texts");
  o.detail << "non_sentential=" << st.removed.at("non_sentential") << "/" << truth.non_sentential_documents;
}

void ac7(Outcome& o) {
  using namespace bench;
  auto jsonl = [](int total, int correct, const char* set) {
    std::string s;
    for (int i = 0; i < total; ++i) {
      // Incorrect answers fail one criterion or the other.
      const bool ok = i < correct;
      json j = {{"question_id", std::string(set) + std::to_string(i)},
                {"model_id", "m"},
                {"setting", "no_context"},
                {"question_set", set},
                {"content_faithful", ok || i % 2},
                {"instruction_followed", ok || i % 2 == 0}};
      s += j.dump() + "\n";
    }
    return s;
  };
  const auto fifty = parse_judgments(jsonl(50, 45, "non_latest"));
  const auto ten = parse_judgments(jsonl(10, 9, "latest"));
  const auto a = accuracy_of(fifty);
  const auto b = accuracy_of(ten);
  o.require(a && *a == 0.90, "45/50");
  o.require(b && *b == 0.90, "9/10");
  auto all = fifty;
  all.insert(all.end(), ten.begin(), ten.end());
  const auto groups = compute_accuracy(all);
  o.require(groups.size() == 2, "two groups");
  for (const auto& g : groups) o.require(g.accuracy && *g.accuracy == 0.90, "group accuracy");
  o.detail << "45/50=" << (a ? *a : -1) << " 9/10=" << (b ? *b : -1);
}

void ac8(Outcome& o) {
  using namespace bench;
  std::string page;
  for (int i = 0; i < 1500; ++i) page += i % 4 == 0 ? "A" : (i % 4 == 1 ? "経" : (i % 4 == 2 ? "ſ" : "🏢"));
  BenchmarkQuestion q;
  q.id = "t";
  q.question = "質問";
  q.manual_context = page;
  const TaskSetting setting{SettingKind::manual_rag, kTruncationChars};
  const PromptTemplates t{"probe", "{question}", "<<{context}>>"};
  const auto prompt = build_prompt(setting, q, t);
  const auto insert = prompt.substr(2, prompt.size() - 4);
  o.require(utf8::length(page) == 1500, "context is 1500 characters");
  o.require(utf8::length(insert) == kTruncationChars, "insert is 1000 characters");
  o.require(utf8::is_valid(insert), "valid UTF-8");
  o.require(page.compare(0, insert.size(), insert) == 0, "insert is a prefix");
  const auto ja = build_prompt(setting, q);
  o.require(ja.find(insert) != std::string::npos && ja.find(std::string(page, 0, insert.size() + 1)) ==
                                                        std::string::npos,
            "default template");
  o.detail << "insert_chars=" << utf8::length(insert) << " insert_bytes=" << insert.size();
}

void ac9(Outcome& o) {
  const auto t0 = Clock::now();
  const auto truth = synth::make_pipeline_corpus(1500, 13);
  synth::TempDir dir;
  write_file(dir / "rules.json", synth::curation_rules_json());
  json inputs = json::array();
  for (const auto& [tag, docs] : truth.by_source) {
    Corpus c;
    c.documents = docs;
    const std::string name = std::string(to_string(tag)) + ".jsonl";
    write_jsonl(dir / name, c);
    inputs.push_back({{"path", name}, {"source", to_string(tag)}});
  }
  write_file(dir / "config.json",
             json{{"seed", 99}, {"inputs", inputs}, {"curation", {{"rules", "rules.json"}}},
                  {"threads", 4}}
                 .dump(2));
  std::vector<std::string> cleaned, manifests, plans;
  int run = 0;
  for (const char* out : {"run_a", "run_b"}) {
    auto config = load_pipeline_config(dir / "config.json", false);
    config.output_dir = dir / out;
    PipelineHooks hooks;
    hooks.clock = [stamp = "2026-01-0" + std::to_string(++run) + "T00:00:00Z"] { return stamp; };
    run_pipeline(config, hooks);
    cleaned.push_back(read_file(config.output_dir / "cleaned.jsonl"));
    plans.push_back(read_file(config.output_dir / "epoch_plan.jsonl"));
    manifests.push_back(
        normalize_manifest(json::parse(read_file(config.output_dir / "manifest.json"))).dump());
  }
  const double secs = seconds_since(t0);
  std::uint64_t docs = 0;
  for (const auto& [_, d] : truth.by_source) docs += d.size();
  o.require(cleaned[0] == cleaned[1], "cleaned corpora identical");
  o.require(plans[0] == plans[1], "epoch plans identical");
  o.require(manifests[0] == manifests[1], "normalized manifests identical");
  o.require(!cleaned[0].empty(), "non-empty output");
  o.require(secs < kEndToEndSecondsLimit, "runtime under limit");
  o.detail << "input_docs=" << docs << " cleaned_bytes=" << cleaned[0].size() << " time=" << secs << "s";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"AC1 dedup oracle equivalence", ac1},  {"AC2 sentence frequency boundary", ac2},
      {"AC3 update mixture exactness", ac3},  {"AC4 epoch doubling", ac4},
      {"AC5 language cascade", ac5},          {"AC6 noise ground truth", ac6},
      {"AC7 benchmark arithmetic", ac7},      {"AC8 context truncation", ac8},
      {"AC9 end-to-end determinism", ac9},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      check(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " :: " << o.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
