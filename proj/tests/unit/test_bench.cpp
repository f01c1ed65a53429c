#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "bizcorpus/bench.hpp"
#include "support/synthetic.hpp"

using namespace bizcorpus;
using namespace bizcorpus::bench;

namespace {

BenchmarkQuestion question(std::string id, QuestionSet set = QuestionSet::non_latest) {
  BenchmarkQuestion q;
  q.id = std::move(id);
  q.question = "2023年の売上高は？";
  q.category = Category::corporate_activities;
  q.question_set = set;
  return q;
}

std::string repeat(std::string_view piece, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += piece;
  return s;
}

RunOptions fixed_clock_options(const std::filesystem::path& dir) {
  RunOptions o;
  o.run_dir = dir;
  o.clock = [] { return std::int64_t{0}; };
  return o;
}

Judgment verdict(std::string qid, bool faithful, bool followed,
                 QuestionSet set = QuestionSet::non_latest, std::string model = "m") {
  Judgment j;
  j.question_id = std::move(qid);
  j.model_id = std::move(model);
  j.setting = SettingKind::no_context;
  j.question_set = set;
  j.set_verdict(faithful, followed);
  return j;
}

}  // namespace

TEST(Prompt, NoContextTemplates) {
  const auto q = question("q1");
  EXPECT_EQ(build_prompt({SettingKind::no_context}, q),
            "質問に簡潔に答えてください。\n\n質問：2023年の売上高は？\n\n### 出力：");
  EXPECT_EQ(build_prompt({SettingKind::no_context}, q, english_templates()),
            "Please answer the question briefly.\n\nQuestion:2023年の売上高は？\n\n### Output:");
}

TEST(Prompt, RagEmbedsTruncatedContext) {
  auto q = question("q1");
  q.manual_context = repeat("あ", 1500);
  const auto prompt = build_prompt({SettingKind::manual_rag}, q, english_templates());
  const auto expected_insert = repeat("あ", 1000);
  EXPECT_NE(prompt.find("Article Text:\n" + expected_insert + "\n\n### Output:"), std::string::npos);
  EXPECT_EQ(prompt.find(repeat("あ", 1001)), std::string::npos);
  EXPECT_NE(prompt.find("the article does not contain the answer"), std::string::npos);
}

TEST(Prompt, TruncationCountsCharactersNotBytes) {
  const TaskSetting s{SettingKind::auto_rag, 1000};
  std::string mixed;
  for (int i = 0; i < 1500; ++i) mixed += i % 3 == 0 ? "a" : (i % 3 == 1 ? "漢" : "😀");
  const auto cut = truncate_context(s, mixed);
  EXPECT_EQ(utf8::length(cut), 1000u);
  EXPECT_TRUE(utf8::is_valid(cut));
  EXPECT_EQ(truncate_context(s, "short"), "short");
  EXPECT_EQ(truncate_context({SettingKind::auto_rag, 3}, "あいうえ"), "あいう");
}

TEST(Prompt, TruncationRejectedWithoutContext) {
  EXPECT_THROW(truncate_context({SettingKind::no_context}, "x"), std::logic_error);
}

TEST(Prompt, MissingContextIsPerQuestionError) {
  EXPECT_THROW(build_prompt({SettingKind::manual_rag}, question("q")), MissingContextError);
  EXPECT_THROW(build_prompt({SettingKind::auto_rag}, question("q")), MissingContextError);
}

TEST(Prompt, PlaceholdersSubstitutedOnce) {
  auto q = question("q");
  q.question = "{context}とは？";
  q.manual_context = "{question}";
  const auto p = build_prompt({SettingKind::manual_rag}, q);
  EXPECT_NE(p.find("質問：{context}とは？"), std::string::npos);
  EXPECT_NE(p.find("記事本文：\n{question}\n"), std::string::npos);
}

TEST(Prompt, TemplateFiles) {
  synth::TempDir dir;
  write_file(dir / "t.json", R"({"version":"x1","no_context":"Q={question}","rag":"{question}|{context}"})");
  const auto t = load_templates(dir / "t.json");
  auto q = question("q");
  q.manual_context = "ctx";
  EXPECT_EQ(build_prompt({SettingKind::manual_rag}, q, t), q.question + "|ctx");
  write_file(dir / "bad.json", R"({"version":"x1","no_context":"Q","rag":"{question}"})");
  EXPECT_THROW(load_templates(dir / "bad.json"), ConfigError);
}

TEST(Questions, Parsing) {
  const auto qs = parse_questions(
      "{\"id\":\"a\",\"question\":\"Q?\",\"category\":\"trends\",\"set\":\"latest\","
      "\"manual_context\":\"c\"}\n\n{\"id\":2,\"question\":\"R?\"}\n");
  ASSERT_EQ(qs.size(), 2u);
  EXPECT_EQ(qs[0].category, Category::trends);
  EXPECT_EQ(qs[0].question_set, QuestionSet::latest);
  EXPECT_EQ(qs[0].manual_context, "c");
  EXPECT_EQ(qs[1].id, "2");
  EXPECT_THROW(parse_questions("{\"id\":\"a\",\"question\":\"Q\"}\n{\"id\":\"a\",\"question\":\"R\"}"),
               ConfigError);
  EXPECT_THROW(parse_questions("{\"id\":\"a\",\"question\":\"Q\",\"category\":\"sports\"}"), ConfigError);
  EXPECT_THROW(parse_questions("{\"id\":\"a\"}"), ConfigError);
}

TEST(Run, PersistsRecordsAndManifest) {
  synth::TempDir dir;
  std::vector<BenchmarkQuestion> qs = {question("q/1"), question("q2")};
  qs[1].manual_context = "本文";
  FunctionModel model("m1", [](std::string_view p) { return "answer:" + std::to_string(p.size()); });
  const auto records =
      run_benchmark({SettingKind::manual_rag}, qs, model, fixed_clock_options(dir.path()));
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].status, RecordStatus::error);  // no manual context
  EXPECT_EQ(records[1].status, RecordStatus::ok);
  EXPECT_TRUE(std::filesystem::exists(dir / "records/q%2F1.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "records/q2.json"));
  const auto loaded = load_run(dir.path());
  EXPECT_EQ(loaded.records, records);
  EXPECT_EQ(loaded.manifest["ok"], 1);
  EXPECT_EQ(loaded.manifest["errors"], 1);
  EXPECT_EQ(loaded.manifest["template_version"], "ja-v1");
}

TEST(Run, RerunIsByteIdentical) {
  synth::TempDir a, b;
  std::vector<BenchmarkQuestion> qs;
  for (int i = 0; i < 10; ++i) qs.push_back(question("q" + std::to_string(i)));
  EchoModel model;
  auto oa = fixed_clock_options(a.path());
  oa.max_in_flight = 4;
  run_benchmark({SettingKind::no_context}, qs, model, oa);
  run_benchmark({SettingKind::no_context}, qs, model, fixed_clock_options(b.path()));
  for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), a.path());
    EXPECT_EQ(read_file(entry.path()), read_file(b.path() / rel)) << rel;
  }
}

TEST(Run, BackendFailureIsRecordedAndRunContinues) {
  std::vector<BenchmarkQuestion> qs = {question("a"), question("b"), question("c")};
  FunctionModel model("flaky", [](std::string_view p) -> std::string {
    if (p.find("b") != std::string::npos) throw BackendError("overloaded");
    return "ok";
  });
  qs[1].question = "b?";
  const auto records = run_benchmark({SettingKind::no_context}, qs, model);
  EXPECT_EQ(records[0].status, RecordStatus::ok);
  EXPECT_EQ(records[1].status, RecordStatus::error);
  EXPECT_NE(records[1].reason.find("overloaded"), std::string::npos);
  EXPECT_EQ(records[2].status, RecordStatus::ok);
}

TEST(Run, DuplicateIdsAbortTheRun) {
  EchoModel model;
  EXPECT_THROW(run_benchmark({SettingKind::no_context}, {question("a"), question("a")}, model),
               ConfigError);
}

TEST(Run, AutoRagUsesFirstResultWithBody) {
  FunctionSearch search([](std::string_view q) {
    if (q.find("none") != std::string::npos) return std::vector<SearchResult>{};
    return std::vector<SearchResult>{{"u0", "t0", "  "}, {"u1", "t1", "検索本文"}, {"u2", "t2", "次点"}};
  });
  auto q1 = question("hit");
  auto q2 = question("miss");
  q2.question = "none?";
  auto q3 = question("stored");
  q3.auto_context = "保存済み";
  EchoModel model;
  RunOptions o;
  o.search = &search;
  const auto records = run_benchmark({SettingKind::auto_rag}, {q1, q2, q3}, model, o);
  EXPECT_EQ(records[0].status, RecordStatus::ok);
  EXPECT_NE(records[0].prompt.find("検索本文"), std::string::npos);
  EXPECT_EQ(records[0].prompt.find("次点"), std::string::npos);
  EXPECT_EQ(records[1].status, RecordStatus::skipped);
  EXPECT_NE(records[2].prompt.find("保存済み"), std::string::npos);

  RunOptions no_search;
  EXPECT_EQ(run_benchmark({SettingKind::auto_rag}, {q1}, model, no_search)[0].status,
            RecordStatus::skipped);
}

TEST(Run, ResumeSkipsCompletedQuestions) {
  synth::TempDir dir;
  std::vector<BenchmarkQuestion> qs = {question("a"), question("b")};
  std::atomic<int> calls{0};
  bool fail_b = true;
  FunctionModel model("m", [&](std::string_view p) -> std::string {
    ++calls;
    if (fail_b && p.find("b?") != std::string::npos) throw BackendError("down");
    return "ok";
  });
  qs[1].question = "b?";
  auto o = fixed_clock_options(dir.path());
  run_benchmark({SettingKind::no_context}, qs, model, o);
  EXPECT_EQ(calls.load(), 2);
  fail_b = false;
  o.resume = true;
  const auto records = run_benchmark({SettingKind::no_context}, qs, model, o);
  EXPECT_EQ(calls.load(), 3);
  EXPECT_EQ(records[0].status, RecordStatus::ok);
  EXPECT_EQ(records[1].status, RecordStatus::ok);
}

TEST(Run, InFlightLimitRespectedForNonShareableModel) {
  std::atomic<int> active{0}, peak{0};
  FunctionModel model(
      "serial",
      [&](std::string_view) {
        const int now = ++active;
        int p = peak.load();
        while (now > p && !peak.compare_exchange_weak(p, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
        --active;
        return std::string("x");
      },
      false);
  std::vector<BenchmarkQuestion> qs;
  for (int i = 0; i < 20; ++i) qs.push_back(question(std::to_string(i)));
  RunOptions o;
  o.max_in_flight = 6;
  const auto records = run_benchmark({SettingKind::no_context}, qs, model, o);
  EXPECT_EQ(peak.load(), 1);
  for (std::size_t i = 0; i < qs.size(); ++i) EXPECT_EQ(records[i].question_id, qs[i].id);
}

TEST(Judgments, CorrectIsConjunction) {
  EXPECT_TRUE(verdict("a", true, true).correct());
  EXPECT_FALSE(verdict("a", true, false).correct());
  EXPECT_FALSE(verdict("a", false, true).correct());
  EXPECT_FALSE(verdict("a", false, false).correct());
  auto j = to_json(verdict("a", true, false));
  EXPECT_EQ(j["correct"], false);
  EXPECT_NO_THROW(judgment_from_json(j));
  j["correct"] = true;
  EXPECT_THROW(judgment_from_json(j), ConsistencyError);
}

TEST(Judgments, RecordedFromVerdictFile) {
  synth::TempDir dir;
  std::vector<BenchmarkQuestion> qs = {question("a"), question("b", QuestionSet::latest),
                                       question("c")};
  qs[2].question = "";
  qs.pop_back();
  EchoModel model("echo-1");
  const auto records = run_benchmark({SettingKind::no_context}, qs, model, fixed_clock_options(dir.path()));
  const auto js = record_judgments(
      records,
      "{\"question_id\":\"a\",\"content_faithful\":true,\"instruction_followed\":true}\n"
      "{\"question_id\":\"b\",\"content_faithful\":true,\"instruction_followed\":false,"
      "\"judge_id\":\"j2\"}\n",
      "j1");
  ASSERT_EQ(js.size(), 2u);
  EXPECT_EQ(js[0].judge_id, "j1");
  EXPECT_EQ(js[1].judge_id, "j2");
  EXPECT_EQ(js[1].question_set, QuestionSet::latest);
  EXPECT_EQ(js[0].model_id, "echo-1");
  EXPECT_EQ(js[0].response, records[0].response);
  EXPECT_TRUE(js[0].correct());
  EXPECT_FALSE(js[1].correct());

  EXPECT_THROW(record_judgments(records, "{\"question_id\":\"zz\",\"content_faithful\":true,"
                                         "\"instruction_followed\":true}"),
               ConsistencyError);
  EXPECT_THROW(record_judgments(records,
                                "{\"question_id\":\"a\",\"content_faithful\":true,\"instruction_followed\":true}\n"
                                "{\"question_id\":\"a\",\"content_faithful\":true,\"instruction_followed\":true}"),
               ConsistencyError);
  EXPECT_THROW(record_judgments(records, "{\"question_id\":\"a\",\"content_faithful\":true}"), ConfigError);
  EXPECT_THROW(record_judgments(records,
                                "{\"question_id\":\"a\",\"content_faithful\":false,"
                                "\"instruction_followed\":true,\"correct\":true}"),
               ConsistencyError);
  const auto reparsed = parse_judgments(to_jsonl(js));
  ASSERT_EQ(reparsed.size(), 2u);
  EXPECT_EQ(to_jsonl(reparsed), to_jsonl(js));
}

TEST(Judgments, CannotJudgeFailedRecord) {
  FunctionModel model("m", [](std::string_view) -> std::string { throw BackendError("x"); });
  const auto records = run_benchmark({SettingKind::no_context}, {question("a")}, model);
  EXPECT_THROW(record_judgments(records, "{\"question_id\":\"a\",\"content_faithful\":true,"
                                         "\"instruction_followed\":true}"),
               ConsistencyError);
}

TEST(Accuracy, ProtocolArithmetic) {
  std::vector<Judgment> fifty;
  for (int i = 0; i < 50; ++i) fifty.push_back(verdict(std::to_string(i), i < 45, true));
  EXPECT_DOUBLE_EQ(*accuracy_of(fifty), 0.90);
  std::vector<Judgment> ten;
  for (int i = 0; i < 10; ++i) ten.push_back(verdict(std::to_string(i), true, i != 3));
  EXPECT_DOUBLE_EQ(*accuracy_of(ten), 0.90);
  EXPECT_FALSE(accuracy_of({}).has_value());
}

TEST(Accuracy, GroupsByModelSettingAndSet) {
  std::vector<Judgment> js;
  for (int i = 0; i < 10; ++i) js.push_back(verdict("l" + std::to_string(i), i < 9, true, QuestionSet::latest));
  for (int i = 0; i < 4; ++i) js.push_back(verdict("n" + std::to_string(i), i < 1, true));
  for (int i = 0; i < 2; ++i) js.push_back(verdict("o" + std::to_string(i), true, true, QuestionSet::latest, "other"));
  const GroupKey empty{"m", SettingKind::manual_rag, QuestionSet::latest};
  const auto groups = compute_accuracy(js, {empty});
  ASSERT_EQ(groups.size(), 4u);
  std::map<std::tuple<std::string, SettingKind, QuestionSet>, GroupAccuracy> by;
  for (const auto& g : groups) by[{g.key.model_id, g.key.setting, g.key.question_set}] = g;
  const auto& latest = by.at({"m", SettingKind::no_context, QuestionSet::latest});
  EXPECT_EQ(latest.total, 10u);
  EXPECT_DOUBLE_EQ(*latest.accuracy, 0.9);
  EXPECT_DOUBLE_EQ(*by.at({"m", SettingKind::no_context, QuestionSet::non_latest}).accuracy, 0.25);
  EXPECT_DOUBLE_EQ(*by.at({"other", SettingKind::no_context, QuestionSet::latest}).accuracy, 1.0);
  const auto& none = by.at({"m", SettingKind::manual_rag, QuestionSet::latest});
  EXPECT_EQ(none.total, 0u);
  EXPECT_FALSE(none.accuracy.has_value());
  EXPECT_TRUE(to_json(none)["accuracy"].is_null());
}

TEST(Backends, RecordFileNames) {
  EXPECT_EQ(record_file_name("q-1_a.b"), "q-1_a.b.json");
  EXPECT_EQ(record_file_name("../x"), "%2E.%2Fx.json");
  EXPECT_EQ(record_file_name("質"), "%E8%B3%AA.json");
}
