#include <gtest/gtest.h>

#include <set>

#include "bizcorpus/dedup.hpp"
#include "bizcorpus/jsonl.hpp"
#include "support/synthetic.hpp"

using namespace bizcorpus;

namespace {

std::vector<std::string> keys(std::string_view text) {
  std::vector<std::string> out;
  for (auto k : split_sentences(DedupConfig{}, text)) out.emplace_back(k);
  return out;
}

Corpus full_dedup(const DedupConfig& config, const Corpus& corpus, unsigned workers = 1) {
  auto docs = dedup_documents(config, corpus);
  const auto table = count_sentences(config, docs, workers);
  return dedup_documents(config, dedup_sentences(config, docs, table, nullptr, workers));
}

Corpus corpus_of(std::initializer_list<std::string> texts) {
  Corpus c;
  int i = 0;
  for (const auto& t : texts) c.documents.push_back(synth::doc("d" + std::to_string(i++), t));
  return c;
}

}  // namespace

TEST(Split, JapaneseTerminatorsAlwaysSplit) {
  EXPECT_EQ(keys("今日は晴れ。明日は雨！本当？"),
            (std::vector<std::string>{"今日は晴れ。", "明日は雨！", "本当？"}));
}

TEST(Split, ClosersAndRunsStayWithSentence) {
  EXPECT_EQ(keys("「はい。」と言った。"), (std::vector<std::string>{"「はい。」", "と言った。"}));
  EXPECT_EQ(keys("本当に！？すごい。"), (std::vector<std::string>{"本当に！？", "すごい。"}));
}

TEST(Split, LatinNeedsFollowingSpace) {
  EXPECT_EQ(keys("Growth was 3.5% this year. See example.com for more."),
            (std::vector<std::string>{"Growth was 3.5% this year.", "See example.com for more."}));
  EXPECT_EQ(keys("Wait... What?!"), (std::vector<std::string>{"Wait...", "What?!"}));
}

TEST(Split, UnterminatedTailIsASentence) {
  EXPECT_EQ(keys("一文目。二文目"), (std::vector<std::string>{"一文目。", "二文目"}));
  EXPECT_TRUE(keys("").empty());
  EXPECT_TRUE(keys("  \n ").empty());
}

TEST(Split, SpansRebuildLineExactly) {
  std::mt19937_64 rng(17);
  const std::vector<std::string> parts = {"文", "a", " ", "。", "!", ".", "」", "？", "x.y", "　"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string line;
    for (auto n = rng() % 20; n > 0; --n) line += parts[rng() % parts.size()];
    const auto spans = split_line_sentences(DedupConfig{}, line);
    std::string rebuilt;
    std::size_t expect_begin = spans.empty() ? 0 : spans.front().begin;
    for (const auto& s : spans) {
      ASSERT_EQ(s.begin, expect_begin);
      rebuilt += line.substr(s.begin, s.end - s.begin);
      expect_begin = s.end;
      EXPECT_FALSE(s.key.empty());
    }
    if (!spans.empty()) {
      EXPECT_EQ(line.substr(spans.front().begin), rebuilt);
      EXPECT_TRUE(utf8::trim(line.substr(0, spans.front().begin)).empty());
    } else {
      EXPECT_TRUE(utf8::trim(line).empty());
    }
  }
}

TEST(Table, CountsMergeAndSort) {
  SentenceFrequencyTable a, b;
  a.add("x");
  a.add("y", 3);
  b.add("x", 2);
  a.merge(b);
  EXPECT_EQ(a.count("x"), 3u);
  EXPECT_EQ(a.count("y"), 3u);
  EXPECT_EQ(a.count("z"), 0u);
  EXPECT_EQ(a.total(), 6u);
  EXPECT_EQ(a.distinct_above(2), 2u);
  EXPECT_EQ(a.to_jsonl(), "{\"count\":3,\"sentence\":\"x\"}\n{\"count\":3,\"sentence\":\"y\"}\n");
}

TEST(Table, ParallelCountEqualsSerial) {
  const auto t = synth::make_dedup_corpus(300, 20, {15, 16, 40}, 2);
  const auto serial = count_sentences(DedupConfig{}, t.corpus, 1);
  for (unsigned w : {2u, 5u, 16u}) EXPECT_EQ(count_sentences(DedupConfig{}, t.corpus, w), serial);
}

TEST(DedupDocuments, FirstSeenSurvives) {
  auto c = corpus_of({"a", "b", "a", "c", "b"});
  StageStats st;
  const auto out = dedup_documents(DedupConfig{}, c, &st);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out.documents[0].id, "d0");
  EXPECT_EQ(out.documents[1].id, "d1");
  EXPECT_EQ(out.documents[2].id, "d3");
  EXPECT_EQ(st.removed.at("duplicate_document"), 2u);
  EXPECT_NO_THROW(st.check());
}

TEST(DedupDocuments, WeakFingerprintNeverMergesDistinctTexts) {
  const auto t = synth::make_dedup_corpus(400, 50, {}, 9);
  const auto strong = dedup_documents(DedupConfig{}, t.corpus);
  StageStats st;
  const auto weak = dedup_documents(DedupConfig{}, t.corpus, &st,
                                    [](const Document& d) { return fnv1a64(d.text) & 0xff; });
  EXPECT_EQ(to_jsonl(strong), to_jsonl(weak));
  EXPECT_GT(st.counters.at("fingerprint_collisions"), 0u);
  EXPECT_EQ(st.removed.at("duplicate_document"), t.duplicate_documents);
}

TEST(DedupDocuments, NoByteEqualPairsRemainProperty) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = synth::make_dedup_corpus(60, 40, {}, seed);
    const auto out = dedup_documents(DedupConfig{}, t.corpus);
    std::set<std::string> texts;
    for (const auto& d : out) EXPECT_TRUE(texts.insert(d.text).second);
    EXPECT_EQ(out.size(), 60u);
  }
}

TEST(DedupSentences, BoundaryFifteenSurvivesSixteenRemoved) {
  Corpus c;
  for (int i = 0; i < 15; ++i) {
    c.documents.push_back(synth::doc("a" + std::to_string(i), synth::unique_sentence(i) + "定型文Aです。"));
  }
  for (int i = 0; i < 16; ++i) {
    c.documents.push_back(
        synth::doc("b" + std::to_string(i), synth::unique_sentence(100 + i) + "定型文Bです。"));
  }
  const auto table = count_sentences(DedupConfig{}, c);
  EXPECT_EQ(table.count("定型文Aです。"), 15u);
  EXPECT_EQ(table.count("定型文Bです。"), 16u);
  StageStats st;
  const auto out = dedup_sentences(DedupConfig{}, c, table, &st);
  ASSERT_EQ(out.size(), 31u);
  for (int i = 0; i < 15; ++i) EXPECT_EQ(out.documents[i].text, synth::unique_sentence(i) + "定型文Aです。");
  for (int i = 0; i < 16; ++i) EXPECT_EQ(out.documents[15 + i].text, synth::unique_sentence(100 + i));
  EXPECT_EQ(st.counters.at("sentences_removed"), 16u);
  EXPECT_EQ(st.counters.at("distinct_sentences_removed"), 1u);
}

TEST(DedupSentences, ThresholdIsConfigurable) {
  DedupConfig c;
  c.sentence_frequency_threshold = 2;
  const auto corpus = corpus_of({"x。y1。", "x。y2。", "x。y3。"});
  const auto out = dedup_sentences(c, corpus, count_sentences(c, corpus));
  EXPECT_EQ(out.documents[0].text, "y1。");
}

TEST(DedupSentences, EmptiedDocumentsAreDropped) {
  DedupConfig c;
  c.sentence_frequency_threshold = 1;
  const auto corpus = corpus_of({"共通。", "共通。\n共通。", "共通。固有。"});
  StageStats st;
  const auto out = dedup_sentences(c, corpus, count_sentences(c, corpus), &st);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.documents[0].text, "固有。");
  EXPECT_EQ(st.removed.at("empty_after_sentence_removal"), 2u);
  EXPECT_NO_THROW(st.check());
}

TEST(DedupSentences, LinesOfRemovedSentencesDisappear) {
  DedupConfig c;
  c.sentence_frequency_threshold = 1;
  const auto corpus = corpus_of({"固有1。\n共通。\n固有2。", "共通。"});
  const auto out = dedup_sentences(c, corpus, count_sentences(c, corpus));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.documents[0].text, "固有1。\n固有2。");
}

TEST(DedupSentences, LatinSentencesStaySeparated) {
  DedupConfig c;
  c.sentence_frequency_threshold = 1;
  const auto corpus = corpus_of({"Visit us. Call now.Thanks.", "Call now."});
  // "Call now.Thanks." is one sentence (no space after the period).
  auto out = dedup_sentences(c, corpus, count_sentences(c, corpus));
  EXPECT_EQ(out.documents[0].text, "Visit us. Call now.Thanks.");

  const auto corpus2 = corpus_of({"A one. B two. 「C」 three.", "B two."});
  out = dedup_sentences(c, corpus2, count_sentences(c, corpus2));
  EXPECT_EQ(out.documents[0].text, "A one. 「C」 three.");
  EXPECT_EQ(keys(out.documents[0].text), (std::vector<std::string>{"A one.", "「C」 three."}));
}

TEST(DedupSentences, RebuiltTextDoesNotMergeLatinSentences) {
  DedupConfig c;
  c.sentence_frequency_threshold = 1;
  const auto corpus = corpus_of({"First one. Shared.Second one.", "Shared.Second one."});
  // "Shared.Second one." is one sentence and occurs twice.
  const auto out = dedup_sentences(c, corpus, count_sentences(c, corpus));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out.documents[0].text, "First one.");
  const auto corpus2 = corpus_of({"Keep me. 共通です。Next one.", "共通です。"});
  const auto out2 = dedup_sentences(c, corpus2, count_sentences(c, corpus2));
  EXPECT_EQ(out2.documents[0].text, "Keep me. Next one.");
  EXPECT_EQ(keys(out2.documents[0].text), (std::vector<std::string>{"Keep me.", "Next one."}));
}

TEST(DedupSentences, ForeignTableIsConsistencyError) {
  const auto corpus = corpus_of({"未知の文。"});
  SentenceFrequencyTable table;
  table.add("別の文。");
  EXPECT_THROW(dedup_sentences(DedupConfig{}, corpus, table), ConsistencyError);
}

TEST(DedupSentences, PlantedCorpusMatchesOracle) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    const auto t = synth::make_dedup_corpus(400, 60, {5, 15, 16, 30, 15, 17}, seed);
    const auto out = full_dedup(DedupConfig{}, t.corpus, 4);
    ASSERT_EQ(out.size(), t.expected.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_EQ(out.documents[i].id, t.expected[i].first);
      EXPECT_EQ(out.documents[i].text, t.expected[i].second);
    }
  }
}

TEST(DedupSentences, FullDedupIsIdempotent) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t = synth::make_dedup_corpus(200, 30, {16, 20, 15}, seed);
    const auto once = full_dedup(DedupConfig{}, t.corpus);
    const auto twice = full_dedup(DedupConfig{}, once);
    EXPECT_EQ(to_jsonl(once), to_jsonl(twice));
  }
  // Sentence removal that makes two documents equal is caught by the second pass.
  DedupConfig c;
  c.sentence_frequency_threshold = 2;
  const auto corpus = corpus_of({"共。固有。", "共。固有。共。", "共。別。"});
  const auto once = full_dedup(c, corpus);
  EXPECT_EQ(to_jsonl(once), to_jsonl(full_dedup(c, once)));
  ASSERT_EQ(once.size(), 2u);
}

TEST(DedupSentences, WorkerCountDoesNotChangeOutput) {
  const auto t = synth::make_dedup_corpus(300, 30, {16, 25}, 8);
  EXPECT_EQ(to_jsonl(full_dedup(DedupConfig{}, t.corpus, 1)),
            to_jsonl(full_dedup(DedupConfig{}, t.corpus, 6)));
}
