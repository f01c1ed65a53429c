#pragma once

// Business QA benchmark harness: prompt construction for the three task
// settings, context truncation, pluggable model and search backends, run
// persistence, manual judgment records and accuracy bookkeeping.
//
// Judging is never automated: the harness stores verdicts a human judge
// entered and derives correctness from the two binary criteria.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "bizcorpus/errors.hpp"
#include "bizcorpus/hash.hpp"
#include "bizcorpus/jsonl.hpp"
#include "bizcorpus/utf8.hpp"
#include "bizcorpus/wire.hpp"

namespace bizcorpus::bench {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Questions and settings

enum class Category { current_affairs, corporate_activities, social_issues, trends };
enum class QuestionSet { non_latest, latest };
enum class SettingKind { no_context, auto_rag, manual_rag };

inline constexpr std::string_view to_string(Category c) {
  switch (c) {
    case Category::current_affairs: return "current_affairs";
    case Category::corporate_activities: return "corporate_activities";
    case Category::social_issues: return "social_issues";
    case Category::trends: return "trends";
  }
  return "trends";
}

inline constexpr std::string_view to_string(QuestionSet s) {
  return s == QuestionSet::latest ? "latest" : "non_latest";
}

inline constexpr std::string_view to_string(SettingKind k) {
  switch (k) {
    case SettingKind::no_context: return "no_context";
    case SettingKind::auto_rag: return "auto_rag";
    case SettingKind::manual_rag: return "manual_rag";
  }
  return "no_context";
}

inline constexpr std::string_view display_name(SettingKind k) {
  switch (k) {
    case SettingKind::no_context: return "NoContext-QA";
    case SettingKind::auto_rag: return "AutoRAG-QA";
    case SettingKind::manual_rag: return "ManualRAG-QA";
  }
  return "NoContext-QA";
}

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const E (&values)[N], const char* what) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

inline Category parse_category(std::string_view s) {
  static constexpr Category kAll[] = {Category::current_affairs, Category::corporate_activities,
                                      Category::social_issues, Category::trends};
  return parse_enum(s, kAll, "category");
}

inline QuestionSet parse_question_set(std::string_view s) {
  static constexpr QuestionSet kAll[] = {QuestionSet::non_latest, QuestionSet::latest};
  return parse_enum(s, kAll, "question set");
}

inline SettingKind parse_setting(std::string_view s) {
  static constexpr SettingKind kAll[] = {SettingKind::no_context, SettingKind::auto_rag,
                                         SettingKind::manual_rag};
  return parse_enum(s, kAll, "task setting");
}

struct BenchmarkQuestion {
  std::string id;
  std::string question;
  Category category = Category::current_affairs;
  std::optional<std::string> manual_context;
  std::optional<std::string> auto_context;
  QuestionSet question_set = QuestionSet::non_latest;
};

struct TaskSetting {
  SettingKind kind = SettingKind::no_context;
  std::size_t truncation_chars = 1000;

  bool uses_context() const noexcept { return kind != SettingKind::no_context; }
};

inline BenchmarkQuestion question_from_json(const json& j) {
  BenchmarkQuestion q;
  q.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
  q.question = j.at("question").get<std::string>();
  if (q.question.empty()) throw ConfigError("question " + q.id + " has empty text");
  q.category = parse_category(j.value("category", std::string("current_affairs")));
  q.question_set = parse_question_set(j.value("set", std::string("non_latest")));
  if (auto it = j.find("manual_context"); it != j.end() && !it->is_null()) {
    q.manual_context = it->get<std::string>();
  }
  if (auto it = j.find("auto_context"); it != j.end() && !it->is_null()) {
    q.auto_context = it->get<std::string>();
  }
  return q;
}

inline json to_json(const BenchmarkQuestion& q) {
  json j = {{"id", q.id},
            {"question", q.question},
            {"category", to_string(q.category)},
            {"set", to_string(q.question_set)}};
  if (q.manual_context) j["manual_context"] = *q.manual_context;
  if (q.auto_context) j["auto_context"] = *q.auto_context;
  return j;
}

/// One question per line. Any bad line is a configuration error.
inline std::vector<BenchmarkQuestion> parse_questions(std::string_view content) {
  std::vector<BenchmarkQuestion> out;
  std::set<std::string> ids;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    if (is_blank(line)) return;
    try {
      auto q = question_from_json(json::parse(line));
      if (!ids.insert(q.id).second) throw ConfigError("duplicate question id " + q.id);
      out.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw ConfigError("questions line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("questions line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return out;
}

inline std::vector<BenchmarkQuestion> load_questions(const std::filesystem::path& path) {
  return parse_questions(read_file(path));
}

// ---------------------------------------------------------------------------
// Prompts

/// Templates use {question} and {context} placeholders.
struct PromptTemplates {
  std::string version;
  std::string no_context;
  std::string rag;
};

inline const PromptTemplates& japanese_templates() {
  static const PromptTemplates t{
      "ja-v1",
      "質問に簡潔に答えてください。\n\n質問：{question}\n\n### 出力：",
      "与えられた質問に答えてください。質問の答えが記事本文に含まれている場合は、本文の答えを使って"
      "ください。記事に答えが含まれていない場合は「記事には答えが含まれていません」と述べたうえで、"
      "あなたの知識を使って質問に答えてください。\n\n質問：{question}\n\n記事本文：\n{context}\n\n"
      "### 出力：",
  };
  return t;
}

/// English renderings, kept for documentation and English-language runs.
inline const PromptTemplates& english_templates() {
  static const PromptTemplates t{
      "en-v1",
      "Please answer the question briefly.\n\nQuestion:{question}\n\n### Output:",
      "Please answer to the given question. If the answer to the question is included in the "
      "article text, please use the answer from the text. If the article does not contain the "
      "answer please state that \"the article does not contain the answer\" and answer the "
      "question using your knowledge.\n\nQuestion:{question}\n\nArticle Text:\n{context}\n\n"
      "### Output:",
  };
  return t;
}

inline PromptTemplates templates_from_json(const json& j) {
  PromptTemplates t;
  try {
    t.version = j.at("version").get<std::string>();
    t.no_context = j.at("no_context").get<std::string>();
    t.rag = j.at("rag").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("prompt templates need version, no_context and rag: ") + e.what());
  }
  if (t.no_context.find("{question}") == std::string::npos ||
      t.rag.find("{question}") == std::string::npos || t.rag.find("{context}") == std::string::npos) {
    throw ConfigError("prompt templates must contain {question} (and {context} for rag)");
  }
  return t;
}

inline PromptTemplates load_templates(const std::filesystem::path& path) {
  try {
    return templates_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse prompt templates " + path.string() + ": " + e.what());
  }
}

class MissingContextError : public Error {
 public:
  using Error::Error;
};

/// First `truncation_chars` Unicode scalar values of the page.
inline std::string truncate_context(const TaskSetting& setting, std::string_view page_text) {
  if (!setting.uses_context()) {
    throw std::logic_error("context truncation applies only to RAG settings");
  }
  return std::string(utf8::prefix(page_text, setting.truncation_chars));
}

namespace detail {

/// Single left-to-right pass; substituted text is never rescanned.
inline std::string render(std::string_view tmpl, std::string_view question,
                          std::string_view context) {
  std::string out;
  out.reserve(tmpl.size() + question.size() + context.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    if (tmpl.substr(pos).starts_with("{question}")) {
      out += question;
      pos += 10;
    } else if (tmpl.substr(pos).starts_with("{context}")) {
      out += context;
      pos += 9;
    } else {
      out += tmpl[pos++];
    }
  }
  return out;
}

}  // namespace detail

/// `context` is the page to embed for RAG settings (truncated here). For
/// manual_rag it defaults to the question's manual context.
inline std::string build_prompt(const TaskSetting& setting, const BenchmarkQuestion& q,
                                const PromptTemplates& templates = japanese_templates(),
                                std::optional<std::string_view> context = std::nullopt) {
  if (!setting.uses_context()) return detail::render(templates.no_context, q.question, {});
  if (!context) {
    const auto& stored =
        setting.kind == SettingKind::manual_rag ? q.manual_context : q.auto_context;
    if (!stored) {
      throw MissingContextError("question " + q.id + " has no " +
                                (setting.kind == SettingKind::manual_rag ? "manual" : "auto") +
                                " context for " + std::string(display_name(setting.kind)));
    }
    context = *stored;
  }
  return detail::render(templates.rag, q.question, truncate_context(setting, *context));
}

// ---------------------------------------------------------------------------
// Backends

struct SearchResult {
  std::string url;
  std::string title;
  std::string body;
};

class SearchBackend {
 public:
  virtual ~SearchBackend() = default;
  /// Ranked results, best first. Throws BackendError on failure.
  virtual std::vector<SearchResult> search(std::string_view query) = 0;
  virtual bool shareable() const { return false; }
};

class FunctionSearch final : public SearchBackend {
 public:
  using Fn = std::function<std::vector<SearchResult>(std::string_view)>;
  explicit FunctionSearch(Fn fn) : fn_(std::move(fn)) {}
  std::vector<SearchResult> search(std::string_view query) override { return fn_(query); }
  bool shareable() const override { return true; }

 private:
  Fn fn_;
};

/// Request {"query": ...}; response {"results": [{"url", "title", "body"}, ...]}.
class WireSearch final : public SearchBackend {
 public:
  explicit WireSearch(std::unique_ptr<JsonTransport> transport) : transport_(std::move(transport)) {}

  std::vector<SearchResult> search(std::string_view query) override {
    const auto response = transport_->call({{"query", std::string(query)}});
    std::vector<SearchResult> out;
    try {
      for (const auto& r : response.at("results")) {
        out.push_back({r.value("url", std::string{}), r.value("title", std::string{}),
                       r.value("body", std::string{})});
      }
    } catch (const json::exception& e) {
      throw BackendError(std::string("search response malformed: ") + e.what());
    }
    return out;
  }

 private:
  std::unique_ptr<JsonTransport> transport_;
};

class RetrievalError : public Error {
 public:
  using Error::Error;
};

/// Body of the highest-ranked result that has body text.
inline std::string retrieve_auto_context(SearchBackend& backend, const BenchmarkQuestion& q) {
  std::vector<SearchResult> results;
  try {
    results = backend.search(q.question);
  } catch (const BackendError& e) {
    throw RetrievalError("search failed for question " + q.id + ": " + e.what());
  }
  for (auto& r : results) {
    if (!utf8::trim(r.body).empty()) return std::move(r.body);
  }
  throw RetrievalError("no search result with body text for question " + q.id + " (" +
                       std::to_string(results.size()) + " results)");
}

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual std::string id() const = 0;
  /// Throws BackendError on failure.
  virtual std::string generate(std::string_view prompt) = 0;
  virtual bool shareable() const { return false; }
};

/// Answers with the prompt itself; for exercising the harness.
class EchoModel final : public ModelBackend {
 public:
  explicit EchoModel(std::string id = "echo") : id_(std::move(id)) {}
  std::string id() const override { return id_; }
  std::string generate(std::string_view prompt) override { return std::string(prompt); }
  bool shareable() const override { return true; }

 private:
  std::string id_;
};

class FunctionModel final : public ModelBackend {
 public:
  using Fn = std::function<std::string(std::string_view)>;
  FunctionModel(std::string id, Fn fn, bool shareable = true)
      : id_(std::move(id)), fn_(std::move(fn)), shareable_(shareable) {}
  std::string id() const override { return id_; }
  std::string generate(std::string_view prompt) override { return fn_(prompt); }
  bool shareable() const override { return shareable_; }

 private:
  std::string id_;
  Fn fn_;
  bool shareable_;
};

/// Request {"model": id, "prompt": ...}; response {"text": ...}.
class WireModel final : public ModelBackend {
 public:
  WireModel(std::string id, std::unique_ptr<JsonTransport> transport)
      : id_(std::move(id)), transport_(std::move(transport)) {}

  std::string id() const override { return id_; }

  std::string generate(std::string_view prompt) override {
    const auto response = transport_->call({{"model", id_}, {"prompt", std::string(prompt)}});
    try {
      return response.at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw BackendError(std::string("model response missing text: ") + e.what());
    }
  }

 private:
  std::string id_;
  std::unique_ptr<JsonTransport> transport_;
};

// ---------------------------------------------------------------------------
// Runs

enum class RecordStatus { ok, error, skipped };

inline constexpr std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::ok: return "ok";
    case RecordStatus::error: return "error";
    case RecordStatus::skipped: return "skipped";
  }
  return "error";
}

struct RunRecord {
  std::string question_id;
  SettingKind setting = SettingKind::no_context;
  std::string model_id;
  std::string template_version;
  QuestionSet question_set = QuestionSet::non_latest;
  Category category = Category::current_affairs;
  RecordStatus status = RecordStatus::ok;
  std::string prompt;
  std::string response;
  std::string reason;  // error or skip reason
  std::int64_t elapsed_ms = 0;

  bool operator==(const RunRecord&) const = default;
};

inline json to_json(const RunRecord& r) {
  return {{"question_id", r.question_id},
          {"setting", to_string(r.setting)},
          {"model_id", r.model_id},
          {"template_version", r.template_version},
          {"question_set", to_string(r.question_set)},
          {"category", to_string(r.category)},
          {"status", to_string(r.status)},
          {"prompt", r.prompt},
          {"response", r.response},
          {"reason", r.reason},
          {"elapsed_ms", r.elapsed_ms}};
}

inline RunRecord run_record_from_json(const json& j) {
  RunRecord r;
  r.question_id = j.at("question_id").get<std::string>();
  r.setting = parse_setting(j.at("setting").get<std::string>());
  r.model_id = j.at("model_id").get<std::string>();
  r.template_version = j.value("template_version", std::string{});
  r.question_set = parse_question_set(j.value("question_set", std::string("non_latest")));
  r.category = parse_category(j.value("category", std::string("current_affairs")));
  const auto status = j.at("status").get<std::string>();
  r.status = status == "ok" ? RecordStatus::ok
             : status == "skipped" ? RecordStatus::skipped
                                   : RecordStatus::error;
  r.prompt = j.value("prompt", std::string{});
  r.response = j.value("response", std::string{});
  r.reason = j.value("reason", std::string{});
  r.elapsed_ms = j.value("elapsed_ms", std::int64_t{0});
  return r;
}

/// Filesystem-safe record name: [A-Za-z0-9._-] kept, everything else %XX.
inline std::string record_file_name(std::string_view question_id) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (char c : question_id) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '-' || c == '_' || (c == '.' && !out.empty())) {
      out.push_back(c);
    } else {
      out.push_back('%');
      out.push_back(kHex[u >> 4]);
      out.push_back(kHex[u & 15]);
    }
  }
  return out + ".json";
}

struct RunOptions {
  /// Empty: do not persist.
  std::filesystem::path run_dir;
  unsigned max_in_flight = 1;
  /// Reuse existing ok records in run_dir instead of calling the model.
  bool resume = false;
  SearchBackend* search = nullptr;
  PromptTemplates templates = japanese_templates();
  /// Milliseconds; injectable so persisted timings can be made reproducible.
  std::function<std::int64_t()> clock = [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
};

inline json run_manifest(const TaskSetting& setting, const ModelBackend& model,
                         const RunOptions& options, const std::vector<RunRecord>& records) {
  std::uint64_t ok = 0, errors = 0, skipped = 0;
  json ids = json::array();
  for (const auto& r : records) {
    ok += r.status == RecordStatus::ok;
    errors += r.status == RecordStatus::error;
    skipped += r.status == RecordStatus::skipped;
    ids.push_back(r.question_id);
  }
  return {{"setting", to_string(setting.kind)},
          {"setting_name", display_name(setting.kind)},
          {"truncation_chars", setting.truncation_chars},
          {"model_id", model.id()},
          {"template_version", options.templates.version},
          {"questions", records.size()},
          {"ok", ok},
          {"errors", errors},
          {"skipped", skipped},
          {"question_ids", ids}};
}

/// Runs every question through the model. Per-question failures become
/// error or skipped records and the run continues. With a run directory,
/// each record is written as records/<id>.json as soon as it completes, and
/// manifest.json is written at the end.
inline std::vector<RunRecord> run_benchmark(const TaskSetting& setting,
                                            const std::vector<BenchmarkQuestion>& questions,
                                            ModelBackend& model, const RunOptions& options = {}) {
  if (setting.uses_context() && setting.truncation_chars == 0) {
    throw ConfigError("truncation_chars must be positive");
  }
  {
    std::set<std::string_view> ids;
    for (const auto& q : questions) {
      if (!ids.insert(q.id).second) throw ConfigError("duplicate question id " + q.id);
      if (q.question.empty()) throw ConfigError("question " + q.id + " has empty text");
    }
  }
  const auto records_dir = options.run_dir / "records";
  const bool persist = !options.run_dir.empty();
  if (persist) std::filesystem::create_directories(records_dir);

  std::vector<RunRecord> records(questions.size());
  std::mutex model_mutex, search_mutex;

  auto run_one = [&](std::size_t i) {
    const auto& q = questions[i];
    RunRecord r;
    r.question_id = q.id;
    r.setting = setting.kind;
    r.model_id = model.id();
    r.template_version = options.templates.version;
    r.question_set = q.question_set;
    r.category = q.category;

    const auto path = records_dir / record_file_name(q.id);
    if (persist && options.resume && std::filesystem::exists(path)) {
      try {
        auto previous = run_record_from_json(json::parse(read_file(path)));
        if (previous.status == RecordStatus::ok && previous.model_id == r.model_id &&
            previous.setting == r.setting) {
          records[i] = std::move(previous);
          return;
        }
      } catch (const std::exception&) {
        // unreadable record: redo the question
      }
    }

    std::optional<std::string> context;
    if (setting.kind == SettingKind::auto_rag && !q.auto_context) {
      if (!options.search) {
        r.status = RecordStatus::skipped;
        r.reason = "no auto context and no search backend";
      } else {
        try {
          std::unique_lock lock(search_mutex, std::defer_lock);
          if (!options.search->shareable()) lock.lock();
          context = retrieve_auto_context(*options.search, q);
        } catch (const RetrievalError& e) {
          r.status = RecordStatus::skipped;
          r.reason = e.what();
        }
      }
    }
    if (r.status == RecordStatus::ok) {
      try {
        r.prompt = build_prompt(setting, q, options.templates,
                                context ? std::optional<std::string_view>(*context) : std::nullopt);
      } catch (const MissingContextError& e) {
        r.status = RecordStatus::error;
        r.reason = e.what();
      }
    }
    if (r.status == RecordStatus::ok) {
      const auto start = options.clock();
      try {
        std::unique_lock lock(model_mutex, std::defer_lock);
        if (!model.shareable()) lock.lock();
        r.response = model.generate(r.prompt);
      } catch (const BackendError& e) {
        r.status = RecordStatus::error;
        r.reason = e.what();
      }
      r.elapsed_ms = options.clock() - start;
    }
    if (persist) write_file(path, to_json(r).dump(2) + "\n");
    records[i] = std::move(r);
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(options.max_in_flight, static_cast<unsigned>(questions.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < questions.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i; (i = next.fetch_add(1)) < questions.size();) run_one(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  if (persist) {
    write_file(options.run_dir / "manifest.json",
               run_manifest(setting, model, options, records).dump(2) + "\n");
  }
  return records;
}

struct LoadedRun {
  json manifest;
  std::vector<RunRecord> records;  // manifest order
};

inline LoadedRun load_run(const std::filesystem::path& run_dir) {
  LoadedRun run;
  try {
    run.manifest = json::parse(read_file(run_dir / "manifest.json"));
    for (const auto& id : run.manifest.at("question_ids")) {
      const auto path = run_dir / "records" / record_file_name(id.get<std::string>());
      run.records.push_back(run_record_from_json(json::parse(read_file(path))));
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed run directory " + run_dir.string() + ": " + e.what());
  }
  return run;
}

// ---------------------------------------------------------------------------
// Judgments

class Judgment {
 public:
  std::string question_id;
  SettingKind setting = SettingKind::no_context;
  std::string model_id;
  QuestionSet question_set = QuestionSet::non_latest;
  std::string response;
  std::string judge_id;
  std::string timestamp;

  Judgment() = default;

  bool content_faithful() const noexcept { return content_faithful_; }
  bool instruction_followed() const noexcept { return instruction_followed_; }
  /// Always content_faithful && instruction_followed.
  bool correct() const noexcept { return content_faithful_ && instruction_followed_; }

  void set_verdict(bool content_faithful, bool instruction_followed) noexcept {
    content_faithful_ = content_faithful;
    instruction_followed_ = instruction_followed;
  }

 private:
  bool content_faithful_ = false;
  bool instruction_followed_ = false;
};

inline json to_json(const Judgment& j) {
  return {{"question_id", j.question_id},
          {"setting", to_string(j.setting)},
          {"model_id", j.model_id},
          {"question_set", to_string(j.question_set)},
          {"response", j.response},
          {"content_faithful", j.content_faithful()},
          {"instruction_followed", j.instruction_followed()},
          {"correct", j.correct()},
          {"judge_id", j.judge_id},
          {"timestamp", j.timestamp}};
}

/// Throws ConsistencyError if a stored "correct" disagrees with the criteria.
inline Judgment judgment_from_json(const json& j) {
  Judgment out;
  out.question_id = j.at("question_id").get<std::string>();
  out.setting = parse_setting(j.at("setting").get<std::string>());
  out.model_id = j.at("model_id").get<std::string>();
  out.question_set = parse_question_set(j.value("question_set", std::string("non_latest")));
  out.response = j.value("response", std::string{});
  out.judge_id = j.value("judge_id", std::string{});
  out.timestamp = j.value("timestamp", std::string{});
  out.set_verdict(j.at("content_faithful").get<bool>(), j.at("instruction_followed").get<bool>());
  if (auto it = j.find("correct"); it != j.end() && it->get<bool>() != out.correct()) {
    throw ConsistencyError("judgment for " + out.question_id +
                           " stores correct != content_faithful && instruction_followed");
  }
  return out;
}

inline std::vector<Judgment> parse_judgments(std::string_view content) {
  std::vector<Judgment> out;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    if (is_blank(line)) return;
    try {
      out.push_back(judgment_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ConfigError("judgments line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return out;
}

inline std::string to_jsonl(const std::vector<Judgment>& judgments) {
  std::string out;
  for (const auto& j : judgments) out += to_json(j).dump() + "\n";
  return out;
}

/// Joins a judge's verdict file ({question_id, content_faithful,
/// instruction_followed, judge_id?, timestamp?} per line) with the run it
/// judges. Every verdict must name an ok record of the run, at most once.
inline std::vector<Judgment> record_judgments(const std::vector<RunRecord>& run,
                                              std::string_view verdicts,
                                              const std::string& default_judge = {}) {
  std::map<std::string, const RunRecord*, std::less<>> by_id;
  for (const auto& r : run) by_id[r.question_id] = &r;
  std::set<std::string> seen;
  std::vector<Judgment> out;
  for_each_line(verdicts, [&](std::size_t line_no, std::string_view line) {
    if (is_blank(line)) return;
    const auto where = "verdicts line " + std::to_string(line_no) + ": ";
    json v;
    try {
      v = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(where + e.what());
    }
    const auto qid = v.value("question_id", std::string{});
    auto it = by_id.find(qid);
    if (it == by_id.end()) throw ConsistencyError(where + "unknown question id '" + qid + "'");
    const RunRecord& r = *it->second;
    if (r.status != RecordStatus::ok) {
      throw ConsistencyError(where + "question " + qid + " has no response to judge");
    }
    if (!seen.insert(qid).second) throw ConsistencyError(where + "duplicate verdict for " + qid);
    if (!v.contains("content_faithful") || !v.contains("instruction_followed")) {
      throw ConfigError(where + "needs content_faithful and instruction_followed");
    }
    Judgment j;
    j.question_id = qid;
    j.setting = r.setting;
    j.model_id = r.model_id;
    j.question_set = r.question_set;
    j.response = r.response;
    j.judge_id = v.value("judge_id", default_judge);
    j.timestamp = v.value("timestamp", std::string{});
    try {
      j.set_verdict(v.at("content_faithful").get<bool>(), v.at("instruction_followed").get<bool>());
    } catch (const json::exception& e) {
      throw ConfigError(where + e.what());
    }
    if (v.contains("correct") && v["correct"].is_boolean() && v["correct"].get<bool>() != j.correct()) {
      throw ConsistencyError(where + "correct must equal content_faithful && instruction_followed");
    }
    out.push_back(std::move(j));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Accuracy

struct GroupKey {
  std::string model_id;
  SettingKind setting = SettingKind::no_context;
  QuestionSet question_set = QuestionSet::non_latest;

  auto operator<=>(const GroupKey&) const = default;
};

struct GroupAccuracy {
  GroupKey key;
  std::uint64_t correct = 0;
  std::uint64_t total = 0;
  /// Absent when the group has no judgments.
  std::optional<double> accuracy;
};

/// correct / total, or nullopt for an empty set.
inline std::optional<double> accuracy_of(const std::vector<Judgment>& judgments) {
  if (judgments.empty()) return std::nullopt;
  const auto correct = std::count_if(judgments.begin(), judgments.end(),
                                     [](const Judgment& j) { return j.correct(); });
  return static_cast<double>(correct) / static_cast<double>(judgments.size());
}

/// Per (model, setting, question set) accuracy. Groups listed in `expected`
/// but without judgments are reported with an absent accuracy.
inline std::vector<GroupAccuracy> compute_accuracy(const std::vector<Judgment>& judgments,
                                                   const std::vector<GroupKey>& expected = {}) {
  std::map<GroupKey, GroupAccuracy> groups;
  for (const auto& key : expected) groups[key].key = key;
  for (const auto& j : judgments) {
    GroupKey key{j.model_id, j.setting, j.question_set};
    auto& g = groups[key];
    g.key = key;
    ++g.total;
    g.correct += j.correct();
  }
  std::vector<GroupAccuracy> out;
  for (auto& [_, g] : groups) {
    if (g.total > 0) g.accuracy = static_cast<double>(g.correct) / static_cast<double>(g.total);
    out.push_back(std::move(g));
  }
  return out;
}

inline json to_json(const GroupAccuracy& g) {
  return {{"model_id", g.key.model_id},
          {"setting", to_string(g.key.setting)},
          {"setting_name", display_name(g.key.setting)},
          {"question_set", to_string(g.key.question_set)},
          {"correct", g.correct},
          {"total", g.total},
          {"accuracy", g.accuracy ? json(*g.accuracy) : json(nullptr)}};
}

}  // namespace bizcorpus::bench
