#pragma once

// Line-delimited JSON ingestion and output for documents. One object per
// line: {"id"?, "url"?, "source"?, "date"?, "lang"?, "text"}.

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bizcorpus/document.hpp"
#include "bizcorpus/errors.hpp"
#include "bizcorpus/hash.hpp"
#include "bizcorpus/stats.hpp"
#include "bizcorpus/utf8.hpp"

namespace bizcorpus {

using json = nlohmann::json;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

/// Calls fn(line_number, line) for each line of `content` (1-based, without
/// the terminator; a trailing CR is dropped).
inline void for_each_line(std::string_view content,
                          const std::function<void(std::size_t, std::string_view)>& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(++line_no, line);
    pos = nl + 1;
  }
}

inline bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

/// Decodes one record; returns nullopt for anything that is not a usable
/// document (bad JSON, invalid UTF-8, missing text, bad source or date).
inline std::optional<Document> parse_document(std::string_view line, SourceTag default_source) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::exception&) {
    return std::nullopt;
  }
  if (!record.is_object()) return std::nullopt;
  const auto text = record.find("text");
  if (text == record.end() || !text->is_string()) return std::nullopt;

  Document doc;
  doc.text = text->get<std::string>();
  if (!utf8::is_valid(doc.text)) return std::nullopt;
  doc.source = default_source;
  try {
    if (auto it = record.find("id"); it != record.end() && !it->is_null()) {
      doc.id = it->is_string() ? it->get<std::string>() : it->dump();
    }
    if (auto it = record.find("url"); it != record.end() && !it->is_null()) {
      doc.url = it->get<std::string>();
    }
    if (auto it = record.find("source"); it != record.end() && !it->is_null()) {
      auto tag = parse_source(it->get<std::string>());
      if (!tag) return std::nullopt;
      doc.source = *tag;
    }
    if (auto it = record.find("date"); it != record.end() && !it->is_null()) {
      doc.published_date = Date::parse(it->get<std::string>());
      if (!doc.published_date) return std::nullopt;
    }
    if (auto it = record.find("lang"); it != record.end() && !it->is_null()) {
      doc.lang = it->get<std::string>();
    }
  } catch (const json::exception&) {
    return std::nullopt;
  }
  return doc;
}

/// Parses JSONL content as if read from a file with the given digest label.
/// Blank lines are skipped silently; undecodable lines are counted as malformed.
inline Corpus ingest_jsonl_content(std::string_view content, SourceTag source,
                                   IngestStats* stats = nullptr, std::string label = {}) {
  const std::string digest = to_hex(fnv1a64(content));
  IngestStats local;
  local.path = std::move(label);
  local.source = source;
  local.digest = digest;

  Corpus corpus;
  corpus.provenance = (local.path.empty() ? std::string("<memory>") : local.path) + "@" + digest;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    ++local.lines;
    if (is_blank(line)) return;
    auto doc = parse_document(line, source);
    if (!doc) {
      ++local.malformed;
      return;
    }
    if (doc->id.empty()) doc->id = digest.substr(0, 12) + "-" + std::to_string(line_no);
    corpus.documents.push_back(std::move(*doc));
  });
  local.documents = corpus.size();
  if (stats) *stats = std::move(local);
  return corpus;
}

inline Corpus ingest_jsonl(const std::filesystem::path& path, SourceTag source,
                           IngestStats* stats = nullptr) {
  const std::string content = read_file(path);
  return ingest_jsonl_content(content, source, stats, path.string());
}

inline json to_json(const Document& doc) {
  json j = {{"id", doc.id}, {"source", to_string(doc.source)}, {"text", doc.text}};
  if (!doc.url.empty()) j["url"] = doc.url;
  if (doc.published_date) j["date"] = doc.published_date->str();
  if (doc.lang) j["lang"] = *doc.lang;
  return j;
}

inline std::string to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus) {
    out += to_json(doc).dump();
    out += '\n';
  }
  return out;
}

inline void write_jsonl(const std::filesystem::path& path, const Corpus& corpus) {
  write_file(path, to_jsonl(corpus));
}

}  // namespace bizcorpus
