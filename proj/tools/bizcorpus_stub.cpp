// Wire-protocol stub backend for tests and demos. Reads one JSON request per
// line on stdin and writes one JSON response per line on stdout.
//
//   classifier: {"text"} -> {"lang", "confidence"}
//   model:      {"prompt", "model"} -> {"text"}
//   search:     {"query"} -> {"results": [{"url", "title", "body"}]}

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bizcorpus/jsonl.hpp"
#include "bizcorpus/lang_id.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  CLI::App app{"Stub backend speaking the bizcorpus wire protocol"};
  std::string mode = "classifier";
  std::string lang;
  double confidence = 0.95;
  std::string answer;
  std::string pages_path;
  int fail_after = -1;
  bool report_error = false;
  app.add_option("--mode", mode, "classifier | model | search")
      ->check(CLI::IsMember({"classifier", "model", "search"}));
  app.add_option("--lang", lang, "Fixed language; default uses script statistics");
  app.add_option("--confidence", confidence, "Confidence reported by the classifier");
  app.add_option("--answer", answer, "Fixed model answer; default echoes the prompt");
  app.add_option("--pages", pages_path, "Search pages JSONL: {query, url, title, body}");
  app.add_option("--fail-after", fail_after, "Exit without answering after N requests");
  app.add_flag("--error", report_error, "Answer every request with an error object");
  CLI11_PARSE(app, argc, argv);

  std::multimap<std::string, json> pages;
  if (!pages_path.empty()) {
    bizcorpus::for_each_line(bizcorpus::read_file(pages_path),
                             [&](std::size_t, std::string_view line) {
                               if (bizcorpus::is_blank(line)) return;
                               auto p = json::parse(line);
                               pages.emplace(p.at("query").get<std::string>(), p);
                             });
  }
  const bizcorpus::LangIdConfig heuristic;

  std::string line;
  for (int served = 0; std::getline(std::cin, line); ++served) {
    if (fail_after >= 0 && served >= fail_after) return 3;
    json response;
    try {
      const auto request = json::parse(line);
      if (report_error) {
        response = {{"error", "stub configured to fail"}};
      } else if (mode == "classifier") {
        const auto text = request.at("text").get<std::string>();
        response = {{"lang", lang.empty() ? bizcorpus::classify_fallback(heuristic, text).lang : lang},
                    {"confidence", confidence}};
      } else if (mode == "model") {
        response = {{"text", answer.empty() ? request.at("prompt").get<std::string>() : answer}};
      } else {
        json results = json::array();
        auto [lo, hi] = pages.equal_range(request.at("query").get<std::string>());
        for (auto it = lo; it != hi; ++it) {
          results.push_back({{"url", it->second.value("url", "")},
                             {"title", it->second.value("title", "")},
                             {"body", it->second.value("body", "")}});
        }
        response = {{"results", results}};
      }
    } catch (const std::exception& e) {
      response = {{"error", e.what()}};
    }
    std::cout << response.dump() << '\n' << std::flush;
  }
  return 0;
}
