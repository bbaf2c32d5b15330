#pragma once

// Shared fixtures and test-only oracles. Nothing here calls into the code
// paths it is used to check.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "clearline/corpus.hpp"

namespace clearline::testing {

namespace fs = std::filesystem;

inline fs::path fixtures() { return fs::path(CLEARLINE_FIXTURES); }

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Corpus load_source_dir(const fs::path& dir) {
  const auto topics = nlohmann::json::parse(slurp(dir / "topics.json"));
  std::vector<Guideline> out;
  for (const auto& t : topics) {
    const std::string topic = t.is_string() ? t.get<std::string>() : t.at("topic").get<std::string>();
    const std::string title = t.is_string() ? topic : t.value("title", topic);
    out.push_back(parse_guideline_source(slurp(dir / (topic + ".txt")), topic, title));
  }
  return Corpus(std::move(out));
}

inline const Corpus& six_guidelines() {
  static const Corpus c = load_source_dir(fixtures() / "guidelines");
  return c;
}

inline const Corpus& prompt_example_corpus() {
  static const Corpus c = load_source_dir(fixtures() / "prompt_example");
  return c;
}

/// Fresh scratch directory under the system temp dir.
inline fs::path scratch_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = fs::temp_directory_path() /
             ("clearline-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Inverse of the numbered context listing, written independently of the renderer:
/// "<digits>: <section>: <body>" where the section holds no ": ".
inline std::vector<std::tuple<std::size_t, std::string, std::string>> parse_numbered_context(
    const std::string& context) {
  std::vector<std::tuple<std::size_t, std::string, std::string>> out;
  std::istringstream in(context);
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find(": ");
    const auto second = line.find(": ", first + 2);
    if (first == std::string::npos || second == std::string::npos) return {};
    out.emplace_back(std::stoul(line.substr(0, first)), line.substr(first + 2, second - first - 2),
                     line.substr(second + 2));
  }
  return out;
}

struct RenderedAnswer {
  bool empty = false;
  std::vector<std::pair<std::string, std::vector<std::string>>> segments;
  std::string footer;
};

/// Inverse of the answer text layout: a preamble (or empty notice) paragraph,
/// then blank-line separated blocks of heading + bodies, then the footer.
inline RenderedAnswer parse_rendered_answer(const std::string& rendered) {
  std::vector<std::string> blocks;
  std::size_t start = 0;
  while (true) {
    const auto sep = rendered.find("\n\n", start);
    if (sep == std::string::npos) {
      blocks.push_back(rendered.substr(start));
      break;
    }
    blocks.push_back(rendered.substr(start, sep - start));
    start = sep + 2;
  }
  RenderedAnswer out;
  out.footer = blocks.back();
  out.empty = blocks.front() == "No relevant guideline lines were identified for this question.";
  for (std::size_t i = 1; i + 1 < blocks.size(); ++i) {
    std::istringstream in(blocks[i]);
    std::string line;
    std::getline(in, line);
    std::pair<std::string, std::vector<std::string>> seg{line, {}};
    while (std::getline(in, line)) seg.second.push_back(line);
    out.segments.push_back(std::move(seg));
  }
  return out;
}

}  // namespace clearline::testing
