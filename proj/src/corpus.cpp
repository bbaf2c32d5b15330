#include "clearline/corpus.hpp"

#include <set>

#include "clearline/error.hpp"
#include "clearline/jsonl.hpp"
#include "clearline/text.hpp"

namespace clearline {

Guideline Guideline::create(std::string topic_id, std::string title,
                            std::vector<GuidelineLine> lines) {
  if (text::trim(topic_id).empty()) {
    throw Error(ErrorCode::InvalidCorpus, "guideline topic id is empty");
  }
  if (lines.empty()) {
    throw Error(ErrorCode::EmptyDocument, "guideline '" + topic_id + "' has no lines");
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.index != i) {
      throw Error(ErrorCode::InvalidCorpus, "guideline '" + topic_id + "': line at position " +
                                                std::to_string(i) + " has index " +
                                                std::to_string(line.index));
    }
    if (text::trim(line.section).empty() || text::trim(line.body).empty()) {
      throw Error(ErrorCode::InvalidCorpus, "guideline '" + topic_id + "': line " +
                                                std::to_string(i) + " has an empty section or body");
    }
    if (line.body.find('\n') != std::string::npos || line.section.find('\n') != std::string::npos) {
      throw Error(ErrorCode::InvalidCorpus,
                  "guideline '" + topic_id + "': line " + std::to_string(i) + " spans several lines");
    }
  }
  return Guideline(std::move(topic_id), std::move(title), std::move(lines));
}

std::string canonical_topic(std::string_view topic) {
  return text::casefold(text::trim(topic));
}

Corpus::Corpus(std::vector<Guideline> guidelines) : guidelines_(std::move(guidelines)) {
  for (std::size_t i = 0; i < guidelines_.size(); ++i) {
    const auto& id = guidelines_[i].topic_id();
    if (!by_canonical_.emplace(canonical_topic(id), i).second) {
      throw Error(ErrorCode::InvalidCorpus, "duplicate topic '" + id + "'");
    }
    topics_.push_back(id);
  }
}

const Guideline* Corpus::find(std::string_view topic_id) const {
  auto it = by_canonical_.find(canonical_topic(topic_id));
  return it == by_canonical_.end() ? nullptr : &guidelines_[it->second];
}

const Guideline& Corpus::at(std::string_view topic_id) const {
  if (const auto* g = find(topic_id)) return *g;
  throw Error(ErrorCode::InvalidCorpus, "unknown topic '" + std::string(topic_id) + "'");
}

Guideline parse_guideline_source(std::string_view source, std::string topic_id,
                                 std::string title) {
  if (source.starts_with("\xEF\xBB\xBF")) source.remove_prefix(3);

  std::vector<GuidelineLine> lines;
  std::optional<std::string> section;
  std::size_t line_no = 0;
  for (std::string_view raw : text::split_lines(source)) {
    ++line_no;
    if (raw.ends_with('\r')) raw.remove_suffix(1);
    if (raw.starts_with("# ") || raw == "#") {
      auto heading = text::trim(raw.substr(1));
      if (heading.empty()) {
        throw ParseError(ErrorCode::MissingSectionHeader, "empty section heading", line_no);
      }
      section = std::string(heading);
      continue;
    }
    auto body = text::trim(raw);
    if (body.empty()) continue;
    if (!section) {
      throw ParseError(ErrorCode::MissingSectionHeader,
                       "content line before any section header", line_no);
    }
    lines.push_back({lines.size(), *section, std::string(body)});
  }
  if (lines.empty()) {
    throw ParseError(ErrorCode::EmptyDocument, "document has no content lines");
  }
  return Guideline::create(std::move(topic_id), std::move(title), std::move(lines));
}

std::string render_numbered_context(const Guideline& g) {
  std::string out;
  for (const auto& line : g.lines()) {
    if (!out.empty()) out += '\n';
    out += std::to_string(line.index);
    out += ": ";
    out += line.section;
    out += ": ";
    out += line.body;
  }
  return out;
}

std::size_t count_words(std::string_view body) { return text::split_whitespace(body).size(); }

CorpusStats compute_stats(const Corpus& c) {
  if (c.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no guidelines");
  CorpusStats stats;
  double lines = 0.0;
  double words = 0.0;
  for (const auto& g : c.guidelines()) {
    GuidelineCounts counts{g.size(), 0};
    for (const auto& line : g.lines()) counts.words += count_words(line.body);
    lines += static_cast<double>(counts.lines);
    words += static_cast<double>(counts.words);
    stats.per_guideline.emplace_back(g.topic_id(), counts);
  }
  const auto n = static_cast<double>(c.size());
  stats.line_count_mean = lines / n;
  stats.word_count_mean = words / n;
  return stats;
}

nlohmann::json to_json(const Corpus& c) {
  nlohmann::json guidelines = nlohmann::json::object();
  for (const auto& g : c.guidelines()) {
    nlohmann::json lines = nlohmann::json::array();
    for (const auto& line : g.lines()) {
      lines.push_back({{"index", line.index}, {"section", line.section}, {"body", line.body}});
    }
    guidelines[g.topic_id()] = {{"title", g.title()}, {"lines", std::move(lines)}};
  }
  return {{"topics", c.topics()}, {"guidelines", std::move(guidelines)}};
}

Corpus corpus_from_json(const nlohmann::json& j) {
  try {
    const auto topics = j.at("topics").get<std::vector<std::string>>();
    const auto& guidelines = j.at("guidelines");
    if (!guidelines.is_object()) {
      throw Error(ErrorCode::InvalidCorpus, "'guidelines' must be an object");
    }
    std::set<std::string> listed(topics.begin(), topics.end());
    if (listed.size() != topics.size() || listed.size() != guidelines.size()) {
      throw Error(ErrorCode::InvalidCorpus, "topic list and guideline keys differ");
    }
    std::vector<Guideline> out;
    for (const auto& topic : topics) {
      if (!guidelines.contains(topic)) {
        throw Error(ErrorCode::InvalidCorpus, "no guideline for listed topic '" + topic + "'");
      }
      const auto& g = guidelines.at(topic);
      std::vector<GuidelineLine> lines;
      for (const auto& line : g.at("lines")) {
        lines.push_back({line.at("index").get<std::size_t>(), line.at("section").get<std::string>(),
                         line.at("body").get<std::string>()});
      }
      out.push_back(Guideline::create(topic, g.value("title", topic), std::move(lines)));
    }
    return Corpus(std::move(out));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidCorpus, std::string("malformed corpus document: ") + e.what());
  }
}

Corpus load_corpus(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidCorpus, path + ": " + e.what());
  }
  return corpus_from_json(j);
}

void save_corpus(const Corpus& c, const std::string& path) {
  write_file(path, to_json(c).dump(2) + "\n");
}

}  // namespace clearline
