#include "clearline/answer.hpp"

#include "clearline/error.hpp"

namespace clearline {

namespace {

std::string make_footer(const AnswerTemplate& tmpl, const std::string& topic_id) {
  std::string footer = tmpl.footer_format;
  const auto pos = footer.find("{topic}");
  if (pos != std::string::npos) footer.replace(pos, 7, topic_id);
  return footer;
}

// True when every line from `from` to `to` carries the same section, i.e. the
// two lines sit in one uninterrupted section block.
bool same_section_block(const Guideline& g, std::size_t from, std::size_t to) {
  for (std::size_t i = from + 1; i <= to; ++i) {
    if (g[i].section != g[from].section) return false;
  }
  return true;
}

}  // namespace

Answer assemble_answer(const Guideline& g, const LineIndexSet& indices, const std::string& question,
                       const AnswerTemplate& tmpl) {
  Answer a;
  a.topic_id = g.topic_id();
  a.question = question;
  a.footer = make_footer(tmpl, g.topic_id());

  std::optional<std::size_t> previous;
  for (std::size_t index : indices) {
    if (index >= g.size()) {
      throw Error(ErrorCode::IndexOutOfRange, "line " + std::to_string(index) +
                                                  " is outside guideline '" + g.topic_id() + "'");
    }
    const auto& line = g[index];
    if (!previous || !same_section_block(g, *previous, index)) a.segments.push_back({line.section, {}});
    a.segments.back().bodies.push_back(line.body);
    previous = index;
  }
  a.empty = a.segments.empty();
  return a;
}

std::string render_text(const Answer& a, const AnswerTemplate& tmpl) {
  std::string out;
  if (a.empty) {
    out += tmpl.empty_notice;
    out += "\n\n";
  } else {
    out += tmpl.preamble;
    out += "\n\n";
    for (const auto& segment : a.segments) {
      out += segment.section;
      out += '\n';
      for (const auto& body : segment.bodies) {
        out += body;
        out += '\n';
      }
      out += '\n';
    }
  }
  out += a.footer;
  return out;
}

nlohmann::json to_json(const Answer& a) {
  nlohmann::json segments = nlohmann::json::array();
  for (const auto& s : a.segments) segments.push_back({{"section", s.section}, {"bodies", s.bodies}});
  return {{"topic", a.topic_id},     {"question", a.question}, {"segments", std::move(segments)},
          {"empty", a.empty},        {"footer", a.footer}};
}

Answer answer_from_json(const nlohmann::json& j) {
  Answer a;
  a.topic_id = j.at("topic").get<std::string>();
  a.question = j.at("question").get<std::string>();
  for (const auto& s : j.at("segments")) {
    a.segments.push_back({s.at("section").get<std::string>(),
                          s.at("bodies").get<std::vector<std::string>>()});
  }
  a.empty = j.at("empty").get<bool>();
  a.footer = j.at("footer").get<std::string>();
  return a;
}

}  // namespace clearline
