#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "clearline/corpus.hpp"
#include "clearline/extraction.hpp"

namespace clearline {

struct AnswerSegment {
  std::string section;
  std::vector<std::string> bodies;

  friend bool operator==(const AnswerSegment&, const AnswerSegment&) = default;
};

/// Fixed scaffolding around the verbatim lines. `footer_format` must contain
/// "{topic}", which is replaced by the topic id.
struct AnswerTemplate {
  std::string preamble = "Please follow the steps below:";
  std::string empty_notice = "No relevant guideline lines were identified for this question.";
  std::string footer_format = "Please refer to {topic} guidelines for more information.";
};

struct Answer {
  std::string topic_id;
  std::string question;
  std::vector<AnswerSegment> segments;
  bool empty = true;
  std::string footer;

  friend bool operator==(const Answer&, const Answer&) = default;
};

/// Consecutive selected lines sharing a section form one segment.
Answer assemble_answer(const Guideline& g, const LineIndexSet& indices, const std::string& question,
                       const AnswerTemplate& tmpl = {});

std::string render_text(const Answer& a, const AnswerTemplate& tmpl = {});

nlohmann::json to_json(const Answer& a);
Answer answer_from_json(const nlohmann::json& j);

}  // namespace clearline
