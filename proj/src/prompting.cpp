#include "clearline/prompting.hpp"

#include <json.hpp>

#include "clearline/corpus.hpp"
#include "clearline/error.hpp"
#include "clearline/jsonl.hpp"
#include "clearline/text.hpp"

namespace clearline {

std::string_view to_string(Role role) { return role == Role::user ? "user" : "assistant"; }

std::string_view to_string(PromptStep step) {
  return step == PromptStep::topic_identification ? "topic_identification" : "line_identification";
}

PromptStep prompt_step_from_string(std::string_view s) {
  if (s == "topic_identification") return PromptStep::topic_identification;
  if (s == "line_identification") return PromptStep::line_identification;
  throw Error(ErrorCode::InvalidConfig, "unknown prompt step '" + std::string(s) + "'");
}

std::string topic_query_text(std::string_view question, const std::vector<std::string>& topics) {
  std::string out = "Identify the topic of the following question:\n";
  out += question;
  out += "\nUse the following topic list:\n";
  out += text::join(topics, ", ");
  out += ".\nDo not include any other text. Provide only the topic name.";
  return out;
}

std::string line_query_text(std::string_view question, std::string_view numbered_context) {
  std::string out = "Your question is:\n";
  out += question;
  out +=
      "\nIdentify the minimum relevant lines from the context below that help answer the "
      "question.\nDo not include any other text. Provide the line numbers that answer the "
      "question, separated by white space.\nThe content of the sections is below:\n";
  out += numbered_context;
  return out;
}

namespace {

PromptBundle assemble(PromptStep step, const std::vector<FewShotExample>& shots,
                      std::string final_user) {
  PromptBundle bundle{step, {}};
  bundle.messages.reserve(shots.size() * 2 + 1);
  for (const auto& shot : shots) {
    if (shot.user_content.empty() || shot.assistant_content.empty()) {
      throw Error(ErrorCode::InvalidConfig, "few-shot example with empty content");
    }
    bundle.messages.push_back({Role::user, shot.user_content});
    bundle.messages.push_back({Role::assistant, shot.assistant_content});
  }
  bundle.messages.push_back({Role::user, std::move(final_user)});
  return bundle;
}

void require_question(std::string_view question) {
  if (text::trim(question).empty()) throw Error(ErrorCode::EmptyQuestion, "question is empty");
}

}  // namespace

PromptBundle build_topic_prompt(std::string_view question, const std::vector<std::string>& topics,
                                const std::vector<FewShotExample>& shots) {
  require_question(question);
  if (topics.empty()) throw Error(ErrorCode::EmptyTopicList, "topic list is empty");
  return assemble(PromptStep::topic_identification, shots, topic_query_text(question, topics));
}

PromptBundle build_line_prompt(std::string_view question, std::string_view numbered_context,
                               const std::vector<FewShotExample>& shots) {
  require_question(question);
  if (text::trim(numbered_context).empty()) {
    throw Error(ErrorCode::EmptyContext, "numbered context is empty");
  }
  return assemble(PromptStep::line_identification, shots,
                  line_query_text(question, numbered_context));
}

namespace {

constexpr std::string_view kToyGuideline =
    "# DEFINITIONS\n"
    "Migraine is a recurrent primary headache disorder with attacks lasting 4 to 72 hours.\n"
    "Aura refers to transient visual or sensory symptoms that precede the headache.\n"
    "# ASSESSMENT\n"
    "Record headache frequency, duration and known triggers.\n"
    "Measure blood pressure in every patient presenting with headache.\n"
    "# TREATMENT\n"
    "Offer simple analgesia as first-line treatment for an acute attack.\n"
    "Review the diagnosis if the character of the attacks changes.\n";

ShotStore make_default_shots() {
  const std::vector<std::string> toy_topics{"Migraine", "Asthma", "Anaemia"};
  const auto toy = parse_guideline_source(kToyGuideline, "Migraine", "Migraine");
  const auto context = render_numbered_context(toy);

  ShotStore store;
  store.topic = {
      {topic_query_text("What is first-line treatment for an acute migraine attack?", toy_topics),
       "Migraine"},
      {topic_query_text("Which inhaler should I start for a new asthma diagnosis?", toy_topics),
       "Asthma"},
  };
  store.line = {
      {line_query_text("What is a migraine aura?", context), "1"},
      {line_query_text("What should I check when assessing a patient with migraine?", context),
       "2 3"},
  };
  return store;
}

}  // namespace

const ShotStore& default_shots() {
  static const ShotStore store = make_default_shots();
  return store;
}

ShotStore shots_from_json_text(std::string_view json_text) {
  ShotStore store;
  try {
    const auto j = nlohmann::json::parse(json_text);
    if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "few-shot file must be a JSON array");
    for (const auto& item : j) {
      FewShotExample shot{item.at("user").get<std::string>(), item.at("assistant").get<std::string>()};
      if (shot.user_content.empty() || shot.assistant_content.empty()) {
        throw Error(ErrorCode::InvalidConfig, "few-shot example with empty content");
      }
      switch (prompt_step_from_string(item.at("step").get<std::string>())) {
        case PromptStep::topic_identification: store.topic.push_back(std::move(shot)); break;
        case PromptStep::line_identification: store.line.push_back(std::move(shot)); break;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed few-shot file: ") + e.what());
  }
  return store;
}

ShotStore load_shots(const std::string& path) { return shots_from_json_text(read_file(path)); }

}  // namespace clearline
