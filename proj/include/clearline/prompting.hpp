#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace clearline {

enum class Role { user, assistant };

std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct FewShotExample {
  std::string user_content;
  std::string assistant_content;
};

enum class PromptStep { topic_identification, line_identification };

std::string_view to_string(PromptStep step);
PromptStep prompt_step_from_string(std::string_view s);

/// Few-shot pairs followed by one final user message. No system message.
struct PromptBundle {
  PromptStep step = PromptStep::topic_identification;
  std::vector<ChatMessage> messages;

  [[nodiscard]] const ChatMessage& final_message() const { return messages.back(); }
};

/// The final user turn of the topic step.
std::string topic_query_text(std::string_view question, const std::vector<std::string>& topics);

/// The final user turn of the line step.
std::string line_query_text(std::string_view question, std::string_view numbered_context);

PromptBundle build_topic_prompt(std::string_view question, const std::vector<std::string>& topics,
                                const std::vector<FewShotExample>& shots);

PromptBundle build_line_prompt(std::string_view question, std::string_view numbered_context,
                               const std::vector<FewShotExample>& shots);

/// Few-shot pairs per step.
struct ShotStore {
  std::vector<FewShotExample> topic;
  std::vector<FewShotExample> line;
};

/// Two synthetic pairs per step, built from a small bundled toy guideline.
/// Placeholders only; they do not reproduce any published exemplar.
const ShotStore& default_shots();

/// Reads [{"step": ..., "user": ..., "assistant": ...}].
ShotStore load_shots(const std::string& path);
ShotStore shots_from_json_text(std::string_view json_text);

}  // namespace clearline
