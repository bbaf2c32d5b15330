#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clearline/prompting.hpp"

namespace clearline {

struct BackendConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string model_name = "meta-llama/Llama-3.1-8B-Instruct";
  std::chrono::duration<double> request_timeout{120.0};
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{500};
  /// Merged into the request body when present; absent means server defaults.
  std::optional<nlohmann::json> sampling_overrides;
  /// Bearer token; empty means no Authorization header.
  std::string api_key;

  /// Fills base_url / api_key from CLEARLINE_BASE_URL / CLEARLINE_API_KEY.
  /// base_url is taken from the environment only when `base_url_set` is false.
  void apply_environment(bool base_url_set);

  /// Throws InvalidConfig when timeout <= 0 or max_retries < 0.
  void validate() const;
};

struct CompletionResult {
  std::string text;
  std::chrono::duration<double> latency{0.0};
};

/// Chat-completion backend. Implementations are safe to call concurrently.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  /// `messages` must end with a user turn.
  virtual CompletionResult complete(std::span<const ChatMessage> messages) = 0;

  /// Cheap reachability check for health endpoints.
  virtual bool probe() { return true; }
};

/// OpenAI-compatible HTTP backend: POST {base_url}/v1/chat/completions.
/// Transport failures are retried with exponential backoff; non-2xx statuses
/// raise Upstream and malformed bodies raise Protocol without retrying.
class HttpBackend final : public ChatBackend {
 public:
  explicit HttpBackend(BackendConfig config);

  CompletionResult complete(std::span<const ChatMessage> messages) override;
  bool probe() override;

  [[nodiscard]] const BackendConfig& config() const noexcept { return config_; }

 private:
  BackendConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

/// Request body sent by HttpBackend.
nlohmann::json chat_request_body(std::span<const ChatMessage> messages,
                                 const BackendConfig& config);

/// Extracts choices[0].message.content; throws Protocol on any other shape.
std::string parse_chat_response(std::string_view body);

/// Deterministic backend that pops responses in order. Exhaustion raises Upstream.
class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> script);

  CompletionResult complete(std::span<const ChatMessage> messages) override;

  [[nodiscard]] std::size_t calls() const;
  [[nodiscard]] std::size_t remaining() const;
  /// Final user messages seen, in call order.
  [[nodiscard]] std::vector<std::string> received() const;

 private:
  mutable std::mutex mutex_;
  std::deque<std::string> script_;
  std::size_t calls_ = 0;
  std::vector<std::string> received_;
};

/// 64-bit FNV-1a of the text as 16 lowercase hex digits.
std::string message_key(std::string_view text);

/// Deterministic backend answering by message_key(final user message).
class ReplyTableBackend final : public ChatBackend {
 public:
  explicit ReplyTableBackend(std::map<std::string, std::string> replies);

  CompletionResult complete(std::span<const ChatMessage> messages) override;

  [[nodiscard]] std::size_t calls() const;

 private:
  std::map<std::string, std::string> replies_;
  mutable std::mutex mutex_;
  std::size_t calls_ = 0;
};

/// Reads a JSON array of response strings.
std::vector<std::string> load_script(const std::string& path);

}  // namespace clearline
