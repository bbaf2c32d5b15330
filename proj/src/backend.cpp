#include "clearline/backend.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "clearline/error.hpp"
#include "clearline/jsonl.hpp"

namespace clearline {

namespace {

using Clock = std::chrono::steady_clock;

void require_user_turn(std::span<const ChatMessage> messages) {
  if (messages.empty() || messages.back().role != Role::user) {
    throw BackendError(ErrorCode::Protocol, "messages must end with a user turn");
  }
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? v : nullptr;
}

}  // namespace

void BackendConfig::apply_environment(bool base_url_set) {
  if (!base_url_set) {
    if (const char* v = env("CLEARLINE_BASE_URL")) base_url = v;
  }
  if (api_key.empty()) {
    if (const char* v = env("CLEARLINE_API_KEY")) api_key = v;
  }
}

void BackendConfig::validate() const {
  if (!(request_timeout.count() > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "request timeout must be positive");
  }
  if (max_retries < 0) throw Error(ErrorCode::InvalidConfig, "max_retries must be >= 0");
  if (base_url.empty()) throw Error(ErrorCode::InvalidConfig, "backend base_url is empty");
}

nlohmann::json chat_request_body(std::span<const ChatMessage> messages,
                                 const BackendConfig& config) {
  nlohmann::json body = nlohmann::json::object();
  if (config.sampling_overrides && config.sampling_overrides->is_object()) {
    body = *config.sampling_overrides;
  }
  body["model"] = config.model_name;
  auto& list = body["messages"] = nlohmann::json::array();
  for (const auto& m : messages) {
    list.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return body;
}

std::string parse_chat_response(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) {
      throw BackendError(ErrorCode::Protocol, "choices[0].message.content is not a string");
    }
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(ErrorCode::Protocol, std::string("malformed completion response: ") + e.what());
  }
}

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
  config_.validate();
  std::string_view url = config_.base_url;
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string_view::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string_view::npos) {
    scheme_host_port_ = std::string(url);
  } else {
    scheme_host_port_ = std::string(url.substr(0, path_start));
    path_prefix_ = std::string(url.substr(path_start));
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
}

CompletionResult HttpBackend::complete(std::span<const ChatMessage> messages) {
  require_user_turn(messages);
  const std::string payload = chat_request_body(messages, config_).dump();
  const std::string path = path_prefix_ + "/v1/chat/completions";

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(config_.request_timeout);
  const auto seconds = static_cast<time_t>(timeout.count() / 1000000);
  const auto micros = static_cast<time_t>(timeout.count() % 1000000);

  const auto start = Clock::now();
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(config_.initial_backoff * (1 << (attempt - 1)));
    }
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);

    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw BackendError(ErrorCode::Upstream,
                         "backend returned HTTP " + std::to_string(res->status) + ": " + res->body,
                         res->status);
    }
    CompletionResult result{parse_chat_response(res->body), {}};
    result.latency = Clock::now() - start;
    return result;
  }
  throw BackendError(ErrorCode::Transport,
                     "backend unreachable after " + std::to_string(config_.max_retries + 1) +
                         " attempts: " + last_error);
}

bool HttpBackend::probe() {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(2, 0);
  client.set_read_timeout(2, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  return static_cast<bool>(client.Get(path_prefix_ + "/v1/models", headers));
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> script)
    : script_(std::make_move_iterator(script.begin()), std::make_move_iterator(script.end())) {}

CompletionResult ScriptedBackend::complete(std::span<const ChatMessage> messages) {
  require_user_turn(messages);
  const auto start = Clock::now();
  std::lock_guard lock(mutex_);
  ++calls_;
  received_.push_back(messages.back().content);
  if (script_.empty()) throw BackendError(ErrorCode::Upstream, "no scripted response");
  CompletionResult result{std::move(script_.front()), {}};
  script_.pop_front();
  result.latency = Clock::now() - start;
  return result;
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mutex_);
  return script_.size();
}

std::vector<std::string> ScriptedBackend::received() const {
  std::lock_guard lock(mutex_);
  return received_;
}

std::string message_key(std::string_view text) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, hash >>= 4) out[static_cast<std::size_t>(i)] = kHex[hash & 0xF];
  return out;
}

ReplyTableBackend::ReplyTableBackend(std::map<std::string, std::string> replies)
    : replies_(std::move(replies)) {}

CompletionResult ReplyTableBackend::complete(std::span<const ChatMessage> messages) {
  require_user_turn(messages);
  const auto start = Clock::now();
  {
    std::lock_guard lock(mutex_);
    ++calls_;
  }
  auto it = replies_.find(message_key(messages.back().content));
  if (it == replies_.end()) throw BackendError(ErrorCode::Upstream, "no scripted response");
  return {it->second, Clock::now() - start};
}

std::size_t ReplyTableBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::vector<std::string> load_script(const std::string& path) {
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    return j.get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path + ": script must be a JSON array of strings (" +
                                              e.what() + ")");
  }
}

}  // namespace clearline
