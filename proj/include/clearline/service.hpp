#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "clearline/answer.hpp"
#include "clearline/backend.hpp"
#include "clearline/corpus.hpp"
#include "clearline/eval.hpp"
#include "clearline/extraction.hpp"
#include "clearline/jsonl.hpp"

namespace httplib {
class Server;
}

namespace clearline {

struct ServiceConfig {
  BackendConfig backend;
  std::size_t ensemble_size = 1;
  std::size_t max_retries_per_step = 1;
  std::string corpus_path;
  std::string log_path = "interactions.jsonl";
  std::string annotation_log_path = "annotations.jsonl";
  std::string bind_address = "127.0.0.1:8080";
};

/// Reads "key = value" lines ('#' comments), then applies CLEARLINE_BASE_URL,
/// CLEARLINE_API_KEY and CLEARLINE_ENSEMBLE overrides. Unknown keys raise InvalidConfig.
ServiceConfig load_service_config(const std::filesystem::path& path);
ServiceConfig parse_service_config(std::string_view text);
void apply_environment(ServiceConfig& config);

struct Exchange {
  std::string question;
  Answer answer;
  std::string topic_id;
  LineIndexSet selected;
  std::optional<std::string> reasoning_trace;
  StepTimings timings;
  std::string timestamp;  // ISO 8601 UTC
};

struct Session {
  std::string session_id;
  std::vector<Exchange> exchanges;
};

nlohmann::json to_json(const Exchange& e);

struct Reply {
  int status = 200;
  nlohmann::json body;
};

/// Request handlers, independent of the HTTP transport. Handlers may run
/// concurrently; the corpus is shared read-only.
class Service {
 public:
  /// `corpus` may be null, in which case corpus-dependent endpoints answer 503.
  Service(std::shared_ptr<const Corpus> corpus, std::shared_ptr<ChatBackend> backend,
          ServiceConfig config);

  Reply guidelines() const;
  Reply ask(const nlohmann::json& request);
  Reply feedback(const nlohmann::json& request);
  Reply session(std::string_view session_id) const;
  Reply health();

  /// Routes a request by method and path; malformed JSON bodies answer 400.
  Reply handle(std::string_view method, std::string_view path, std::string_view body);

  [[nodiscard]] const ServiceConfig& config() const noexcept { return config_; }

 private:
  std::string new_session_id();

  std::shared_ptr<const Corpus> corpus_;
  std::shared_ptr<ChatBackend> backend_;
  ServiceConfig config_;
  JsonlAppender interaction_log_;
  JsonlAppender annotation_log_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, Session> sessions_;
};

/// Binds a Service to an HTTP listener.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and serves on a background thread; port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  Service& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace clearline
