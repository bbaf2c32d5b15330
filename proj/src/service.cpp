#include "clearline/service.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <random>

#include <httplib.h>

#include "clearline/error.hpp"
#include "clearline/text.hpp"

namespace clearline {

namespace {

using Clock = std::chrono::steady_clock;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()) % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms.count()));
  return out;
}

Reply error_reply(int status, const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
  extra["error"] = message;
  return {status, std::move(extra)};
}

nlohmann::json timings_json(const StepTimings& t) {
  return {{"topic_seconds", t.topic_seconds},
          {"line_seconds", t.line_seconds},
          {"total_seconds", t.total_seconds}};
}

std::size_t parse_size(std::string_view key, std::string_view value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(std::string(value), &pos);
    if (pos != value.size() || v < 0) throw std::invalid_argument("negative");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig,
                "'" + std::string(key) + "' expects a non-negative integer, got '" + std::string(value) + "'");
  }
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(std::string(value), &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig,
                "'" + std::string(key) + "' expects a number, got '" + std::string(value) + "'");
  }
}

}  // namespace

ServiceConfig parse_service_config(std::string_view text_in) {
  ServiceConfig config;
  std::size_t line_no = 0;
  for (std::string_view raw : text::split_lines(text_in)) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(ErrorCode::InvalidConfig, "expected 'key = value'", line_no);
    }
    const auto key = text::trim(line.substr(0, eq));
    const std::string value(text::trim(line.substr(eq + 1)));
    if (key == "base_url") {
      config.backend.base_url = value;
    } else if (key == "model_name" || key == "model") {
      config.backend.model_name = value;
    } else if (key == "api_key") {
      config.backend.api_key = value;
    } else if (key == "request_timeout") {
      config.backend.request_timeout = std::chrono::duration<double>(parse_double(key, value));
    } else if (key == "max_retries") {
      config.backend.max_retries = static_cast<int>(parse_size(key, value));
    } else if (key == "initial_backoff_ms") {
      config.backend.initial_backoff = std::chrono::milliseconds(parse_size(key, value));
    } else if (key == "ensemble_size") {
      config.ensemble_size = parse_size(key, value);
    } else if (key == "max_retries_per_step") {
      config.max_retries_per_step = parse_size(key, value);
    } else if (key == "corpus_path") {
      config.corpus_path = value;
    } else if (key == "log_path") {
      config.log_path = value;
    } else if (key == "annotation_log_path") {
      config.annotation_log_path = value;
    } else if (key == "bind_address") {
      config.bind_address = value;
    } else {
      throw ParseError(ErrorCode::InvalidConfig, "unknown key '" + std::string(key) + "'", line_no);
    }
  }
  if (config.ensemble_size == 0) throw Error(ErrorCode::InvalidConfig, "ensemble_size must be >= 1");
  config.backend.validate();
  return config;
}

void apply_environment(ServiceConfig& config) {
  if (const char* v = std::getenv("CLEARLINE_BASE_URL"); v != nullptr && *v != '\0') {
    config.backend.base_url = v;
  }
  if (const char* v = std::getenv("CLEARLINE_API_KEY"); v != nullptr && *v != '\0') {
    config.backend.api_key = v;
  }
  if (const char* v = std::getenv("CLEARLINE_ENSEMBLE"); v != nullptr && *v != '\0') {
    config.ensemble_size = parse_size("CLEARLINE_ENSEMBLE", v);
    if (config.ensemble_size == 0) throw Error(ErrorCode::InvalidConfig, "CLEARLINE_ENSEMBLE must be >= 1");
  }
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  auto config = parse_service_config(read_file(path));
  apply_environment(config);
  return config;
}

nlohmann::json to_json(const Exchange& e) {
  nlohmann::json j = {{"question", e.question},
                      {"answer", to_json(e.answer)},
                      {"topic", e.topic_id},
                      {"selected_indices", std::vector<std::size_t>(e.selected.begin(), e.selected.end())},
                      {"timings", timings_json(e.timings)},
                      {"timestamp", e.timestamp}};
  if (e.reasoning_trace) j["reasoning_trace"] = *e.reasoning_trace;
  return j;
}

Service::Service(std::shared_ptr<const Corpus> corpus, std::shared_ptr<ChatBackend> backend,
                 ServiceConfig config)
    : corpus_(std::move(corpus)),
      backend_(std::move(backend)),
      config_(std::move(config)),
      interaction_log_(config_.log_path),
      annotation_log_(config_.annotation_log_path) {}

std::string Service::new_session_id() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  static constexpr char kHex[] = "0123456789abcdef";
  while (true) {
    std::string id(32, '0');
    for (char& c : id) c = kHex[rng() & 0xF];
    if (!sessions_.contains(id)) return id;
  }
}

Reply Service::guidelines() const {
  if (!corpus_ || corpus_->empty()) return error_reply(503, "corpus not loaded");
  nlohmann::json list = nlohmann::json::array();
  for (const auto& g : corpus_->guidelines()) {
    list.push_back({{"topic_id", g.topic_id()}, {"title", g.title()}, {"line_count", g.size()}});
  }
  return {200, std::move(list)};
}

Reply Service::ask(const nlohmann::json& request) {
  const auto start = Clock::now();
  if (!corpus_ || corpus_->empty()) return error_reply(503, "corpus not loaded");
  if (!request.is_object()) return error_reply(400, "request body must be a JSON object");

  const auto question_it = request.find("question");
  if (question_it == request.end() || !question_it->is_string() ||
      text::trim(question_it->get<std::string>()).empty()) {
    return error_reply(400, "question must be a non-empty string");
  }
  const std::string question = question_it->get<std::string>();

  std::optional<std::string> session_id;
  if (auto it = request.find("session_id"); it != request.end() && !it->is_null()) {
    if (!it->is_string()) return error_reply(400, "session_id must be a string");
    session_id = it->get<std::string>();
    std::lock_guard lock(sessions_mutex_);
    if (!sessions_.contains(*session_id)) return error_reply(404, "unknown session " + *session_id);
  }

  PipelineOptions options;
  options.ensemble_size = config_.ensemble_size;
  options.max_retries_per_step = config_.max_retries_per_step;
  if (auto it = request.find("topic_override"); it != request.end() && !it->is_null()) {
    if (!it->is_string() || corpus_->find(it->get<std::string>()) == nullptr) {
      return error_reply(400, "unknown topic_override", {{"topics", corpus_->topics()}});
    }
    options.topic_override = it->get<std::string>();
  }
  if (auto it = request.find("ensemble_size"); it != request.end() && !it->is_null()) {
    if (!it->is_number_unsigned() || it->get<std::size_t>() == 0) {
      return error_reply(400, "ensemble_size must be a positive integer");
    }
    options.ensemble_size = it->get<std::size_t>();
  }

  ExtractionResult result;
  try {
    result = run_pipeline(question, *corpus_, *backend_, options);
  } catch (const BackendError& e) {
    return error_reply(502, e.what(), {{"kind", to_string(e.code())}, {"status", e.status()}});
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::UnrecognizedTopic:
        return error_reply(422, e.what(),
                           {{"raw_response", e.detail()}, {"topics", corpus_->topics()}});
      case ErrorCode::PipelineExhausted:
        return error_reply(502, e.what(), {{"kind", to_string(e.code())}});
      default:
        return error_reply(500, e.what(), {{"kind", to_string(e.code())}});
    }
  }

  const Guideline& guideline = corpus_->at(result.topic.topic_id);
  Exchange exchange;
  exchange.question = question;
  exchange.answer = assemble_answer(guideline, result.consolidated, question);
  exchange.topic_id = result.topic.topic_id;
  exchange.selected = result.consolidated;
  for (const auto& run : result.runs) {
    if (run.reasoning_trace) {
      exchange.reasoning_trace = run.reasoning_trace;
      break;
    }
  }
  exchange.timings = result.timings;
  exchange.timings.total_seconds =
      std::max(result.timings.total_seconds, std::chrono::duration<double>(Clock::now() - start).count());
  exchange.timestamp = utc_timestamp();

  {
    std::lock_guard lock(sessions_mutex_);
    if (!session_id) {
      session_id = new_session_id();
      sessions_[*session_id].session_id = *session_id;
    }
    sessions_[*session_id].exchanges.push_back(exchange);
  }

  auto record = to_json(exchange);
  record["session_id"] = *session_id;
  interaction_log_.append(record);

  nlohmann::json body = {{"session_id", *session_id},
                         {"answer", to_json(exchange.answer)},
                         {"rendered", render_text(exchange.answer)},
                         {"topic", exchange.topic_id},
                         {"selected_indices", record["selected_indices"]},
                         {"timings", timings_json(exchange.timings)},
                         {"backend_calls", result.backend_calls}};
  if (exchange.reasoning_trace) body["reasoning_trace"] = *exchange.reasoning_trace;
  return {200, std::move(body)};
}

Reply Service::feedback(const nlohmann::json& request) {
  if (!request.is_object()) return error_reply(400, "request body must be a JSON object");
  const auto sid = request.find("session_id");
  if (sid == request.end() || !sid->is_string()) return error_reply(400, "session_id must be a string");
  const auto qid = request.find("question_id");
  if (qid == request.end() || !qid->is_string() || qid->get<std::string>().empty()) {
    return error_reply(400, "question_id must be a non-empty string");
  }
  AnnotationRecord record;
  try {
    record = annotation_from_json(request);
  } catch (const Error& e) {
    return error_reply(400, e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_reply(400, std::string("invalid feedback: ") + e.what());
  }
  auto logged = to_json(record);
  logged["session_id"] = sid->get<std::string>();
  annotation_log_.append(logged);
  return {201, logged};
}

Reply Service::session(std::string_view session_id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(std::string(session_id));
  if (it == sessions_.end()) return error_reply(404, "unknown session " + std::string(session_id));
  nlohmann::json exchanges = nlohmann::json::array();
  for (const auto& e : it->second.exchanges) exchanges.push_back(to_json(e));
  return {200, {{"session_id", it->second.session_id}, {"exchanges", std::move(exchanges)}}};
}

Reply Service::health() {
  const bool loaded = corpus_ && !corpus_->empty();
  bool reachable = false;
  try {
    reachable = backend_ && backend_->probe();
  } catch (const std::exception&) {
    reachable = false;
  }
  return {200, {{"status", loaded ? "ok" : "degraded"}, {"corpus_loaded", loaded}, {"backend_reachable", reachable}}};
}

Reply Service::handle(std::string_view method, std::string_view path, std::string_view body) {
  auto parse_body = [&](nlohmann::json& out) {
    try {
      out = nlohmann::json::parse(body.empty() ? std::string_view("{}") : body);
      return true;
    } catch (const nlohmann::json::exception&) {
      return false;
    }
  };
  const bool get = method == "GET";
  const bool post = method == "POST";
  if (path == "/guidelines") return get ? guidelines() : error_reply(405, "method not allowed");
  if (path == "/health") return get ? health() : error_reply(405, "method not allowed");
  if (path == "/ask" || path == "/feedback") {
    if (!post) return error_reply(405, "method not allowed");
    nlohmann::json request;
    if (!parse_body(request)) return error_reply(400, "request body is not valid JSON");
    return path == "/ask" ? ask(request) : feedback(request);
  }
  constexpr std::string_view kSessions = "/sessions/";
  if (path.starts_with(kSessions) && path.size() > kSessions.size()) {
    return get ? session(path.substr(kSessions.size())) : error_reply(405, "method not allowed");
  }
  return error_reply(404, "not found");
}

HttpServer::HttpServer(Service& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const Reply reply = service_.handle(req.method, req.path, req.body);
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  server_->Get(".*", route);
  server_->Post(".*", route);
  server_->Put(".*", route);
  server_->Delete(".*", route);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::InvalidConfig, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void HttpServer::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) {
    throw Error(ErrorCode::InvalidConfig, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace clearline
