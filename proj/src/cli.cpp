#include "clearline/cli.hpp"

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "clearline/answer.hpp"
#include "clearline/backend.hpp"
#include "clearline/corpus.hpp"
#include "clearline/error.hpp"
#include "clearline/eval.hpp"
#include "clearline/extraction.hpp"
#include "clearline/jsonl.hpp"
#include "clearline/service.hpp"
#include "clearline/text.hpp"

namespace clearline::cli {

namespace fs = std::filesystem;

namespace {

struct BackendFlags {
  std::string url;
  std::string script;
  std::string model;
  int max_retries = 2;
  double timeout = 120.0;
};

void add_backend_flags(CLI::App* cmd, BackendFlags& flags) {
  auto* url = cmd->add_option("--backend", flags.url, "OpenAI-compatible base URL");
  auto* script = cmd->add_option("--script", flags.script, "JSON array of scripted responses");
  url->excludes(script);
  cmd->add_option("--model", flags.model, "model name sent to the backend");
  cmd->add_option("--backend-retries", flags.max_retries, "transport retries per request")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--timeout", flags.timeout, "request timeout, seconds")->check(CLI::PositiveNumber);
}

std::shared_ptr<ChatBackend> make_backend(const BackendFlags& flags) {
  if (!flags.script.empty()) return std::make_shared<ScriptedBackend>(load_script(flags.script));
  BackendConfig config;
  if (!flags.url.empty()) config.base_url = flags.url;
  if (!flags.model.empty()) config.model_name = flags.model;
  config.max_retries = flags.max_retries;
  config.request_timeout = std::chrono::duration<double>(flags.timeout);
  config.apply_environment(!flags.url.empty());
  return std::make_shared<HttpBackend>(config);
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const BackendError*>(&e) != nullptr) return kBackendFailure;
  switch (e.code()) {
    case ErrorCode::UnrecognizedTopic: return kUnrecognizedTopic;
    case ErrorCode::PipelineExhausted: return kBackendFailure;
    default: return kParseOrConfig;
  }
}

std::string join_indices(const LineIndexSet& s) {
  std::string out;
  for (auto i : s) {
    if (!out.empty()) out += ' ';
    out += std::to_string(i);
  }
  return out;
}

fs::path markdown_path_for(const fs::path& json_path) {
  fs::path p = json_path;
  p.replace_extension(".md");
  return p;
}

// --- ingest -----------------------------------------------------------------

struct IngestArgs {
  std::string source;
  std::string out;
};

int do_ingest(const IngestArgs& args, std::ostream& out, std::ostream& err) {
  const fs::path dir(args.source);
  const fs::path topics_file = dir / "topics.json";
  std::vector<std::pair<std::string, std::string>> entries;
  try {
    // Either a bare array or {"topics": [...]}; items are ids or {"topic", "title"}.
    const auto j = nlohmann::json::parse(read_file(topics_file));
    const auto& list = j.is_object() ? j.at("topics") : j;
    for (const auto& item : list) {
      if (item.is_string()) {
        entries.emplace_back(item.get<std::string>(), item.get<std::string>());
      } else {
        const auto topic = item.at("topic").get<std::string>();
        entries.emplace_back(topic, item.value("title", topic));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    err << topics_file.string() << ": " << e.what() << "\n";
    return kParseOrConfig;
  }
  if (entries.empty()) {
    err << topics_file.string() << ": no topics listed\n";
    return kParseOrConfig;
  }

  std::vector<Guideline> guidelines;
  for (const auto& [topic, title] : entries) {
    const fs::path file = dir / (topic + ".txt");
    try {
      guidelines.push_back(parse_guideline_source(read_file(file), topic, title));
    } catch (const ParseError& e) {
      err << file.string() << ":" << e.line() << ": " << to_string(e.code()) << ": " << e.what() << "\n";
      return kParseOrConfig;
    }
  }
  const Corpus corpus(std::move(guidelines));
  save_corpus(corpus, args.out);

  const auto stats = compute_stats(corpus);
  out << "topic\tlines\twords\n";
  for (const auto& [topic, counts] : stats.per_guideline) {
    out << topic << "\t" << counts.lines << "\t" << counts.words << "\n";
  }
  out << "mean\t" << text::format_fixed(stats.line_count_mean, 2) << "\t"
      << text::format_fixed(stats.word_count_mean, 2) << "\n";
  return kOk;
}

// --- ask --------------------------------------------------------------------

struct AskArgs {
  std::string corpus;
  std::string question;
  std::size_t ensemble = 1;
  std::size_t retries = 1;
  std::string topic;
  std::string shots;
  BackendFlags backend;
};

int do_ask(const AskArgs& args, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_corpus(args.corpus);
  const auto backend = make_backend(args.backend);
  ShotStore shots;
  PipelineOptions options;
  options.ensemble_size = args.ensemble;
  options.max_retries_per_step = args.retries;
  if (!args.topic.empty()) options.topic_override = args.topic;
  if (!args.shots.empty()) {
    shots = load_shots(args.shots);
    options.shots = &shots;
  }

  const auto result = run_pipeline(args.question, corpus, *backend, options);
  const auto answer = assemble_answer(corpus.at(result.topic.topic_id), result.consolidated, args.question);
  out << render_text(answer) << "\n";

  err << "topic: " << result.topic.topic_id << "\n";
  err << "selected: " << join_indices(result.consolidated) << "\n";
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    if (result.runs[i].reasoning_trace) {
      err << "reasoning (run " << i + 1 << "):\n" << text::trim(*result.runs[i].reasoning_trace) << "\n";
    }
  }
  err << "timings: topic=" << text::format_fixed(result.timings.topic_seconds, 2)
      << "s line=" << text::format_fixed(result.timings.line_seconds, 2)
      << "s total=" << text::format_fixed(result.timings.total_seconds, 2) << "s\n";
  return kOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string corpus;
  std::string gold;
  std::size_t ensemble = 5;
  std::size_t retries = 1;
  std::string out;
  std::string markdown;
  std::string shots;
  BackendFlags backend;
};

int do_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_corpus(args.corpus);
  const auto gold = read_jsonl_as<GoldRecord>(args.gold, gold_from_json);
  for (const auto& g : gold) {
    const Guideline* guideline = corpus.find(g.topic_id);
    if (guideline == nullptr) {
      err << args.gold << ": question " << g.question_id << " names unknown topic '" << g.topic_id << "'\n";
      return kParseOrConfig;
    }
    if (*g.gold_indices.rbegin() >= guideline->size()) {
      err << args.gold << ": question " << g.question_id << " has gold index outside '"
          << g.topic_id << "'\n";
      return kParseOrConfig;
    }
  }
  if (gold.empty()) {
    err << args.gold << ": no gold records\n";
    return kParseOrConfig;
  }

  const auto backend = make_backend(args.backend);
  ShotStore shots;
  PipelineOptions options;
  options.ensemble_size = args.ensemble;
  options.max_retries_per_step = args.retries;
  if (!args.shots.empty()) {
    shots = load_shots(args.shots);
    options.shots = &shots;
  }

  EvalReport report;
  for (const auto& g : gold) {
    QuestionOutcome q{g.question_id, corpus.at(g.topic_id).topic_id(), {}, {}, g.gold_indices, {}, {}};
    try {
      const auto result = run_pipeline(g.question, corpus, *backend, options);
      q.predicted_topic = result.topic.topic_id;
      if (canonical_topic(result.topic.topic_id) == canonical_topic(g.topic_id)) {
        q.selected = result.consolidated;
      } else {
        q.error = "topic mismatch";
      }
      q.metrics = score_selection(q.selected, q.gold);
    } catch (const Error& e) {
      q.error = std::string(to_string(e.code())) + ": " + e.what();
      q.metrics = MetricRow{};
      q.metrics.failed = true;
      q.metrics.empty_selection = true;
      err << "question " << g.question_id << " failed: " << q.error << "\n";
    }
    report.questions.push_back(std::move(q));
  }

  std::vector<std::pair<std::string, std::vector<MetricRow>>> rows;
  for (const auto& topic : corpus.topics()) {
    std::vector<MetricRow> topic_rows;
    for (const auto& q : report.questions) {
      if (q.topic_id == topic) topic_rows.push_back(q.metrics);
    }
    if (!topic_rows.empty()) rows.emplace_back(topic, std::move(topic_rows));
  }
  report.metrics = aggregate_metrics(rows);

  const std::string markdown = emit_report(report, ReportFormat::markdown);
  if (!args.out.empty()) {
    write_file(args.out, emit_report(report, ReportFormat::json));
    write_file(args.markdown.empty() ? markdown_path_for(args.out) : fs::path(args.markdown),
               markdown + "\n");
  }
  out << markdown << "\n";
  return kOk;
}

// --- report -----------------------------------------------------------------

struct ReportArgs {
  std::string annotations;
  std::string timings;
  std::string counts;
  std::string out;
};

int do_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
  if (args.annotations.empty() && args.timings.empty()) {
    err << "report: give --annotations and/or --timings\n";
    return kUsage;
  }
  EvalReport report;
  if (!args.timings.empty()) {
    if (args.counts.empty()) {
      err << "report: --counts is required with --timings (response-weighted total)\n";
      return kParseOrConfig;
    }
    const auto records = read_jsonl_as<TimingRecord>(args.timings, timing_from_json);
    std::map<std::string, std::size_t> counts;
    try {
      counts = nlohmann::json::parse(read_file(args.counts)).get<std::map<std::string, std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      err << args.counts << ": " << e.what() << "\n";
      return kParseOrConfig;
    }
    report.timing.push_back(aggregate_timing(records, counts, TimingMode::unweighted_topic_mean));
    report.timing.push_back(aggregate_timing(records, counts, TimingMode::response_weighted_mean));
  }
  if (!args.annotations.empty()) {
    report.tallies =
        tally_annotations(read_jsonl_as<AnnotationRecord>(args.annotations, annotation_from_json));
  }
  const std::string markdown = emit_report(report, ReportFormat::markdown);
  if (!args.out.empty()) {
    write_file(args.out, emit_report(report, ReportFormat::json));
    write_file(markdown_path_for(args.out), markdown + "\n");
  }
  out << markdown << "\n";
  return kOk;
}

// --- serve ------------------------------------------------------------------

struct ServeArgs {
  std::string config;
  std::string corpus;
  std::string bind;
  std::string script;
};

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int do_serve(const ServeArgs& args, std::ostream& out, std::ostream&) {
  ServiceConfig config;
  if (!args.config.empty()) {
    config = load_service_config(args.config);
  } else {
    apply_environment(config);
  }
  if (!args.corpus.empty()) config.corpus_path = args.corpus;
  if (!args.bind.empty()) config.bind_address = args.bind;

  std::shared_ptr<const Corpus> corpus;
  if (!config.corpus_path.empty()) corpus = std::make_shared<const Corpus>(load_corpus(config.corpus_path));

  std::shared_ptr<ChatBackend> backend;
  if (!args.script.empty()) {
    backend = std::make_shared<ScriptedBackend>(load_script(args.script));
  } else {
    backend = std::make_shared<HttpBackend>(config.backend);
  }

  const auto colon = config.bind_address.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidConfig, "bind_address must be host:port");
  const std::string host = config.bind_address.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(config.bind_address.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "bad port in bind_address '" + config.bind_address + "'");
  }

  Service service(corpus, backend, config);
  HttpServer server(service);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  out << "serving on " << host << ":" << port << std::endl;
  server.run(host, port);
  g_server = nullptr;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Extraction-grounded clinical guideline Q&A", "clearline"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "parse guideline sources into a corpus file");
  ingest_cmd->add_option("--source", ingest.source, "directory with topics.json and {topic}.txt")->required();
  ingest_cmd->add_option("--out", ingest.out, "corpus JSON output")->required();

  AskArgs ask;
  auto* ask_cmd = app.add_subcommand("ask", "answer one question");
  ask_cmd->add_option("--corpus", ask.corpus)->required();
  ask_cmd->add_option("--question", ask.question)->required();
  ask_cmd->add_option("--ensemble", ask.ensemble, "line-identification runs")->check(CLI::PositiveNumber);
  ask_cmd->add_option("--retries", ask.retries, "retries per malformed line response");
  ask_cmd->add_option("--topic", ask.topic, "skip topic identification and use this topic");
  ask_cmd->add_option("--shots", ask.shots, "few-shot examples JSON");
  add_backend_flags(ask_cmd, ask.backend);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "score the pipeline against gold line sets");
  eval_cmd->add_option("--corpus", eval.corpus)->required();
  eval_cmd->add_option("--gold", eval.gold, "gold records, JSON Lines")->required();
  eval_cmd->add_option("--ensemble", eval.ensemble)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--retries", eval.retries);
  eval_cmd->add_option("--out", eval.out, "report JSON path (markdown written alongside)");
  eval_cmd->add_option("--markdown", eval.markdown, "markdown report path");
  eval_cmd->add_option("--shots", eval.shots, "few-shot examples JSON");
  add_backend_flags(eval_cmd, eval.backend);

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "timing and annotation summaries");
  report_cmd->add_option("--annotations", report.annotations, "annotation records, JSON Lines");
  report_cmd->add_option("--timings", report.timings, "timing records, JSON Lines");
  report_cmd->add_option("--counts", report.counts, "JSON object topic -> response count");
  report_cmd->add_option("--out", report.out, "report JSON path (markdown written alongside)");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  serve_cmd->add_option("--config", serve.config, "key = value configuration file");
  serve_cmd->add_option("--corpus", serve.corpus);
  serve_cmd->add_option("--bind", serve.bind, "host:port");
  serve_cmd->add_option("--script", serve.script, "serve from a scripted backend");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    if (*ingest_cmd) return do_ingest(ingest, out, err);
    if (*ask_cmd) return do_ask(ask, out, err);
    if (*eval_cmd) return do_eval(eval, out, err);
    if (*report_cmd) return do_report(report, out, err);
    if (*serve_cmd) return do_serve(serve, out, err);
  } catch (const ParseError& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kParseOrConfig;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kUsage;
}

}  // namespace clearline::cli
