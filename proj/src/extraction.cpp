#include "clearline/extraction.hpp"

#include <charconv>
#include <chrono>
#include <future>

#include "clearline/error.hpp"
#include "clearline/text.hpp"

namespace clearline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string canonical_response(std::string_view raw) {
  auto s = text::trim(raw);
  if (!s.empty() && (s.back() == '.' || s.back() == '!')) s.remove_suffix(1);
  return canonical_topic(s);
}

bool is_separator(char c) {
  return c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

CompletionResult call_step(ChatBackend& backend, const PromptBundle& bundle, std::string_view step) {
  try {
    return backend.complete(bundle.messages);
  } catch (const BackendError& e) {
    throw BackendError(e.code(), std::string(step) + ": " + e.what(), e.status());
  }
}

struct RunOutcome {
  std::optional<LineSelection> selection;
  std::size_t rejected = 0;
  std::size_t calls = 0;
};

RunOutcome run_line_step(ChatBackend& backend, const PromptBundle& bundle, std::size_t line_count,
                         std::size_t max_retries) {
  RunOutcome outcome;
  for (std::size_t attempt = 0; attempt <= max_retries; ++attempt) {
    ++outcome.calls;
    auto completion = call_step(backend, bundle, "line identification");
    auto split = split_reasoning(completion.text);
    LineSelection selection{{}, std::move(completion.text), std::move(split.trace)};
    try {
      selection.indices = parse_line_response(split.payload, line_count);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::EmptySelection) {
        outcome.selection = std::move(selection);
        return outcome;
      }
      if (e.code() == ErrorCode::MalformedToken || e.code() == ErrorCode::OutOfRange) {
        ++outcome.rejected;
        continue;
      }
      throw;
    }
    outcome.selection = std::move(selection);
    return outcome;
  }
  return outcome;
}

}  // namespace

TopicDecision parse_topic_response(std::string_view raw, const std::vector<std::string>& topics) {
  if (topics.empty()) throw Error(ErrorCode::EmptyTopicList, "topic list is empty");
  const std::string wanted = canonical_response(raw);
  const std::string* match = nullptr;
  for (const auto& topic : topics) {
    if (canonical_topic(topic) != wanted) continue;
    if (match != nullptr) {
      throw Error(ErrorCode::AmbiguousTopic, "response matches several topics", std::string(raw));
    }
    match = &topic;
  }
  if (match == nullptr) {
    throw Error(ErrorCode::UnrecognizedTopic,
                "model response '" + std::string(text::trim(raw)) + "' is not a listed topic",
                std::string(raw));
  }
  return {*match, std::string(raw)};
}

ReasoningSplit split_reasoning(std::string_view raw, std::string_view close_delimiter) {
  const auto pos = close_delimiter.empty() ? std::string_view::npos : raw.find(close_delimiter);
  if (pos == std::string_view::npos) return {std::nullopt, std::string(raw)};
  return {std::string(raw.substr(0, pos)), std::string(raw.substr(pos + close_delimiter.size()))};
}

LineIndexSet parse_line_response(std::string_view payload, std::size_t line_count) {
  if (line_count == 0) throw Error(ErrorCode::InvalidCorpus, "line count must be positive");
  auto s = text::trim(payload);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);

  LineIndexSet out;
  bool any = false;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_separator(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_separator(s[i])) ++i;
    if (i == start) continue;
    const auto token = s.substr(start, i - start);
    for (char c : token) {
      if (c < '0' || c > '9') {
        throw Error(ErrorCode::MalformedToken, "'" + std::string(token) + "' is not a line number",
                    std::string(token));
      }
    }
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec == std::errc::result_out_of_range || value >= line_count) {
      throw Error(ErrorCode::OutOfRange,
                  "line " + std::string(token) + " is outside 0.." + std::to_string(line_count - 1),
                  std::string(token));
    }
    out.insert(value);
    any = true;
  }
  if (!any) throw Error(ErrorCode::EmptySelection, "response selects no lines");
  return out;
}

LineIndexSet consolidate(const std::vector<LineSelection>& runs) {
  LineIndexSet out;
  for (const auto& run : runs) out.insert(run.indices.begin(), run.indices.end());
  return out;
}

ExtractionResult run_pipeline(std::string_view question, const Corpus& corpus,
                              ChatBackend& backend, const PipelineOptions& options) {
  const auto total_start = Clock::now();
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no guidelines");
  if (options.ensemble_size == 0) throw Error(ErrorCode::InvalidConfig, "ensemble size must be >= 1");
  if (text::trim(question).empty()) throw Error(ErrorCode::EmptyQuestion, "question is empty");
  const ShotStore& shots = options.shots != nullptr ? *options.shots : default_shots();

  ExtractionResult result;

  const auto topic_start = Clock::now();
  if (options.topic_override) {
    const Guideline* g = corpus.find(*options.topic_override);
    if (g == nullptr) {
      throw Error(ErrorCode::UnrecognizedTopic,
                  "topic override '" + *options.topic_override + "' is not a corpus topic",
                  *options.topic_override);
    }
    result.topic = {g->topic_id(), {}};
  } else {
    const auto bundle = build_topic_prompt(question, corpus.topics(), shots.topic);
    ++result.backend_calls;
    auto completion = call_step(backend, bundle, "topic identification");
    const auto split = split_reasoning(completion.text);
    result.topic = parse_topic_response(split.payload, corpus.topics());
    result.topic.raw_response = std::move(completion.text);
  }
  result.timings.topic_seconds = seconds_since(topic_start);

  const Guideline& guideline = corpus.at(result.topic.topic_id);
  const auto bundle = build_line_prompt(question, render_numbered_context(guideline), shots.line);

  const auto line_start = Clock::now();
  std::vector<RunOutcome> outcomes;
  outcomes.reserve(options.ensemble_size);
  if (options.parallel_runs && options.ensemble_size > 1) {
    std::vector<std::future<RunOutcome>> futures;
    for (std::size_t r = 0; r < options.ensemble_size; ++r) {
      futures.push_back(std::async(std::launch::async, [&] {
        return run_line_step(backend, bundle, guideline.size(), options.max_retries_per_step);
      }));
    }
    for (auto& f : futures) outcomes.push_back(f.get());
  } else {
    for (std::size_t r = 0; r < options.ensemble_size; ++r) {
      outcomes.push_back(
          run_line_step(backend, bundle, guideline.size(), options.max_retries_per_step));
    }
  }
  result.timings.line_seconds = seconds_since(line_start);

  for (auto& outcome : outcomes) {
    result.rejected_responses += outcome.rejected;
    result.backend_calls += outcome.calls;
    if (outcome.selection) result.runs.push_back(std::move(*outcome.selection));
  }
  if (result.runs.empty()) {
    throw Error(ErrorCode::PipelineExhausted,
                "line identification produced no valid response after " +
                    std::to_string(options.max_retries_per_step) + " retries per run");
  }
  result.consolidated = consolidate(result.runs);
  result.timings.total_seconds = seconds_since(total_start);
  return result;
}

}  // namespace clearline
