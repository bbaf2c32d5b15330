#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "clearline/backend.hpp"
#include "clearline/corpus.hpp"
#include "clearline/prompting.hpp"

namespace clearline {

/// Sorted, duplicate-free line indices.
using LineIndexSet = std::set<std::size_t>;

struct TopicDecision {
  std::string topic_id;  // corpus spelling
  std::string raw_response;
};

struct LineSelection {
  LineIndexSet indices;
  std::string raw_response;
  std::optional<std::string> reasoning_trace;
};

struct StepTimings {
  double topic_seconds = 0.0;
  double line_seconds = 0.0;
  double total_seconds = 0.0;
};

struct ExtractionResult {
  TopicDecision topic;
  std::vector<LineSelection> runs;
  LineIndexSet consolidated;
  StepTimings timings;
  /// Line responses rejected as malformed or out of range.
  std::size_t rejected_responses = 0;
  std::size_t backend_calls = 0;
};

inline constexpr std::string_view kThinkClose = "</think>";

struct ReasoningSplit {
  std::optional<std::string> trace;
  std::string payload;
};

TopicDecision parse_topic_response(std::string_view raw, const std::vector<std::string>& topics);

/// Splits at the first occurrence of `close_delimiter`.
ReasoningSplit split_reasoning(std::string_view raw, std::string_view close_delimiter = kThinkClose);

/// Accepts whitespace/comma separated base-10 indices, optionally wrapped in
/// one pair of square brackets. Any other token rejects the whole response.
LineIndexSet parse_line_response(std::string_view payload, std::size_t line_count);

/// Set union of all runs.
LineIndexSet consolidate(const std::vector<LineSelection>& runs);

struct PipelineOptions {
  std::size_t ensemble_size = 1;
  std::size_t max_retries_per_step = 1;
  /// Skips the topic step when set; must name a corpus topic.
  std::optional<std::string> topic_override;
  /// Issue the ensemble's line requests concurrently.
  bool parallel_runs = false;
  const ShotStore* shots = nullptr;  // default_shots() when null
};

ExtractionResult run_pipeline(std::string_view question, const Corpus& corpus,
                              ChatBackend& backend, const PipelineOptions& options = {});

}  // namespace clearline
