#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clearline/extraction.hpp"

namespace clearline {

struct GoldRecord {
  std::string question_id;
  std::string topic_id;
  std::string question;
  LineIndexSet gold_indices;
};

struct MetricRow {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  bool empty_selection = false;
  bool failed = false;
};

struct TimingRecord {
  std::string question_id;
  std::string topic_id;
  double human_seconds = 0.0;
  double chatbot_seconds = 0.0;
};

enum class TaskKind { topic_based, scenario_based };
enum class Relevance { very_relevant, relevant, irrelevant };
enum class Completeness { satisfactory, minor_omission, major_omission, minor_addition, major_addition };
enum class Reasoning { very_good, minor_flaw, major_flaw };

struct AnnotationRecord {
  std::string question_id;
  TaskKind task_kind = TaskKind::topic_based;
  Relevance relevance = Relevance::very_relevant;
  Completeness completeness = Completeness::satisfactory;
  std::optional<Reasoning> reasoning;
};

std::string_view to_string(TaskKind v);
std::string_view to_string(Relevance v);
std::string_view to_string(Completeness v);
std::string_view to_string(Reasoning v);
// Parsers throw InvalidRecord on unknown names. "just_right" maps to satisfactory.
TaskKind task_kind_from_string(std::string_view s);
Relevance relevance_from_string(std::string_view s);
Completeness completeness_from_string(std::string_view s);
Reasoning reasoning_from_string(std::string_view s);

// |selected ∩ gold| / |selected|; 0.0 for an empty selection.
double precision(const LineIndexSet& selected, const LineIndexSet& gold);
// |selected ∩ gold| / |gold|; gold must be non-empty.
double recall(const LineIndexSet& selected, const LineIndexSet& gold);
double f_score(double p, double r);

/// P/R/F for one question; flags an empty selection.
MetricRow score_selection(const LineIndexSet& selected, const LineIndexSet& gold);

struct TopicMetrics {
  std::string topic_id;
  MetricRow metrics;
  std::size_t questions = 0;
  std::size_t failures = 0;
};

struct MetricsSummary {
  std::vector<TopicMetrics> per_topic;
  MetricRow average;
};

/// Per-topic unweighted means over questions, then unweighted mean over topics.
/// F is averaged, never recomputed from averaged P and R.
MetricsSummary aggregate_metrics(
    const std::vector<std::pair<std::string, std::vector<MetricRow>>>& rows);

enum class TimingMode { unweighted_topic_mean, response_weighted_mean };

std::string_view to_string(TimingMode m);

struct TopicTiming {
  std::string topic_id;
  double human_mean = 0.0;
  double chatbot_mean = 0.0;
  std::size_t records = 0;
};

struct TimingSummary {
  TimingMode mode = TimingMode::unweighted_topic_mean;
  std::vector<TopicTiming> per_topic;  // first-seen topic order
  double human_total = 0.0;
  double chatbot_total = 0.0;
};

/// response_weighted_mean weights each topic mean by counts[topic]; a missing
/// count raises MissingCount.
TimingSummary aggregate_timing(const std::vector<TimingRecord>& records,
                               const std::map<std::string, std::size_t>& counts, TimingMode mode);

/// Category name -> percentage (one decimal, half away from zero), plus raw counts.
struct CategoryTally {
  std::size_t total = 0;
  std::vector<std::pair<std::string, std::size_t>> counts;
  std::vector<std::pair<std::string, double>> percentages;

  [[nodiscard]] double percent(std::string_view category) const;
  [[nodiscard]] std::size_t count(std::string_view category) const;
};

struct CohortTally {
  std::string cohort;  // "topic_based", "scenario_based" or "combined"
  CategoryTally relevance;
  CategoryTally completeness;
  std::optional<CategoryTally> reasoning;  // only when some record carries one
};

struct Tallies {
  std::vector<CohortTally> cohorts;  // cohorts without records are omitted

  [[nodiscard]] const CohortTally* find(std::string_view cohort) const;
};

Tallies tally_annotations(const std::vector<AnnotationRecord>& records);

/// One evaluated gold question.
struct QuestionOutcome {
  std::string question_id;
  std::string topic_id;         // gold topic
  std::string predicted_topic;  // empty when the pipeline failed before the topic step finished
  LineIndexSet selected;
  LineIndexSet gold;
  MetricRow metrics;
  std::string error;            // non-empty for failed rows
};

struct EvalReport {
  std::optional<MetricsSummary> metrics;
  std::vector<QuestionOutcome> questions;
  std::vector<TimingSummary> timing;  // one entry per computed mode
  Tallies tallies;
};

enum class ReportFormat { json, markdown };

std::string emit_report(const EvalReport& report, ReportFormat format);

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// Record (de)serialization for the JSON Lines files.
nlohmann::json to_json(const GoldRecord& r);
GoldRecord gold_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TimingRecord& r);
TimingRecord timing_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnnotationRecord& r);
AnnotationRecord annotation_from_json(const nlohmann::json& j);

}  // namespace clearline
