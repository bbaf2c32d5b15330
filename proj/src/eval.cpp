#include "clearline/eval.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "clearline/corpus.hpp"
#include "clearline/error.hpp"
#include "clearline/text.hpp"

namespace clearline {

namespace {

constexpr std::array<std::string_view, 2> kTaskKinds{"topic_based", "scenario_based"};
constexpr std::array<std::string_view, 3> kRelevance{"very_relevant", "relevant", "irrelevant"};
constexpr std::array<std::string_view, 5> kCompleteness{
    "satisfactory", "minor_omission", "major_omission", "minor_addition", "major_addition"};
constexpr std::array<std::string_view, 3> kReasoning{"very_good", "minor_flaw", "major_flaw"};
constexpr std::array<std::string_view, 3> kCohorts{"topic_based", "scenario_based", "combined"};

template <typename Enum, std::size_t N>
Enum enum_from(std::string_view s, const std::array<std::string_view, N>& names,
               std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  throw Error(ErrorCode::InvalidRecord,
              "invalid " + std::string(what) + " category '" + std::string(s) + "'");
}

std::size_t intersection_size(const LineIndexSet& a, const LineIndexSet& b) {
  std::size_t n = 0;
  for (auto v : a) n += b.count(v);
  return n;
}

}  // namespace

std::string_view to_string(TaskKind v) { return kTaskKinds[static_cast<std::size_t>(v)]; }
std::string_view to_string(Relevance v) { return kRelevance[static_cast<std::size_t>(v)]; }
std::string_view to_string(Completeness v) { return kCompleteness[static_cast<std::size_t>(v)]; }
std::string_view to_string(Reasoning v) { return kReasoning[static_cast<std::size_t>(v)]; }

TaskKind task_kind_from_string(std::string_view s) {
  return enum_from<TaskKind>(s, kTaskKinds, "task kind");
}
Relevance relevance_from_string(std::string_view s) {
  return enum_from<Relevance>(s, kRelevance, "relevance");
}
Completeness completeness_from_string(std::string_view s) {
  if (s == "just_right") return Completeness::satisfactory;
  return enum_from<Completeness>(s, kCompleteness, "completeness");
}
Reasoning reasoning_from_string(std::string_view s) {
  return enum_from<Reasoning>(s, kReasoning, "reasoning");
}

std::string_view to_string(TimingMode m) {
  return m == TimingMode::unweighted_topic_mean ? "unweighted_topic_mean" : "response_weighted_mean";
}

double precision(const LineIndexSet& selected, const LineIndexSet& gold) {
  if (selected.empty()) return 0.0;
  return static_cast<double>(intersection_size(selected, gold)) /
         static_cast<double>(selected.size());
}

double recall(const LineIndexSet& selected, const LineIndexSet& gold) {
  if (gold.empty()) throw Error(ErrorCode::InvalidRecord, "gold set is empty");
  return static_cast<double>(intersection_size(selected, gold)) / static_cast<double>(gold.size());
}

double f_score(double p, double r) {
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

MetricRow score_selection(const LineIndexSet& selected, const LineIndexSet& gold) {
  MetricRow row;
  row.precision = precision(selected, gold);
  row.recall = recall(selected, gold);
  row.f_score = f_score(row.precision, row.recall);
  row.empty_selection = selected.empty();
  return row;
}

MetricsSummary aggregate_metrics(
    const std::vector<std::pair<std::string, std::vector<MetricRow>>>& rows) {
  if (rows.empty()) throw Error(ErrorCode::InvalidRecord, "no topics to aggregate");
  MetricsSummary summary;
  for (const auto& [topic, questions] : rows) {
    if (questions.empty()) {
      throw Error(ErrorCode::InvalidRecord, "topic '" + topic + "' has no question rows");
    }
    TopicMetrics tm{topic, {}, questions.size(), 0};
    for (const auto& q : questions) {
      tm.metrics.precision += q.precision;
      tm.metrics.recall += q.recall;
      tm.metrics.f_score += q.f_score;
      if (q.failed) ++tm.failures;
    }
    const auto n = static_cast<double>(questions.size());
    tm.metrics.precision /= n;
    tm.metrics.recall /= n;
    tm.metrics.f_score /= n;
    summary.average.precision += tm.metrics.precision;
    summary.average.recall += tm.metrics.recall;
    summary.average.f_score += tm.metrics.f_score;
    summary.per_topic.push_back(std::move(tm));
  }
  const auto topics = static_cast<double>(summary.per_topic.size());
  summary.average.precision /= topics;
  summary.average.recall /= topics;
  summary.average.f_score /= topics;
  return summary;
}

TimingSummary aggregate_timing(const std::vector<TimingRecord>& records,
                               const std::map<std::string, std::size_t>& counts, TimingMode mode) {
  if (records.empty()) throw Error(ErrorCode::InvalidRecord, "no timing records");
  TimingSummary summary;
  summary.mode = mode;
  for (const auto& r : records) {
    if (!(r.human_seconds > 0.0) || !(r.chatbot_seconds > 0.0)) {
      throw Error(ErrorCode::InvalidRecord,
                  "timing record '" + r.question_id + "' has a non-positive duration");
    }
    auto it = std::find_if(summary.per_topic.begin(), summary.per_topic.end(), [&](const auto& t) {
      return canonical_topic(t.topic_id) == canonical_topic(r.topic_id);
    });
    if (it == summary.per_topic.end()) {
      summary.per_topic.push_back({r.topic_id, 0.0, 0.0, 0});
      it = std::prev(summary.per_topic.end());
    }
    it->human_mean += r.human_seconds;
    it->chatbot_mean += r.chatbot_seconds;
    ++it->records;
  }
  for (auto& t : summary.per_topic) {
    t.human_mean /= static_cast<double>(t.records);
    t.chatbot_mean /= static_cast<double>(t.records);
  }

  if (mode == TimingMode::unweighted_topic_mean) {
    for (const auto& t : summary.per_topic) {
      summary.human_total += t.human_mean;
      summary.chatbot_total += t.chatbot_mean;
    }
    const auto n = static_cast<double>(summary.per_topic.size());
    summary.human_total /= n;
    summary.chatbot_total /= n;
    return summary;
  }

  std::map<std::string, std::size_t> canonical_counts;
  for (const auto& [topic, count] : counts) canonical_counts[canonical_topic(topic)] = count;
  double weight_sum = 0.0;
  for (const auto& t : summary.per_topic) {
    auto it = canonical_counts.find(canonical_topic(t.topic_id));
    if (it == canonical_counts.end()) {
      throw Error(ErrorCode::MissingCount, "no response count for topic '" + t.topic_id + "'");
    }
    const auto w = static_cast<double>(it->second);
    summary.human_total += w * t.human_mean;
    summary.chatbot_total += w * t.chatbot_mean;
    weight_sum += w;
  }
  if (weight_sum <= 0.0) throw Error(ErrorCode::MissingCount, "response counts sum to zero");
  summary.human_total /= weight_sum;
  summary.chatbot_total /= weight_sum;
  return summary;
}

double CategoryTally::percent(std::string_view category) const {
  for (const auto& [name, pct] : percentages) {
    if (name == category) return pct;
  }
  throw Error(ErrorCode::InvalidRecord, "unknown category '" + std::string(category) + "'");
}

std::size_t CategoryTally::count(std::string_view category) const {
  for (const auto& [name, n] : counts) {
    if (name == category) return n;
  }
  throw Error(ErrorCode::InvalidRecord, "unknown category '" + std::string(category) + "'");
}

const CohortTally* Tallies::find(std::string_view cohort) const {
  for (const auto& c : cohorts) {
    if (c.cohort == cohort) return &c;
  }
  return nullptr;
}

namespace {

template <std::size_t N>
CategoryTally make_tally(const std::array<std::string_view, N>& names,
                         const std::array<std::size_t, N>& counts) {
  CategoryTally t;
  for (auto c : counts) t.total += c;
  for (std::size_t i = 0; i < N; ++i) {
    t.counts.emplace_back(std::string(names[i]), counts[i]);
    const double pct = t.total == 0 ? 0.0
                                    : 100.0 * static_cast<double>(counts[i]) /
                                          static_cast<double>(t.total);
    t.percentages.emplace_back(std::string(names[i]), text::round_half_away(pct, 1));
  }
  return t;
}

CohortTally tally_cohort(std::string name, const std::vector<const AnnotationRecord*>& records) {
  std::array<std::size_t, 3> relevance{};
  std::array<std::size_t, 5> completeness{};
  std::array<std::size_t, 3> reasoning{};
  bool any_reasoning = false;
  for (const auto* r : records) {
    ++relevance[static_cast<std::size_t>(r->relevance)];
    ++completeness[static_cast<std::size_t>(r->completeness)];
    if (r->reasoning) {
      ++reasoning[static_cast<std::size_t>(*r->reasoning)];
      any_reasoning = true;
    }
  }
  CohortTally cohort{std::move(name), make_tally(kRelevance, relevance),
                     make_tally(kCompleteness, completeness), std::nullopt};
  if (any_reasoning) cohort.reasoning = make_tally(kReasoning, reasoning);
  return cohort;
}

}  // namespace

Tallies tally_annotations(const std::vector<AnnotationRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::InvalidRecord, "no annotation records");
  Tallies tallies;
  std::vector<const AnnotationRecord*> all;
  for (const auto kind : {TaskKind::topic_based, TaskKind::scenario_based}) {
    std::vector<const AnnotationRecord*> subset;
    for (const auto& r : records) {
      if (r.task_kind == kind) subset.push_back(&r);
    }
    if (!subset.empty()) tallies.cohorts.push_back(tally_cohort(std::string(to_string(kind)), subset));
    all.insert(all.end(), subset.begin(), subset.end());
  }
  tallies.cohorts.push_back(tally_cohort("combined", all));
  return tallies;
}

// ---------------------------------------------------------------------------
// Report serialization

namespace {

nlohmann::json metric_json(const MetricRow& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f_score", m.f_score}};
}

MetricRow metric_from(const nlohmann::json& j) {
  MetricRow m;
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f_score = j.at("f_score").get<double>();
  m.empty_selection = j.value("empty_selection", false);
  m.failed = j.value("failed", false);
  return m;
}

nlohmann::json tally_json(const CategoryTally& t) {
  nlohmann::json counts = nlohmann::json::object();
  nlohmann::json pcts = nlohmann::json::object();
  for (const auto& [name, n] : t.counts) counts[name] = n;
  for (const auto& [name, p] : t.percentages) pcts[name] = p;
  return {{"total", t.total}, {"counts", std::move(counts)}, {"percentages", std::move(pcts)}};
}

template <std::size_t N>
CategoryTally tally_from(const nlohmann::json& j, const std::array<std::string_view, N>& names) {
  CategoryTally t;
  t.total = j.at("total").get<std::size_t>();
  for (auto name : names) {
    const std::string key(name);
    t.counts.emplace_back(key, j.at("counts").at(key).get<std::size_t>());
    t.percentages.emplace_back(key, j.at("percentages").at(key).get<double>());
  }
  return t;
}

nlohmann::json indices_json(const LineIndexSet& s) { return nlohmann::json(std::vector<std::size_t>(s.begin(), s.end())); }

LineIndexSet indices_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<std::size_t>>();
  return {v.begin(), v.end()};
}

std::string md_row(const std::vector<std::string>& cells) {
  return "| " + text::join(cells, " | ") + " |\n";
}

std::string md_rule(std::size_t columns) {
  std::string out = "|";
  for (std::size_t i = 0; i < columns; ++i) out += "---|";
  return out + "\n";
}

void md_tally(std::ostringstream& out, std::string_view title, const CategoryTally& t) {
  out << md_row({std::string(title), "Count", "Percent"}) << md_rule(3);
  for (std::size_t i = 0; i < t.counts.size(); ++i) {
    out << md_row({t.counts[i].first, std::to_string(t.counts[i].second),
                   text::format_fixed(t.percentages[i].second, 1)});
  }
  out << "\n";
}

}  // namespace

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j = nlohmann::json::object();
  if (report.metrics) {
    nlohmann::json per_topic = nlohmann::json::array();
    for (const auto& t : report.metrics->per_topic) {
      auto row = metric_json(t.metrics);
      row["topic"] = t.topic_id;
      row["questions"] = t.questions;
      row["failures"] = t.failures;
      per_topic.push_back(std::move(row));
    }
    j["metrics"] = {{"per_topic", std::move(per_topic)}, {"average", metric_json(report.metrics->average)}};
  }
  if (!report.questions.empty()) {
    nlohmann::json questions = nlohmann::json::array();
    for (const auto& q : report.questions) {
      auto row = metric_json(q.metrics);
      row["question_id"] = q.question_id;
      row["topic"] = q.topic_id;
      row["predicted_topic"] = q.predicted_topic;
      row["selected"] = indices_json(q.selected);
      row["gold"] = indices_json(q.gold);
      row["empty_selection"] = q.metrics.empty_selection;
      row["failed"] = q.metrics.failed;
      row["error"] = q.error;
      questions.push_back(std::move(row));
    }
    j["questions"] = std::move(questions);
  }
  nlohmann::json timing = nlohmann::json::array();
  for (const auto& t : report.timing) {
    nlohmann::json per_topic = nlohmann::json::array();
    for (const auto& p : t.per_topic) {
      per_topic.push_back({{"topic", p.topic_id},
                           {"human_mean", p.human_mean},
                           {"chatbot_mean", p.chatbot_mean},
                           {"records", p.records}});
    }
    timing.push_back({{"mode", to_string(t.mode)},
                      {"per_topic", std::move(per_topic)},
                      {"human_total", t.human_total},
                      {"chatbot_total", t.chatbot_total}});
  }
  j["timing"] = std::move(timing);
  nlohmann::json tallies = nlohmann::json::object();
  for (const auto& c : report.tallies.cohorts) {
    nlohmann::json cohort = {{"relevance", tally_json(c.relevance)},
                             {"completeness", tally_json(c.completeness)}};
    if (c.reasoning) cohort["reasoning"] = tally_json(*c.reasoning);
    tallies[c.cohort] = std::move(cohort);
  }
  j["tallies"] = std::move(tallies);
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  try {
    EvalReport report;
    if (j.contains("metrics")) {
      MetricsSummary m;
      for (const auto& row : j.at("metrics").at("per_topic")) {
        m.per_topic.push_back({row.at("topic").get<std::string>(), metric_from(row),
                               row.at("questions").get<std::size_t>(),
                               row.at("failures").get<std::size_t>()});
      }
      m.average = metric_from(j.at("metrics").at("average"));
      report.metrics = std::move(m);
    }
    if (j.contains("questions")) {
      for (const auto& row : j.at("questions")) {
        report.questions.push_back({row.at("question_id").get<std::string>(),
                                    row.at("topic").get<std::string>(),
                                    row.at("predicted_topic").get<std::string>(),
                                    indices_from(row.at("selected")), indices_from(row.at("gold")),
                                    metric_from(row), row.at("error").get<std::string>()});
      }
    }
    for (const auto& t : j.value("timing", nlohmann::json::array())) {
      TimingSummary s;
      const auto mode = t.at("mode").get<std::string>();
      if (mode == "unweighted_topic_mean") {
        s.mode = TimingMode::unweighted_topic_mean;
      } else if (mode == "response_weighted_mean") {
        s.mode = TimingMode::response_weighted_mean;
      } else {
        throw Error(ErrorCode::InvalidRecord, "unknown timing mode '" + mode + "'");
      }
      for (const auto& p : t.at("per_topic")) {
        s.per_topic.push_back({p.at("topic").get<std::string>(), p.at("human_mean").get<double>(),
                               p.at("chatbot_mean").get<double>(),
                               p.at("records").get<std::size_t>()});
      }
      s.human_total = t.at("human_total").get<double>();
      s.chatbot_total = t.at("chatbot_total").get<double>();
      report.timing.push_back(std::move(s));
    }
    const auto tallies = j.value("tallies", nlohmann::json::object());
    for (auto name : kCohorts) {
      const std::string key(name);
      if (!tallies.contains(key)) continue;
      const auto& c = tallies.at(key);
      CohortTally cohort{key, tally_from(c.at("relevance"), kRelevance),
                         tally_from(c.at("completeness"), kCompleteness), std::nullopt};
      if (c.contains("reasoning")) cohort.reasoning = tally_from(c.at("reasoning"), kReasoning);
      report.tallies.cohorts.push_back(std::move(cohort));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidRecord, std::string("malformed report: ") + e.what());
  }
}

std::string emit_report(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::json) return to_json(report).dump(2) + "\n";

  std::ostringstream out;
  out << "# Evaluation report\n\n";
  if (report.metrics) {
    out << "## Line extraction metrics\n\n";
    out << md_row({"Topic", "Precision", "Recall", "F-score"}) << md_rule(4);
    for (const auto& t : report.metrics->per_topic) {
      out << md_row({t.topic_id, text::format_fixed(t.metrics.precision, 2),
                     text::format_fixed(t.metrics.recall, 2),
                     text::format_fixed(t.metrics.f_score, 2)});
    }
    const auto& avg = report.metrics->average;
    out << md_row({"Average", text::format_fixed(avg.precision, 2),
                   text::format_fixed(avg.recall, 2), text::format_fixed(avg.f_score, 2)});
    out << "\n";
    std::size_t failures = 0;
    for (const auto& t : report.metrics->per_topic) failures += t.failures;
    if (failures > 0) out << "Failed questions (scored as zero): " << failures << "\n\n";
  }
  for (const auto& t : report.timing) {
    out << "## Response times per question, seconds (total: " << to_string(t.mode) << ")\n\n";
    out << md_row({"Guideline", "Participant", "Chatbot"}) << md_rule(3);
    for (const auto& p : t.per_topic) {
      out << md_row({p.topic_id, text::format_fixed(p.human_mean, 2),
                     text::format_fixed(p.chatbot_mean, 2)});
    }
    out << md_row({"Total", text::format_fixed(t.human_total, 2),
                   text::format_fixed(t.chatbot_total, 2)});
    out << "\n";
  }
  if (!report.tallies.cohorts.empty()) {
    out << "## Annotation tallies\n\n";
    for (const auto& c : report.tallies.cohorts) {
      out << "### " << c.cohort << " (n=" << c.relevance.total << ")\n\n";
      md_tally(out, "Relevance", c.relevance);
      md_tally(out, "Completeness", c.completeness);
      if (c.reasoning) md_tally(out, "Reasoning", *c.reasoning);
    }
  }
  std::string s = out.str();
  while (s.size() >= 2 && s.ends_with("\n\n")) s.pop_back();
  return s;
}

nlohmann::json to_json(const GoldRecord& r) {
  return {{"question_id", r.question_id},
          {"topic", r.topic_id},
          {"question", r.question},
          {"gold_indices", indices_json(r.gold_indices)}};
}

GoldRecord gold_from_json(const nlohmann::json& j) {
  GoldRecord r{j.at("question_id").get<std::string>(), j.at("topic").get<std::string>(),
               j.at("question").get<std::string>(), indices_from(j.at("gold_indices"))};
  if (r.gold_indices.empty()) {
    throw Error(ErrorCode::InvalidRecord, "gold record '" + r.question_id + "' has no gold indices");
  }
  return r;
}

nlohmann::json to_json(const TimingRecord& r) {
  return {{"question_id", r.question_id},
          {"topic", r.topic_id},
          {"human_seconds", r.human_seconds},
          {"chatbot_seconds", r.chatbot_seconds}};
}

TimingRecord timing_from_json(const nlohmann::json& j) {
  TimingRecord r{j.at("question_id").get<std::string>(), j.at("topic").get<std::string>(),
                 j.at("human_seconds").get<double>(), j.at("chatbot_seconds").get<double>()};
  if (!(r.human_seconds > 0.0) || !(r.chatbot_seconds > 0.0)) {
    throw Error(ErrorCode::InvalidRecord, "timing record '" + r.question_id + "' has a non-positive duration");
  }
  return r;
}

nlohmann::json to_json(const AnnotationRecord& r) {
  nlohmann::json j = {{"question_id", r.question_id},
                      {"task_kind", to_string(r.task_kind)},
                      {"relevance", to_string(r.relevance)},
                      {"completeness", to_string(r.completeness)}};
  if (r.reasoning) j["reasoning"] = to_string(*r.reasoning);
  return j;
}

AnnotationRecord annotation_from_json(const nlohmann::json& j) {
  AnnotationRecord r;
  r.question_id = j.at("question_id").get<std::string>();
  r.task_kind = task_kind_from_string(j.value("task_kind", std::string("topic_based")));
  r.relevance = relevance_from_string(j.at("relevance").get<std::string>());
  r.completeness = completeness_from_string(j.at("completeness").get<std::string>());
  if (j.contains("reasoning") && !j.at("reasoning").is_null()) {
    r.reasoning = reasoning_from_string(j.at("reasoning").get<std::string>());
  }
  return r;
}

}  // namespace clearline
