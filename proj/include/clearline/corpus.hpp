#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace clearline {

/// One selectable guideline statement. `index` is its 0-based position in the
/// owning guideline; `section` is the heading in force when it was read.
struct GuidelineLine {
  std::size_t index = 0;
  std::string section;
  std::string body;

  friend bool operator==(const GuidelineLine&, const GuidelineLine&) = default;
};

/// A line-indexed guideline. Construct through parse_guideline_source or
/// Guideline::create; both enforce contiguous 0..N-1 indices, non-empty
/// sections and bodies, and at least one line.
class Guideline {
 public:
  static Guideline create(std::string topic_id, std::string title,
                          std::vector<GuidelineLine> lines);

  [[nodiscard]] const std::string& topic_id() const noexcept { return topic_id_; }
  [[nodiscard]] const std::string& title() const noexcept { return title_; }
  [[nodiscard]] const std::vector<GuidelineLine>& lines() const noexcept { return lines_; }
  [[nodiscard]] std::size_t size() const noexcept { return lines_.size(); }
  [[nodiscard]] const GuidelineLine& operator[](std::size_t i) const { return lines_.at(i); }

  friend bool operator==(const Guideline&, const Guideline&) = default;

 private:
  Guideline(std::string topic_id, std::string title, std::vector<GuidelineLine> lines)
      : topic_id_(std::move(topic_id)), title_(std::move(title)), lines_(std::move(lines)) {}

  std::string topic_id_;
  std::string title_;
  std::vector<GuidelineLine> lines_;
};

/// Trimmed, ASCII case-folded form used for every topic comparison.
std::string canonical_topic(std::string_view topic);

/// Immutable collection of guidelines keyed by topic, in a fixed topic order.
/// Shared read-only across request handlers.
class Corpus {
 public:
  Corpus() = default;
  /// Throws InvalidCorpus on duplicate (canonical) topic ids.
  explicit Corpus(std::vector<Guideline> guidelines);

  [[nodiscard]] const std::vector<std::string>& topics() const noexcept { return topics_; }
  [[nodiscard]] std::size_t size() const noexcept { return guidelines_.size(); }
  [[nodiscard]] bool empty() const noexcept { return guidelines_.empty(); }

  /// Canonical lookup; nullptr when absent.
  [[nodiscard]] const Guideline* find(std::string_view topic_id) const;
  /// Canonical lookup; throws InvalidCorpus when absent.
  [[nodiscard]] const Guideline& at(std::string_view topic_id) const;

  /// Guidelines in topic order.
  [[nodiscard]] const std::vector<Guideline>& guidelines() const noexcept { return guidelines_; }

 private:
  std::vector<std::string> topics_;
  std::vector<Guideline> guidelines_;
  std::map<std::string, std::size_t> by_canonical_;
};

struct GuidelineCounts {
  std::size_t lines = 0;
  std::size_t words = 0;
};

struct CorpusStats {
  double line_count_mean = 0.0;
  double word_count_mean = 0.0;
  /// In corpus topic order.
  std::vector<std::pair<std::string, GuidelineCounts>> per_guideline;
};

/// Parses the guideline source format: "# " lines set the current section,
/// other non-blank lines become indexed content lines.
Guideline parse_guideline_source(std::string_view source, std::string topic_id,
                                 std::string title);

/// "{index}: {section}: {body}" per line, newline separated, no trailing newline.
std::string render_numbered_context(const Guideline& g);

std::size_t count_words(std::string_view body);

CorpusStats compute_stats(const Corpus& c);

nlohmann::json to_json(const Corpus& c);
Corpus corpus_from_json(const nlohmann::json& j);

Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& c, const std::string& path);

}  // namespace clearline
