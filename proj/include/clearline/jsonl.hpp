#pragma once

#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace clearline {

/// Parses a JSON Lines file; blank lines are skipped. A malformed line raises
/// ParseError(InvalidRecord) carrying its 1-based line number.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Parses every non-blank line and applies `convert`; conversion failures are
/// re-raised as ParseError(InvalidRecord) with the line number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&)>& visit);

template <typename T, typename Convert>
std::vector<T> read_jsonl_as(const std::filesystem::path& path, Convert convert) {
  std::vector<T> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) { out.push_back(convert(j)); });
  return out;
}

/// Append-only JSON Lines writer; appends are serialized and flushed per record.
class JsonlAppender {
 public:
  explicit JsonlAppender(std::filesystem::path path);

  void append(const nlohmann::json& record);
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace clearline
