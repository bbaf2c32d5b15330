#include "clearline/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "clearline/error.hpp"
#include "clearline/text.hpp"

namespace clearline {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot write " + path.string());
  out << content;
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&)>& visit) {
  const std::string content = read_file(path);
  std::size_t line_no = 0;
  for (std::string_view line : text::split_lines(content)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      visit(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(ErrorCode::InvalidRecord,
                       path.string() + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(ErrorCode::InvalidRecord,
                       path.string() + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::vector<nlohmann::json> out;
  for_each_jsonl(path, [&](const nlohmann::json& j) { out.push_back(j); });
  return out;
}

JsonlAppender::JsonlAppender(std::filesystem::path path) : path_(std::move(path)) {}

void JsonlAppender::append(const nlohmann::json& record) {
  const std::string line = record.dump() + "\n";
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::InvalidConfig, "cannot append to " + path_.string());
  out << line;
  out.flush();
}

}  // namespace clearline
