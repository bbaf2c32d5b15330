#include <doctest.h>

#include <random>
#include <regex>

#include "clearline/error.hpp"
#include "clearline/extraction.hpp"
#include "support.hpp"
#include "unit/expect.hpp"

using namespace clearline;
using clearline::testing::code_of;
using clearline::testing::six_guidelines;
using clearline::testing::prompt_example_corpus;

TEST_CASE("topic responses resolve to the corpus spelling") {
  const std::vector<std::string> topics{"Hypertension", "Diabetes", "Heart Disease"};
  CHECK(parse_topic_response("Hypertension", topics).topic_id == "Hypertension");
  CHECK(parse_topic_response("  hypertension.\n", topics).topic_id == "Hypertension");
  CHECK(parse_topic_response("HEART DISEASE!", topics).topic_id == "Heart Disease");
  CHECK(parse_topic_response("  hypertension.\n", topics).raw_response == "  hypertension.\n");
}

TEST_CASE("topic responses outside the list are rejected with the raw text") {
  const std::vector<std::string> topics{"Hypertension", "Diabetes"};
  try {
    (void)parse_topic_response("Cardiology", topics);
    FAIL("expected UnrecognizedTopic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnrecognizedTopic);
    CHECK(e.detail() == "Cardiology");
  }
  CHECK(code_of([&] { (void)parse_topic_response("The topic is Hypertension", topics); }) ==
        ErrorCode::UnrecognizedTopic);
  CHECK(code_of([&] { (void)parse_topic_response("Hypertension..", topics); }) ==
        ErrorCode::UnrecognizedTopic);
  CHECK(code_of([&] { (void)parse_topic_response("", topics); }) == ErrorCode::UnrecognizedTopic);
}

TEST_CASE("topic matching that hits two spellings is ambiguous") {
  // A Corpus would refuse these ids; the parser is checked on its own.
  const std::vector<std::string> topics{"Asthma", "asthma "};
  CHECK(code_of([&] { (void)parse_topic_response("ASTHMA", topics); }) == ErrorCode::AmbiguousTopic);
}

TEST_CASE("split_reasoning") {
  auto s = split_reasoning("<think>lines 0 and 1 match</think>[0 1]");
  REQUIRE(s.trace);
  CHECK(*s.trace == "<think>lines 0 and 1 match");
  CHECK(s.payload == "[0 1]");

  s = split_reasoning("2 3");
  CHECK_FALSE(s.trace);
  CHECK(s.payload == "2 3");

  s = split_reasoning("a</think>b</think>c");
  CHECK(*s.trace == "a");
  CHECK(s.payload == "b</think>c");

  s = split_reasoning("</think>");
  CHECK(*s.trace == "");
  CHECK(s.payload == "");
}

TEST_CASE("split_reasoning reassembles to the input") {
  std::mt19937 rng(7);
  const std::string alphabet = "ab </think>\n0123";
  for (int iter = 0; iter < 500; ++iter) {
    std::string raw;
    const int len = static_cast<int>(rng() % 40);
    for (int i = 0; i < len; ++i) raw += alphabet[rng() % alphabet.size()];
    if (rng() % 3 == 0) raw.insert(rng() % (raw.size() + 1), "</think>");
    const auto s = split_reasoning(raw);
    const std::string rebuilt = s.trace ? *s.trace + "</think>" + s.payload : s.payload;
    CHECK(rebuilt == raw);
    if (s.trace) CHECK(s.trace->find("</think>") == std::string::npos);
  }
}

TEST_CASE("line responses") {
  CHECK(parse_line_response("1", 5) == LineIndexSet{1});
  CHECK(parse_line_response("[0 1]", 31) == LineIndexSet{0, 1});
  CHECK(parse_line_response("2 0 2", 3) == LineIndexSet{0, 2});
  CHECK(parse_line_response(" 4,5 ,\n6\t", 10) == LineIndexSet{4, 5, 6});
  CHECK(parse_line_response("[1, 2]", 3) == LineIndexSet{1, 2});
  CHECK(parse_line_response("007", 8) == LineIndexSet{7});
}

TEST_CASE("line responses reject the whole response on any bad token") {
  CHECK(code_of([] { (void)parse_line_response("0 99", 47); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { (void)parse_line_response("3", 3); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { (void)parse_line_response("99999999999999999999999", 3); }) == ErrorCode::OutOfRange);
  CHECK(code_of([] { (void)parse_line_response("0 banana", 5); }) == ErrorCode::MalformedToken);
  CHECK(code_of([] { (void)parse_line_response("-1", 5); }) == ErrorCode::MalformedToken);
  CHECK(code_of([] { (void)parse_line_response("1.5", 5); }) == ErrorCode::MalformedToken);
  CHECK(code_of([] { (void)parse_line_response("[0 1", 5); }) == ErrorCode::MalformedToken);
  CHECK(code_of([] { (void)parse_line_response("[[0]]", 5); }) == ErrorCode::MalformedToken);
  CHECK(code_of([] { (void)parse_line_response("Lines: 1", 5); }) == ErrorCode::MalformedToken);
  CHECK(code_of([] { (void)parse_line_response("", 5); }) == ErrorCode::EmptySelection);
  CHECK(code_of([] { (void)parse_line_response(" [ ] ", 5); }) == ErrorCode::EmptySelection);
  CHECK(code_of([] { (void)parse_line_response(",,", 5); }) == ErrorCode::EmptySelection);
  CHECK(code_of([] { (void)parse_line_response("0", 0); }) == ErrorCode::InvalidCorpus);
}

namespace {

// Regex oracle for the accepted response grammar.
std::optional<LineIndexSet> oracle_parse(const std::string& payload, std::size_t n, bool& empty) {
  static const std::regex grammar(R"(^\s*(\[([\s,]*(\d+[\s,]+)*\d*[\s,]*)\]|([\s,]*(\d+[\s,]+)*\d*[\s,]*))\s*$)");
  empty = false;
  std::smatch m;
  if (!std::regex_match(payload, m, grammar)) return std::nullopt;
  const std::string body = m[2].matched ? m[2].str() : m[4].str();
  static const std::regex number(R"(\d+)");
  LineIndexSet out;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), number); it != std::sregex_iterator(); ++it) {
    const std::string digits = it->str();
    const auto first = digits.find_first_not_of('0');
    const std::string sig = first == std::string::npos ? "0" : digits.substr(first);
    if (sig.size() > 6 || std::stoul(sig) >= n) return std::nullopt;
    out.insert(std::stoul(sig));
  }
  empty = out.empty();
  return out;
}

}  // namespace

TEST_CASE("line response parser agrees with a regex oracle") {
  std::mt19937 rng(2024);
  const std::vector<std::string> pieces{"0", "1", "2", "7", "12", "40", " ", ", ", ",", "\n", "x", "-", "[", "]"};
  for (int iter = 0; iter < 2000; ++iter) {
    std::string payload;
    const int parts = static_cast<int>(rng() % 7);
    for (int i = 0; i < parts; ++i) payload += pieces[rng() % pieces.size()];
    if (rng() % 4 == 0) payload = "[" + payload + "]";
    const std::size_t n = 1 + rng() % 20;
    bool empty = false;
    const auto expected = oracle_parse(payload, n, empty);
    CAPTURE(payload);
    CAPTURE(n);
    if (expected && !empty) {
      CHECK(parse_line_response(payload, n) == *expected);
    } else {
      const auto code = code_of([&] { (void)parse_line_response(payload, n); });
      if (expected) {
        CHECK(code == ErrorCode::EmptySelection);
      } else {
        CHECK((code == ErrorCode::MalformedToken || code == ErrorCode::OutOfRange));
      }
    }
  }
}

TEST_CASE("consolidate is set union") {
  std::vector<LineSelection> runs(3);
  runs[0].indices = {0, 1};
  runs[1].indices = {1, 4};
  runs[2].indices = {};
  CHECK(consolidate(runs) == LineIndexSet{0, 1, 4});
  CHECK(consolidate({}).empty());

  std::mt19937 rng(11);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<LineSelection> rs(1 + rng() % 5);
    std::vector<bool> seen(30, false);
    for (auto& r : rs) {
      for (int k = 0; k < 4; ++k) {
        const auto v = rng() % 30;
        r.indices.insert(v);
        seen[v] = true;
      }
    }
    const auto merged = consolidate(rs);
    for (std::size_t v = 0; v < 30; ++v) CHECK(merged.count(v) == (seen[v] ? 1u : 0u));
    for (const auto& r : rs) {
      for (auto v : r.indices) CHECK(merged.count(v) == 1);
    }
  }
}

TEST_CASE("pipeline: topic then one line run") {
  ScriptedBackend backend({"Hypertension", "1"});
  const auto result = run_pipeline("What are the causes of hypertension?", prompt_example_corpus(), backend);
  CHECK(result.topic.topic_id == "Hypertension");
  CHECK(result.consolidated == LineIndexSet{1});
  CHECK(result.runs.size() == 1);
  CHECK(result.backend_calls == 2);
  CHECK(backend.calls() == 2);
  CHECK(result.timings.total_seconds >= result.timings.topic_seconds + result.timings.line_seconds);
}

TEST_CASE("pipeline: reasoning trace is kept apart from the selection") {
  ScriptedBackend backend({"DKA", "<think>criteria are lines 0 and 1</think>[0 1]"});
  const auto result = run_pipeline("How is DKA diagnosed?", six_guidelines(), backend);
  CHECK(result.topic.topic_id == "DKA");
  CHECK(result.consolidated == LineIndexSet{0, 1});
  REQUIRE(result.runs.size() == 1);
  REQUIRE(result.runs[0].reasoning_trace);
  CHECK(*result.runs[0].reasoning_trace == "<think>criteria are lines 0 and 1");
  CHECK(result.runs[0].raw_response == "<think>criteria are lines 0 and 1</think>[0 1]");
}

TEST_CASE("pipeline: malformed line response is retried") {
  ScriptedBackend backend({"Hypokalaemia", "banana", "2 3"});
  PipelineOptions opts;
  opts.max_retries_per_step = 1;
  const auto result = run_pipeline("How do I treat low potassium?", six_guidelines(), backend, opts);
  CHECK(result.consolidated == LineIndexSet{2, 3});
  CHECK(result.rejected_responses == 1);
  CHECK(result.backend_calls == 3);
  CHECK(backend.remaining() == 0);
}

TEST_CASE("pipeline: exhausted retries drop the run") {
  SUBCASE("single run") {
    ScriptedBackend backend({"Hypokalaemia", "banana", "99"});
    CHECK(code_of([&] { (void)run_pipeline("q", six_guidelines(), backend); }) ==
          ErrorCode::PipelineExhausted);
    CHECK(backend.calls() == 3);
  }
  SUBCASE("ensemble keeps the valid runs") {
    ScriptedBackend backend({"Hypokalaemia", "x", "y", "1", "x", "4"});
    PipelineOptions opts;
    opts.ensemble_size = 3;
    const auto result = run_pipeline("q", six_guidelines(), backend, opts);
    CHECK(result.runs.size() == 2);
    CHECK(result.consolidated == LineIndexSet{1, 4});
    CHECK(result.rejected_responses == 3);
    CHECK(result.backend_calls == 6);
  }
}

TEST_CASE("pipeline: empty selection is a valid run") {
  ScriptedBackend backend({"Pancreatitis", "[]"});
  const auto result = run_pipeline("q", six_guidelines(), backend);
  CHECK(result.runs.size() == 1);
  CHECK(result.consolidated.empty());
  CHECK(result.rejected_responses == 0);
}

TEST_CASE("pipeline: ensemble of k issues 1 + k calls and unions the runs") {
  ScriptedBackend backend({"DKA", "0", "1", "0 2", "5", "1"});
  PipelineOptions opts;
  opts.ensemble_size = 5;
  const auto result = run_pipeline("q", six_guidelines(), backend, opts);
  CHECK(backend.calls() == 6);
  CHECK(result.backend_calls == 6);
  CHECK(result.runs.size() == 5);
  CHECK(result.consolidated == LineIndexSet{0, 1, 2, 5});
}

TEST_CASE("pipeline: every line request carries the same prompt") {
  ScriptedBackend backend({"DKA", "0", "1", "2"});
  PipelineOptions opts;
  opts.ensemble_size = 3;
  (void)run_pipeline("q", six_guidelines(), backend, opts);
  const auto seen = backend.received();
  REQUIRE(seen.size() == 4);
  CHECK(seen[1] == seen[2]);
  CHECK(seen[2] == seen[3]);
  CHECK(seen[0] != seen[1]);
}

TEST_CASE("pipeline: parallel runs give the same union") {
  ScriptedBackend backend({"DKA", "3", "3", "3", "3"});
  PipelineOptions opts;
  opts.ensemble_size = 4;
  opts.parallel_runs = true;
  const auto result = run_pipeline("q", six_guidelines(), backend, opts);
  CHECK(result.consolidated == LineIndexSet{3});
  CHECK(result.runs.size() == 4);
  CHECK(backend.calls() == 5);
}

TEST_CASE("pipeline: topic override skips the topic call") {
  ScriptedBackend backend({"0 1"});
  PipelineOptions opts;
  opts.topic_override = "dka";
  const auto result = run_pipeline("q", six_guidelines(), backend, opts);
  CHECK(result.topic.topic_id == "DKA");
  CHECK(backend.calls() == 1);
  CHECK(result.backend_calls == 1);

  opts.topic_override = "Cardiology";
  CHECK(code_of([&] { (void)run_pipeline("q", six_guidelines(), backend, opts); }) ==
        ErrorCode::UnrecognizedTopic);
}

TEST_CASE("pipeline: input validation") {
  ScriptedBackend backend({});
  CHECK(code_of([&] { (void)run_pipeline("   ", six_guidelines(), backend); }) == ErrorCode::EmptyQuestion);
  CHECK(code_of([&] { (void)run_pipeline("q", Corpus{}, backend); }) == ErrorCode::EmptyCorpus);
  PipelineOptions opts;
  opts.ensemble_size = 0;
  CHECK(code_of([&] { (void)run_pipeline("q", six_guidelines(), backend, opts); }) == ErrorCode::InvalidConfig);
  CHECK(backend.calls() == 0);
}

TEST_CASE("pipeline: unrecognized topic and backend failures propagate") {
  ScriptedBackend unknown({"Cardiology"});
  CHECK(code_of([&] { (void)run_pipeline("q", six_guidelines(), unknown); }) == ErrorCode::UnrecognizedTopic);
  ScriptedBackend empty({"DKA"});
  try {
    (void)run_pipeline("q", six_guidelines(), empty);
    FAIL("expected Upstream");
  } catch (const BackendError& e) {
    CHECK(e.code() == ErrorCode::Upstream);
    CHECK(std::string(e.what()).rfind("line identification", 0) == 0);
  }
}
