#include <doctest.h>

#include <random>

#include "clearline/answer.hpp"
#include "clearline/error.hpp"
#include "support.hpp"
#include "unit/expect.hpp"

using namespace clearline;
using namespace clearline::testing;

namespace {

Guideline split_fixture() {
  return Guideline::create("Toy", "Toy", {{0, "A", "alpha"}, {1, "B", "beta"}, {2, "A", "gamma"}});
}

}  // namespace

TEST_CASE("investigations block becomes a single segment") {
  const auto& g = six_guidelines().at("Pancreatitis");
  const auto a = assemble_answer(g, {1, 2, 3, 4, 5, 6}, "What investigations are needed?");
  CHECK_FALSE(a.empty);
  REQUIRE(a.segments.size() == 1);
  CHECK(a.segments[0].section == "Investigations");
  REQUIRE(a.segments[0].bodies.size() == 6);
  CHECK(a.segments[0].bodies.front().rfind("Blood Tests:", 0) == 0);
  CHECK(a.segments[0].bodies.back().rfind("Computed Tomography", 0) == 0);
  for (std::size_t i = 0; i < 6; ++i) CHECK(a.segments[0].bodies[i] == g[i + 1].body);
  CHECK(a.footer == "Please refer to Pancreatitis guidelines for more information.");
}

TEST_CASE("empty selection gives an empty answer with a footer") {
  const auto a = assemble_answer(six_guidelines().at("DKA"), {}, "q");
  CHECK(a.empty);
  CHECK(a.segments.empty());
  CHECK(a.footer == "Please refer to DKA guidelines for more information.");
  CHECK(render_text(a) ==
        "No relevant guideline lines were identified for this question.\n\n"
        "Please refer to DKA guidelines for more information.");
}

TEST_CASE("same section split by another section gives two segments") {
  const auto a = assemble_answer(split_fixture(), {0, 2}, "q");
  REQUIRE(a.segments.size() == 2);
  CHECK(a.segments[0] == AnswerSegment{"A", {"alpha"}});
  CHECK(a.segments[1] == AnswerSegment{"A", {"gamma"}});
  CHECK(assemble_answer(split_fixture(), {0, 1, 2}, "q").segments.size() == 3);
}

TEST_CASE("gaps inside one section keep a single heading") {
  const auto& g = six_guidelines().at("Hypokalaemia");
  // 4 and 7 are both TREATMENT with 5, 6 unselected.
  REQUIRE(g[4].section == "TREATMENT");
  REQUIRE(g[7].section == "TREATMENT");
  const auto a = assemble_answer(g, {4, 7}, "q");
  REQUIRE(a.segments.size() == 1);
  CHECK(a.segments[0].bodies == std::vector<std::string>{g[4].body, g[7].body});
}

TEST_CASE("DKA render") {
  const auto& g = six_guidelines().at("DKA");
  const auto a = assemble_answer(g, {0, 1}, "How is DKA diagnosed?");
  CHECK(render_text(a) ==
        "Please follow the steps below:\n\n"
        "DIAGNOSIS\n" + g[0].body + "\n" + g[1].body + "\n\n"
        "Please refer to DKA guidelines for more information.");
  CHECK(render_text(a).find("PERFORM A CBG, VBG AND URINALYSIS") != std::string::npos);
}

TEST_CASE("indices past the guideline are rejected") {
  CHECK(code_of([] { (void)assemble_answer(split_fixture(), {3}, "q"); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("custom template") {
  AnswerTemplate tmpl;
  tmpl.preamble = "Steps:";
  tmpl.footer_format = "See {topic}.";
  const auto a = assemble_answer(split_fixture(), {1}, "q", tmpl);
  CHECK(render_text(a, tmpl) == "Steps:\n\nB\nbeta\n\nSee Toy.");
}

TEST_CASE("rendered answers parse back to their segments over every fixture") {
  std::mt19937 rng(99);
  for (const auto& g : six_guidelines().guidelines()) {
    for (int iter = 0; iter < 50; ++iter) {
      LineIndexSet picks;
      const auto want = rng() % (g.size() + 1);
      for (std::size_t k = 0; k < want; ++k) picks.insert(rng() % g.size());
      const auto a = assemble_answer(g, picks, "q");
      const auto parsed = parse_rendered_answer(render_text(a));
      CHECK(parsed.empty == a.empty);
      CHECK(parsed.footer == a.footer);
      REQUIRE(parsed.segments.size() == a.segments.size());
      std::vector<std::string> bodies;
      for (std::size_t s = 0; s < a.segments.size(); ++s) {
        CHECK(parsed.segments[s].first == a.segments[s].section);
        CHECK(parsed.segments[s].second == a.segments[s].bodies);
        bodies.insert(bodies.end(), a.segments[s].bodies.begin(), a.segments[s].bodies.end());
      }
      // Bodies appear in ascending index order, one per selected line.
      std::vector<std::string> expected;
      for (auto i : picks) expected.push_back(g[i].body);
      CHECK(bodies == expected);
    }
  }
}

TEST_CASE("answer JSON round trip") {
  const auto& g = six_guidelines().at("Pancreatitis");
  const auto a = assemble_answer(g, {0, 2, 7}, "question \"quoted\"");
  const auto j = to_json(a);
  CHECK(j.at("topic") == "Pancreatitis");
  CHECK(j.at("segments").size() == 3);
  CHECK(j.at("empty") == false);
  CHECK(answer_from_json(j) == a);
  CHECK(answer_from_json(nlohmann::json::parse(j.dump())) == a);
}
