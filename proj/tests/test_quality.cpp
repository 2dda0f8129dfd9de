#include <catch2/catch_amalgamated.hpp>

#include "bimlog/quality.hpp"
#include "bimlog/rng.hpp"

using namespace bimlog;

namespace {

AssessmentInput random_assessment(Rng& rng) {
  AssessmentInput in;
  in.arch_completeness_delta = static_cast<int>(rng.uniform_int(std::int64_t{-6}, std::int64_t{6}));
  in.arch_error_delta = static_cast<int>(rng.uniform_int(std::int64_t{-6}, std::int64_t{6}));
  in.complexity_adjustment = static_cast<int>(rng.uniform_int(std::int64_t{-10}, std::int64_t{10}));
  in.struct_delta = static_cast<int>(rng.uniform_int(std::int64_t{-6}, std::int64_t{6}));
  return in;
}

}  // namespace

TEST_CASE("benchmark input scores exactly seventy", "[quality]") {
  const QualityScore s = score({});
  CHECK(s.arch_completeness == 20);
  CHECK(s.arch_accuracy == 20);
  CHECK(s.arch_complexity == 20);
  CHECK(s.struct_completeness == 10);
  CHECK(s.total == 70);
}

TEST_CASE("scoring sheet row two", "[quality]") {
  // one extra error, +2 complexity, one structural type short
  const QualityScore s = score({0, 1, 2, -1});
  CHECK(s.arch_completeness == 20);
  CHECK(s.arch_accuracy == 18);
  CHECK(s.arch_complexity == 22);
  CHECK(s.struct_completeness == 8);
  CHECK(s.total == 68);
}

TEST_CASE("extreme deltas clamp to the part ranges", "[quality]") {
  const QualityScore s = score({99, 0, 0, 99});
  CHECK(s.arch_completeness == 24);
  CHECK(s.arch_accuracy == 20);
  CHECK(s.arch_complexity == 20);
  CHECK(s.struct_completeness == 16);
  CHECK(s.total == 80);

  const QualityScore low = score({-99, 99, -10, -99});
  CHECK(low.arch_completeness == 14);
  CHECK(low.arch_accuracy == 12);
  CHECK(low.arch_complexity == 10);
  CHECK(low.struct_completeness == 2);
  CHECK(low.total == kScoreMin);

  const QualityScore high = score({99, -99, 10, 99});
  CHECK(high.total == kScoreMax);
}

TEST_CASE("complexity adjustment outside ten points is an error", "[quality]") {
  CHECK_THROWS_AS(score({0, 0, 11, 0}), Error);
  CHECK_THROWS_AS(score({0, 0, -11, 0}), Error);
  CHECK_NOTHROW(score({0, 0, 10, 0}));
  CHECK_NOTHROW(score({0, 0, -10, 0}));
}

TEST_CASE("every total stays inside the envelope", "[quality]") {
  Rng rng(1001);
  for (int i = 0; i < 5000; ++i) {
    const QualityScore s = score(random_assessment(rng));
    REQUIRE(s.total >= kScoreMin);
    REQUIRE(s.total <= kScoreMax);
    REQUIRE(s.total == s.arch_completeness + s.arch_accuracy + s.arch_complexity +
                           s.struct_completeness);
  }
}

TEST_CASE("monotonicity of the rubric", "[quality]") {
  Rng rng(1002);
  for (int i = 0; i < 5000; ++i) {
    AssessmentInput a = random_assessment(rng);
    AssessmentInput more_errors = a;
    more_errors.arch_error_delta += 1;
    REQUIRE(score(more_errors).total <= score(a).total);

    AssessmentInput more_complete = a;
    more_complete.arch_completeness_delta += 1;
    REQUIRE(score(more_complete).total >= score(a).total);

    AssessmentInput more_struct = a;
    more_struct.struct_delta += 1;
    REQUIRE(score(more_struct).total >= score(a).total);
  }
}

TEST_CASE("score sheet file round trip", "[quality]") {
  std::vector<ScoreRow> rows = {{"d001", score({})}, {"d002", score({0, 1, 2, -1})}};
  const std::string text = format_score_sheet(rows);
  CHECK_THAT(text, Catch::Matchers::StartsWith(std::string(kScoreSheetHeader)));
  const auto parsed = parse_score_sheet(text);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0].designer_id == "d001");
  CHECK(parsed[0].score == rows[0].score);
  CHECK(parsed[1].score.total == 68);
}

TEST_CASE("assessment file round trip", "[quality]") {
  std::vector<AssessmentRow> rows = {{"d001", {0, 0, 0, 0}}, {"d002", {1, -2, 5, -1}}};
  const auto parsed = parse_assessments(format_assessments(rows));
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].input.arch_completeness_delta == 1);
  CHECK(parsed[1].input.arch_error_delta == -2);
  CHECK(parsed[1].input.complexity_adjustment == 5);
  CHECK(parsed[1].input.struct_delta == -1);
}
