#include <catch2/catch_amalgamated.hpp>

#include "bimlog/rng.hpp"
#include "bimlog/windows.hpp"

using namespace bimlog;

namespace {

// Brute-force enumerator: slide the window start one record at a time and
// keep every start that is a multiple of s and still fits.
std::vector<WindowRange> enumerate_windows(size_t length, size_t n, size_t s) {
  std::vector<WindowRange> out;
  for (size_t start = 0; start + n <= length; ++start)
    if (start % s == 0) out.push_back({start, start + n, false});
  return out;
}

}  // namespace

TEST_CASE("worked window examples", "[windows]") {
  SECTION("exact fit yields one window") {
    const auto w = make_windows(30000, {30000, 5000, true});
    REQUIRE(w.size() == 1);
    CHECK(w[0] == WindowRange{0, 30000, false});
  }
  SECTION("39999 vs 40000 boundary") {
    const auto w = make_windows(40000, {30000, 5000, true});
    REQUIRE(w.size() == 3);
    CHECK(w[0].start == 0);
    CHECK(w[1].start == 5000);
    CHECK(w[2].start == 10000);
  }
  SECTION("short sequence keeps one flagged window") {
    const auto w = make_windows(10, {30000, 5000, true});
    REQUIRE(w.size() == 1);
    CHECK(w[0] == WindowRange{0, 10, true});
  }
  SECTION("short sequence dropped when keep_short is off") {
    CHECK(make_windows(10, {30000, 5000, false}).empty());
  }
}

TEST_CASE("window config validation", "[windows]") {
  CHECK_THROWS_AS(make_windows(10, {0, 1, true}), Error);
  CHECK_THROWS_AS(make_windows(10, {5, 0, true}), Error);
  CHECK_THROWS_AS(make_windows(10, {5, 6, true}), Error);  // step > length rejected
  CHECK_NOTHROW(make_windows(10, {5, 5, true}));
}

TEST_CASE("window count identity against brute force", "[windows]") {
  Rng rng(777);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t length = static_cast<size_t>(rng.uniform_int(std::int64_t{1}, std::int64_t{100000}));
    const size_t n = static_cast<size_t>(rng.uniform_int(std::int64_t{1}, static_cast<std::int64_t>(length)));
    const size_t s = static_cast<size_t>(rng.uniform_int(std::int64_t{1}, static_cast<std::int64_t>(n)));

    const auto got = make_windows(length, {n, s, false});
    const auto expect = enumerate_windows(length, n, s);
    REQUIRE(got.size() == expect.size());
    REQUIRE(got.size() == window_count(length, n, s));
    for (size_t i = 0; i < got.size(); ++i) REQUIRE(got[i] == expect[i]);
  }
}

TEST_CASE("adjacent windows overlap by exactly n minus s", "[windows]") {
  Rng rng(778);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = static_cast<size_t>(rng.uniform_int(std::int64_t{2}, std::int64_t{500}));
    const size_t s = static_cast<size_t>(rng.uniform_int(std::int64_t{1}, static_cast<std::int64_t>(n)));
    const size_t length = n + static_cast<size_t>(rng.uniform_int(std::int64_t{0}, std::int64_t{2000}));
    const auto w = make_windows(length, {n, s, false});
    for (size_t i = 1; i < w.size(); ++i) {
      // index-set intersection of [a, a+n) and [a+s, a+s+n)
      const size_t lo = std::max(w[i - 1].start, w[i].start);
      const size_t hi = std::min(w[i - 1].end, w[i].end);
      const size_t overlap = hi > lo ? hi - lo : 0;
      REQUIRE(overlap == n - s);
    }
    // coverage: union reaches the end of the last window, never past the sequence
    if (!w.empty()) {
      CHECK(w.front().start == 0);
      CHECK(w.back().end <= length);
      CHECK(w.back().end == s * (w.size() - 1) + n);
    }
  }
}

TEST_CASE("attach_labels propagates designer scores", "[windows]") {
  const std::map<std::string, double> scores = {{"d1", 68.0}, {"d2", 77.0}};
  SECTION("three windows inherit the designer score") {
    const auto samples = attach_labels({{"d1", {{0, 10, false}, {5, 15, false}, {10, 20, false}}}},
                                       scores);
    REQUIRE(samples.size() == 3);
    for (const auto& s : samples) {
      CHECK(s.designer_id == "d1");
      CHECK(s.label == 68.0);
    }
  }
  SECTION("empty ranges yield empty samples") {
    CHECK(attach_labels({}, scores).empty());
    CHECK(attach_labels({{"d1", {}}}, scores).empty());
  }
  SECTION("missing designer is an error naming the designer") {
    CHECK_THROWS_WITH(attach_labels({{"ghost", {{0, 10, false}}}}, scores),
                      Catch::Matchers::ContainsSubstring("ghost"));
  }
  SECTION("per-designer window counts preserved") {
    const auto samples = attach_labels(
        {{"d1", {{0, 10, false}}}, {"d2", {{0, 10, false}, {5, 15, false}}}}, scores);
    REQUIRE(samples.size() == 3);
    CHECK(samples[0].designer_id == "d1");
    CHECK(samples[1].designer_id == "d2");
    CHECK(samples[2].designer_id == "d2");
  }
}
