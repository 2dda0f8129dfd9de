#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "bimlog/util.hpp"

namespace bimlog {

/// Benchmark-relative assessment deltas. Positive completeness/structural
/// deltas mean better than the benchmark; positive error deltas mean more
/// modeling errors than the benchmark.
struct AssessmentInput {
  int arch_completeness_delta = 0;
  int arch_error_delta = 0;
  int complexity_adjustment = 0;  // must stay within [-10, +10]
  int struct_delta = 0;
};

struct QualityScore {
  int arch_completeness = 20;
  int arch_accuracy = 20;
  int arch_complexity = 20;
  int struct_completeness = 10;
  int total = 70;

  friend bool operator==(const QualityScore&, const QualityScore&) = default;
};

constexpr int kScoreMin = 38;
constexpr int kScoreMax = 94;

/// Scoring rubric: 20/20/20/10 benchmark, two points per completeness or
/// error delta, complexity adjustment applied directly. Part ranges are hard
/// clamps, which pins every total into [38, 94].
inline QualityScore score(const AssessmentInput& input) {
  if (input.complexity_adjustment < -10 || input.complexity_adjustment > 10)
    throw Error("ComplexityOutOfRange",
                "complexity adjustment must stay within +-10 points, got " +
                    std::to_string(input.complexity_adjustment));

  QualityScore s;
  s.arch_completeness = std::clamp(20 + 2 * input.arch_completeness_delta, 14, 24);
  s.arch_accuracy = std::clamp(20 - 2 * input.arch_error_delta, 12, 24);
  s.arch_complexity = 20 + input.complexity_adjustment;
  s.struct_completeness = std::clamp(10 + 2 * input.struct_delta, 2, 16);
  s.total = s.arch_completeness + s.arch_accuracy + s.arch_complexity + s.struct_completeness;
  return s;
}

// --- score sheet file -------------------------------------------------------

inline constexpr std::string_view kScoreSheetHeader =
    "designer_id,arch_completeness,arch_accuracy,arch_complexity,struct_completeness,total";

struct ScoreRow {
  std::string designer_id;
  QualityScore score;
};

inline std::string format_score_sheet(const std::vector<ScoreRow>& rows) {
  std::string out(kScoreSheetHeader);
  out += '\n';
  for (const auto& row : rows) {
    out += row.designer_id;
    out += ',';
    out += std::to_string(row.score.arch_completeness);
    out += ',';
    out += std::to_string(row.score.arch_accuracy);
    out += ',';
    out += std::to_string(row.score.arch_complexity);
    out += ',';
    out += std::to_string(row.score.struct_completeness);
    out += ',';
    out += std::to_string(row.score.total);
    out += '\n';
  }
  return out;
}

inline std::vector<ScoreRow> parse_score_sheet(std::string_view text) {
  const std::vector<std::string> lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != kScoreSheetHeader)
    throw Error("WrongFileFormat", "score sheet header mismatch");
  std::vector<ScoreRow> rows;
  for (size_t idx = 1; idx < lines.size(); ++idx) {
    const auto fields = split_view(trim(lines[idx]), ',');
    if (fields.size() != 6)
      throw Error("WrongFileFormat", "score sheet line " + std::to_string(idx + 1) +
                                         " has wrong field count");
    ScoreRow row;
    row.designer_id = std::string(fields[0]);
    std::int64_t v[5];
    for (int i = 0; i < 5; ++i) {
      if (!parse_i64(fields[static_cast<size_t>(i) + 1], v[i]))
        throw Error("WrongFileFormat", "bad score on line " + std::to_string(idx + 1));
    }
    row.score.arch_completeness = static_cast<int>(v[0]);
    row.score.arch_accuracy = static_cast<int>(v[1]);
    row.score.arch_complexity = static_cast<int>(v[2]);
    row.score.struct_completeness = static_cast<int>(v[3]);
    row.score.total = static_cast<int>(v[4]);
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- assessment file --------------------------------------------------------

inline constexpr std::string_view kAssessmentHeader =
    "designer_id,arch_completeness_delta,arch_error_delta,complexity_adjustment,struct_delta";

struct AssessmentRow {
  std::string designer_id;
  AssessmentInput input;
};

inline std::string format_assessments(const std::vector<AssessmentRow>& rows) {
  std::string out(kAssessmentHeader);
  out += '\n';
  for (const auto& row : rows) {
    out += row.designer_id;
    out += ',';
    out += std::to_string(row.input.arch_completeness_delta);
    out += ',';
    out += std::to_string(row.input.arch_error_delta);
    out += ',';
    out += std::to_string(row.input.complexity_adjustment);
    out += ',';
    out += std::to_string(row.input.struct_delta);
    out += '\n';
  }
  return out;
}

inline std::vector<AssessmentRow> parse_assessments(std::string_view text) {
  const std::vector<std::string> lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != kAssessmentHeader)
    throw Error("WrongFileFormat", "assessment header mismatch");
  std::vector<AssessmentRow> rows;
  for (size_t idx = 1; idx < lines.size(); ++idx) {
    const auto fields = split_view(trim(lines[idx]), ',');
    if (fields.size() != 5)
      throw Error("WrongFileFormat", "assessment line " + std::to_string(idx + 1) +
                                         " has wrong field count");
    AssessmentRow row;
    row.designer_id = std::string(fields[0]);
    std::int64_t v[4];
    for (int i = 0; i < 4; ++i) {
      if (!parse_i64(fields[static_cast<size_t>(i) + 1], v[i]))
        throw Error("WrongFileFormat", "bad delta on line " + std::to_string(idx + 1));
    }
    row.input.arch_completeness_delta = static_cast<int>(v[0]);
    row.input.arch_error_delta = static_cast<int>(v[1]);
    row.input.complexity_adjustment = static_cast<int>(v[2]);
    row.input.struct_delta = static_cast<int>(v[3]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bimlog
