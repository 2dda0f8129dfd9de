#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bimlog/util.hpp"

namespace bimlog {

struct WindowConfig {
  size_t length_n = 30000;
  size_t step_s = 5000;
  bool keep_short = true;  // sequences shorter than length_n yield one flagged window

  void validate() const {
    if (length_n < 1) throw Error("InvalidConfig", "window length must be >= 1");
    if (step_s < 1 || step_s > length_n)
      throw Error("InvalidConfig", "window step must satisfy 1 <= step <= length");
  }
};

struct WindowRange {
  size_t start = 0;  // half-open [start, end)
  size_t end = 0;
  bool short_window = false;

  friend bool operator==(const WindowRange&, const WindowRange&) = default;
};

/// Number of full windows over a sequence of length L >= N.
constexpr size_t window_count(size_t length_l, size_t length_n, size_t step_s) {
  return (length_l - length_n) / step_s + 1;
}

/// Crops [i*s, i*s + N) for i = 0.. while the window fits; the trailing
/// remainder is dropped. A sequence shorter than N yields one flagged
/// full-length window when keep_short is set, otherwise nothing.
inline std::vector<WindowRange> make_windows(size_t sequence_length, const WindowConfig& config) {
  config.validate();
  std::vector<WindowRange> out;
  if (sequence_length == 0) return out;
  if (sequence_length < config.length_n) {
    if (config.keep_short) out.push_back({0, sequence_length, true});
    return out;
  }
  const size_t count = window_count(sequence_length, config.length_n, config.step_s);
  out.reserve(count);
  for (size_t i = 0; i < count; ++i)
    out.push_back({i * config.step_s, i * config.step_s + config.length_n, false});
  return out;
}

struct WindowSample {
  std::string designer_id;
  size_t start = 0;
  size_t end = 0;
  bool short_window = false;
  double label = 0.0;  // the designer's total quality score
};

/// Propagates each designer's score onto every one of their windows.
inline std::vector<WindowSample> attach_labels(
    const std::vector<std::pair<std::string, std::vector<WindowRange>>>& ranges_per_designer,
    const std::map<std::string, double>& score_sheet) {
  std::vector<WindowSample> samples;
  for (const auto& [designer_id, ranges] : ranges_per_designer) {
    auto it = score_sheet.find(designer_id);
    if (it == score_sheet.end())
      throw Error("MissingScore", "designer '" + designer_id + "' not present in the score sheet");
    for (const auto& range : ranges)
      samples.push_back({designer_id, range.start, range.end, range.short_window, it->second});
  }
  return samples;
}

inline constexpr std::string_view kWindowManifestHeader = "designer_id,start,end,label";

inline std::string format_window_manifest(const std::vector<WindowSample>& samples) {
  std::string out(kWindowManifestHeader);
  out += '\n';
  for (const auto& s : samples) {
    out += s.designer_id;
    out += ',';
    out += std::to_string(s.start);
    out += ',';
    out += std::to_string(s.end);
    out += ',';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", s.label);
    out += buf;
    out += '\n';
  }
  return out;
}

}  // namespace bimlog
