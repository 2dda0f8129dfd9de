#pragma once

#include <array>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "bimlog/sessionize.hpp"
#include "bimlog/util.hpp"

namespace bimlog {

/// Canonical feature order: 14 data densities, the 14 matching time
/// densities, then the effective-time ratio. File formats and model inputs
/// all use this order.
enum Feature : size_t {
  kTransSuccessD = 0,
  kAddD,
  kAddTimesD,
  kDeleteD,
  kDeleteTimesD,
  kModifyTimesD,
  kCommandD,
  kUndoD,
  kRibbonD,
  kAccelKeyD,
  kPushButtonD,
  kIdle12D,
  kIdle25D,
  kIdleGt5D,
  kTransSuccessT,
  kAddT,
  kAddTimesT,
  kDeleteT,
  kDeleteTimesT,
  kModifyTimesT,
  kCommandT,
  kUndoT,
  kRibbonT,
  kAccelKeyT,
  kPushButtonT,
  kIdle12T,
  kIdle25T,
  kIdleGt5T,
  kEffectT,
  kFeatureCount,
};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "transsuccess_d", "add_d",    "add_times_d", "delete_d", "delete_times_d", "modify_times_d",
    "command_d",      "undo_d",   "ribbon_d",    "accelkey_d", "pushbutton_d", "idle1_2_d",
    "idle2_5_d",      "idle_gt5_d",
    "transsuccess_t", "add_t",    "add_times_t", "delete_t", "delete_times_t", "modify_times_t",
    "command_t",      "undo_t",   "ribbon_t",    "accelkey_t", "pushbutton_t", "idle1_2_t",
    "idle2_5_t",      "idle_gt5_t",
    "effect_t",
};

using FeatureVector = std::array<double, kFeatureCount>;

constexpr Ticks kPauseShort = 1 * kMsPerMinute;   // gaps below this are not pauses
constexpr Ticks kPauseMedium = 2 * kMsPerMinute;
constexpr Ticks kPauseLong = 5 * kMsPerMinute;

enum class PauseBand { NotAPause, Band1to2, Band2to5, BandOver5 };

/// Left-closed/right-open bands at 60 s, 120 s, 300 s so the three pause
/// bands partition all gaps >= one minute.
constexpr PauseBand classify_pause(Ticks gap_ms) {
  if (gap_ms < kPauseShort) return PauseBand::NotAPause;
  if (gap_ms < kPauseMedium) return PauseBand::Band1to2;
  if (gap_ms < kPauseLong) return PauseBand::Band2to5;
  return PauseBand::BandOver5;
}

/// Time cost of a record: backward tick difference, 0 for the first record
/// of the window.
inline Ticks record_time(std::span<const SessionEvent> events, size_t index) {
  if (index == 0) return 0;
  return events[index].tick - events[index - 1].tick;
}

/// Raw per-window tallies the densities are derived from.
struct WindowStats {
  size_t record_count = 0;  // L
  Ticks span_ms = 0;        // T = last tick - first tick

  std::int64_t transsuccess_events = 0;
  std::int64_t add_components = 0;   // summed element counts, can exceed L
  std::int64_t add_events = 0;
  std::int64_t delete_components = 0;
  std::int64_t delete_events = 0;
  std::int64_t modify_events = 0;
  std::int64_t command_events = 0;
  std::int64_t undo_events = 0;
  std::int64_t ribbon_events = 0;
  std::int64_t accelkey_events = 0;
  std::int64_t internal_events = 0;
  std::int64_t pushbutton_events = 0;

  Ticks transsuccess_ms = 0;
  Ticks add_ms = 0;
  Ticks delete_ms = 0;
  Ticks modify_ms = 0;
  Ticks command_ms = 0;
  Ticks undo_ms = 0;
  Ticks ribbon_ms = 0;
  Ticks accelkey_ms = 0;
  Ticks pushbutton_ms = 0;

  std::array<std::int64_t, 3> pause_counts = {0, 0, 0};  // 1-2 min, 2-5 min, >5 min
  std::array<Ticks, 3> pause_ms = {0, 0, 0};
};

inline WindowStats compute_window_stats(std::span<const SessionEvent> events) {
  if (events.empty()) throw Error("EmptyWindow", "cannot compute features of an empty window");
  WindowStats stats;
  stats.record_count = events.size();
  stats.span_ms = events.back().tick - events.front().tick;

  for (size_t i = 0; i < events.size(); ++i) {
    const SessionEvent& ev = events[i];
    const Ticks rt = record_time(events, i);

    switch (ev.category) {
      case EventCategory::TransactionSuccess:
        ++stats.transsuccess_events;
        stats.transsuccess_ms += rt;
        break;
      case EventCategory::ElementsAdded:
        ++stats.add_events;
        stats.add_components += ev.count;
        stats.add_ms += rt;
        break;
      case EventCategory::ElementsDeleted:
        ++stats.delete_events;
        stats.delete_components += ev.count;
        stats.delete_ms += rt;
        break;
      case EventCategory::ElementsModified:
        ++stats.modify_events;
        stats.modify_ms += rt;
        break;
      case EventCategory::Command:
        ++stats.command_events;
        stats.command_ms += rt;
        if (ev.undo) {
          ++stats.undo_events;
          stats.undo_ms += rt;
        }
        switch (ev.method) {
          case CommandMethod::Ribbon:
            ++stats.ribbon_events;
            stats.ribbon_ms += rt;
            break;
          case CommandMethod::AccelKey:
            ++stats.accelkey_events;
            stats.accelkey_ms += rt;
            break;
          default:
            ++stats.internal_events;
            break;
        }
        break;
      case EventCategory::PushButton:
        ++stats.pushbutton_events;
        stats.pushbutton_ms += rt;
        break;
      default:
        break;  // OtherTransaction, KeyPress, OtherJrn carry no indicator
    }

    switch (classify_pause(rt)) {
      case PauseBand::Band1to2:
        ++stats.pause_counts[0];
        stats.pause_ms[0] += rt;
        break;
      case PauseBand::Band2to5:
        ++stats.pause_counts[1];
        stats.pause_ms[1] += rt;
        break;
      case PauseBand::BandOver5:
        ++stats.pause_counts[2];
        stats.pause_ms[2] += rt;
        break;
      case PauseBand::NotAPause:
        break;
    }
  }
  return stats;
}

/// Densities from tallies. Data density = count / L; time density = attributed
/// time / T. A zero-span window has all time densities 0 and effect_t 1.
inline FeatureVector features_from_stats(const WindowStats& stats) {
  FeatureVector fv{};
  const double l = static_cast<double>(stats.record_count);
  const double t = static_cast<double>(stats.span_ms);

  fv[kTransSuccessD] = static_cast<double>(stats.transsuccess_events) / l;
  fv[kAddD] = static_cast<double>(stats.add_components) / l;
  fv[kAddTimesD] = static_cast<double>(stats.add_events) / l;
  fv[kDeleteD] = static_cast<double>(stats.delete_components) / l;
  fv[kDeleteTimesD] = static_cast<double>(stats.delete_events) / l;
  fv[kModifyTimesD] = static_cast<double>(stats.modify_events) / l;
  fv[kCommandD] = static_cast<double>(stats.command_events) / l;
  fv[kUndoD] = static_cast<double>(stats.undo_events) / l;
  fv[kRibbonD] = static_cast<double>(stats.ribbon_events) / l;
  fv[kAccelKeyD] = static_cast<double>(stats.accelkey_events) / l;
  fv[kPushButtonD] = static_cast<double>(stats.pushbutton_events) / l;
  fv[kIdle12D] = static_cast<double>(stats.pause_counts[0]) / l;
  fv[kIdle25D] = static_cast<double>(stats.pause_counts[1]) / l;
  fv[kIdleGt5D] = static_cast<double>(stats.pause_counts[2]) / l;

  if (stats.span_ms > 0) {
    fv[kTransSuccessT] = static_cast<double>(stats.transsuccess_ms) / t;
    fv[kAddT] = static_cast<double>(stats.add_ms) / t;
    fv[kAddTimesT] = static_cast<double>(stats.add_ms) / t;  // same event set by construction
    fv[kDeleteT] = static_cast<double>(stats.delete_ms) / t;
    fv[kDeleteTimesT] = static_cast<double>(stats.delete_ms) / t;
    fv[kModifyTimesT] = static_cast<double>(stats.modify_ms) / t;
    fv[kCommandT] = static_cast<double>(stats.command_ms) / t;
    fv[kUndoT] = static_cast<double>(stats.undo_ms) / t;
    fv[kRibbonT] = static_cast<double>(stats.ribbon_ms) / t;
    fv[kAccelKeyT] = static_cast<double>(stats.accelkey_ms) / t;
    fv[kPushButtonT] = static_cast<double>(stats.pushbutton_ms) / t;
    fv[kIdle12T] = static_cast<double>(stats.pause_ms[0]) / t;
    fv[kIdle25T] = static_cast<double>(stats.pause_ms[1]) / t;
    fv[kIdleGt5T] = static_cast<double>(stats.pause_ms[2]) / t;
    fv[kEffectT] = static_cast<double>(stats.span_ms - stats.pause_ms[2]) / t;
  } else {
    fv[kEffectT] = 1.0;
  }
  return fv;
}

inline FeatureVector extract_features(std::span<const SessionEvent> events) {
  return features_from_stats(compute_window_stats(events));
}

// --- feature matrix file --------------------------------------------------

struct FeatureRow {
  std::string designer_id;
  size_t window_start = 0;
  double label = 0.0;
  FeatureVector values{};
};

inline std::string feature_matrix_header() {
  std::string header = "designer_id,window_start,label";
  for (const auto& name : kFeatureNames) {
    header += ',';
    header += name;
  }
  return header;
}

inline std::string format_feature_matrix(const std::vector<FeatureRow>& rows) {
  std::string out = feature_matrix_header();
  out += '\n';
  char buf[40];
  for (const auto& row : rows) {
    out += row.designer_id;
    out += ',';
    out += std::to_string(row.window_start);
    std::snprintf(buf, sizeof(buf), ",%.17g", row.label);
    out += buf;
    for (double v : row.values) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline std::vector<FeatureRow> parse_feature_matrix(std::string_view text) {
  const std::vector<std::string> lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != feature_matrix_header())
    throw Error("WrongFileFormat", "feature matrix header mismatch");
  std::vector<FeatureRow> rows;
  rows.reserve(lines.size() - 1);
  for (size_t idx = 1; idx < lines.size(); ++idx) {
    const auto fields = split_view(trim(lines[idx]), ',');
    if (fields.size() != 3 + kFeatureCount)
      throw Error("WrongFileFormat", "feature matrix line " + std::to_string(idx + 1) +
                                         " has wrong field count");
    FeatureRow row;
    row.designer_id = std::string(fields[0]);
    std::int64_t start = 0;
    if (!parse_i64(fields[1], start) || start < 0)
      throw Error("WrongFileFormat", "bad window_start on line " + std::to_string(idx + 1));
    row.window_start = static_cast<size_t>(start);
    if (!parse_f64(fields[2], row.label))
      throw Error("WrongFileFormat", "bad label on line " + std::to_string(idx + 1));
    for (size_t f = 0; f < kFeatureCount; ++f) {
      if (!parse_f64(fields[3 + f], row.values[f]))
        throw Error("WrongFileFormat", "bad feature value on line " + std::to_string(idx + 1));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bimlog
