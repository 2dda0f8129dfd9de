#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bimlog/ingest.hpp"
#include "bimlog/util.hpp"

namespace bimlog {

enum class EventSource { Journal, Tracker };

enum class EventCategory {
  Command,
  PushButton,
  TransactionSuccess,
  OtherTransaction,
  ElementsAdded,
  ElementsDeleted,
  ElementsModified,
  KeyPress,
  OtherJrn,
};

/// One merged row on the unified tick timeline. `undo` marks commands whose
/// first detail names an undo/cancel action; it is derived at integration
/// time because the detail text does not survive into the merged stream.
struct SessionEvent {
  Ticks tick = 0;
  EventSource source = EventSource::Journal;
  EventCategory category = EventCategory::OtherJrn;
  CommandMethod method = CommandMethod::None;  // Command events only
  std::int64_t count = 1;                      // element events only
  bool undo = false;                           // Command events only

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

inline bool category_from_tracker(EventCategory c) {
  return c == EventCategory::ElementsAdded || c == EventCategory::ElementsDeleted ||
         c == EventCategory::ElementsModified || c == EventCategory::KeyPress;
}

inline bool event_consistent(const SessionEvent& ev) {
  const bool tracker_cat = category_from_tracker(ev.category);
  if (tracker_cat != (ev.source == EventSource::Tracker)) return false;
  if ((ev.category == EventCategory::Command) != (ev.method != CommandMethod::None)) return false;
  if (ev.undo && ev.category != EventCategory::Command) return false;
  return ev.count >= 1;
}

inline bool is_undo_command(const JournalRecord& rec) {
  if (rec.kind != JournalKind::Command || rec.details.empty()) return false;
  const std::string text = lower_copy(rec.details.front());
  return text.find("cancel") != std::string::npos || text.find("undo") != std::string::npos;
}

inline SessionEvent to_event(const JournalRecord& rec) {
  SessionEvent ev;
  ev.tick = rec.tick;
  ev.source = EventSource::Journal;
  switch (rec.kind) {
    case JournalKind::Command:
      ev.category = EventCategory::Command;
      ev.method = rec.method;
      ev.undo = is_undo_command(rec);
      break;
    case JournalKind::PushButton:
      ev.category = EventCategory::PushButton;
      break;
    case JournalKind::Transaction:
      ev.category = (!rec.details.empty() && rec.details.front() == "Transaction Successful")
                        ? EventCategory::TransactionSuccess
                        : EventCategory::OtherTransaction;
      break;
    case JournalKind::OtherJrn:
      ev.category = EventCategory::OtherJrn;
      break;
  }
  return ev;
}

inline SessionEvent to_event(const TrackerRecord& rec) {
  SessionEvent ev;
  ev.tick = rec.tick;
  ev.source = EventSource::Tracker;
  ev.count = rec.count;
  switch (rec.kind) {
    case TrackerKind::ElementsAdded: ev.category = EventCategory::ElementsAdded; break;
    case TrackerKind::ElementsDeleted: ev.category = EventCategory::ElementsDeleted; break;
    case TrackerKind::ElementsModified: ev.category = EventCategory::ElementsModified; break;
    case TrackerKind::KeyPress: ev.category = EventCategory::KeyPress; break;
  }
  return ev;
}

struct Session {
  std::string session_id;
  std::string designer_id;
  std::vector<SessionEvent> events;  // non-decreasing in tick
};

struct CleaningPolicy {
  std::int64_t min_journal_bytes = 102400;
  std::int64_t min_rows = 0;  // 0 disables the row-count check
  double max_tracker_coverage_deficit = 0.5;
};

enum class RejectReason { BelowSizeThreshold, TooFewRows, TrackerCoverageDeficit };

inline std::string_view reject_reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::BelowSizeThreshold: return "BelowSizeThreshold";
    case RejectReason::TooFewRows: return "TooFewRows";
    case RejectReason::TrackerCoverageDeficit: return "TrackerCoverageDeficit";
  }
  return "";
}

/// One paired journal/tracker capture of a single modeling session, as parsed.
struct SessionPair {
  std::string pair_id;
  std::int64_t journal_bytes = 0;
  std::vector<JournalRecord> journal;
  std::vector<TrackerRecord> tracker;
};

struct CleanDecision {
  bool accepted = true;
  std::vector<RejectReason> reasons;
};

/// Accept/reject a session pair. Never throws; a rejection lists every
/// threshold that failed.
inline CleanDecision clean(const SessionPair& pair, const CleaningPolicy& policy) {
  CleanDecision decision;
  if (pair.journal_bytes < policy.min_journal_bytes)
    decision.reasons.push_back(RejectReason::BelowSizeThreshold);
  const std::int64_t rows =
      static_cast<std::int64_t>(pair.journal.size() + pair.tracker.size());
  if (policy.min_rows > 0 && rows < policy.min_rows)
    decision.reasons.push_back(RejectReason::TooFewRows);

  auto span_of = [](Ticks first, Ticks last, size_t n) -> double {
    return n < 2 ? 0.0 : static_cast<double>(last - first);
  };
  const double journal_span =
      pair.journal.empty() ? 0.0
                           : span_of(pair.journal.front().tick, pair.journal.back().tick, pair.journal.size());
  const double tracker_span =
      pair.tracker.empty() ? 0.0
                           : span_of(pair.tracker.front().tick, pair.tracker.back().tick, pair.tracker.size());
  if (tracker_span < (1.0 - policy.max_tracker_coverage_deficit) * journal_span)
    decision.reasons.push_back(RejectReason::TrackerCoverageDeficit);

  decision.accepted = decision.reasons.empty();
  return decision;
}

namespace detail {

template <typename Record>
void require_monotone(const std::vector<Record>& records, std::string_view which) {
  for (size_t i = 1; i < records.size(); ++i) {
    if (records[i].tick < records[i - 1].tick)
      throw Error("NonMonotoneTicks", std::string(which) + " ticks decrease at record index " +
                                          std::to_string(i));
  }
}

}  // namespace detail

/// Stable merge of the two record streams by tick; journal events come first
/// at equal ticks. Every input record appears exactly once.
inline Session integrate(const std::vector<JournalRecord>& journal,
                         const std::vector<TrackerRecord>& tracker, std::string session_id = {},
                         std::string designer_id = {}) {
  if (journal.empty() && tracker.empty())
    throw Error("EmptySession", "no records to integrate for session '" + session_id + "'");
  detail::require_monotone(journal, "journal");
  detail::require_monotone(tracker, "tracker");

  Session session;
  session.session_id = std::move(session_id);
  session.designer_id = std::move(designer_id);
  session.events.reserve(journal.size() + tracker.size());

  size_t j = 0, t = 0;
  while (j < journal.size() || t < tracker.size()) {
    const bool take_journal =
        t >= tracker.size() || (j < journal.size() && journal[j].tick <= tracker[t].tick);
    if (take_journal) {
      session.events.push_back(to_event(journal[j++]));
    } else {
      session.events.push_back(to_event(tracker[t++]));
    }
  }
  return session;
}

struct ConcatResult {
  std::vector<SessionEvent> events;
  std::vector<size_t> boundaries;  // index of the first event of each later session
  std::vector<std::string> warnings;
};

/// Concatenates one designer's sessions into the windowing substrate.
/// Sessions must already be in chronological order; overlapping tick ranges
/// only warn (clock skew happens), but out-of-order sessions are an error.
inline ConcatResult concat_sessions(const std::vector<Session>& sessions) {
  ConcatResult out;
  for (size_t i = 1; i < sessions.size(); ++i) {
    if (sessions[i].designer_id != sessions[0].designer_id)
      throw Error("DesignerMismatch", "session '" + sessions[i].session_id +
                                          "' belongs to a different designer");
  }
  for (size_t i = 0; i < sessions.size(); ++i) {
    const Session& s = sessions[i];
    if (s.events.empty())
      throw Error("EmptySession", "session '" + s.session_id + "' has no events");
    if (i > 0) {
      const Ticks prev_first = sessions[i - 1].events.front().tick;
      const Ticks prev_last = sessions[i - 1].events.back().tick;
      if (s.events.front().tick < prev_first)
        throw Error("SessionsNotChronological",
                    "session '" + s.session_id + "' starts before its predecessor");
      if (s.events.front().tick < prev_last)
        out.warnings.push_back("session '" + s.session_id +
                               "' overlaps the tick range of its predecessor");
      out.boundaries.push_back(out.events.size());
    }
    out.events.insert(out.events.end(), s.events.begin(), s.events.end());
  }
  return out;
}

// --- session file format ------------------------------------------------

inline constexpr std::string_view kSessionHeader = "ticks,source,category,method,count,undo";
inline constexpr std::string_view kSessionHeaderLegacy = "ticks,source,category,method,count";

inline std::string_view category_name(EventCategory c) {
  switch (c) {
    case EventCategory::Command: return "Command";
    case EventCategory::PushButton: return "PushButton";
    case EventCategory::TransactionSuccess: return "TransactionSuccess";
    case EventCategory::OtherTransaction: return "OtherTransaction";
    case EventCategory::ElementsAdded: return "ElementsAdded";
    case EventCategory::ElementsDeleted: return "ElementsDeleted";
    case EventCategory::ElementsModified: return "ElementsModified";
    case EventCategory::KeyPress: return "KeyPress";
    case EventCategory::OtherJrn: return "OtherJrn";
  }
  return "";
}

inline bool category_from_name(std::string_view name, EventCategory& out) {
  if (name == "Command") out = EventCategory::Command;
  else if (name == "PushButton") out = EventCategory::PushButton;
  else if (name == "TransactionSuccess") out = EventCategory::TransactionSuccess;
  else if (name == "OtherTransaction") out = EventCategory::OtherTransaction;
  else if (name == "ElementsAdded") out = EventCategory::ElementsAdded;
  else if (name == "ElementsDeleted") out = EventCategory::ElementsDeleted;
  else if (name == "ElementsModified") out = EventCategory::ElementsModified;
  else if (name == "KeyPress") out = EventCategory::KeyPress;
  else if (name == "OtherJrn") out = EventCategory::OtherJrn;
  else return false;
  return true;
}

inline bool method_from_name(std::string_view name, CommandMethod& out) {
  if (name == "Ribbon") out = CommandMethod::Ribbon;
  else if (name == "AccelKey") out = CommandMethod::AccelKey;
  else if (name == "Internal") out = CommandMethod::Internal;
  else if (name == "None") out = CommandMethod::None;
  else return false;
  return true;
}

inline std::string format_session_csv(const std::vector<SessionEvent>& events) {
  std::string out(kSessionHeader);
  out += '\n';
  for (const auto& ev : events) {
    out += std::to_string(ev.tick);
    out += ev.source == EventSource::Journal ? ",Journal," : ",Tracker,";
    out += category_name(ev.category);
    out += ',';
    out += method_name(ev.method);
    out += ',';
    out += std::to_string(ev.count);
    out += ev.undo ? ",1\n" : ",0\n";
  }
  return out;
}

/// Reads the session format. The legacy five-column header (without `undo`)
/// is accepted for third-party data; undo then defaults to 0.
inline std::vector<SessionEvent> parse_session_csv(std::string_view text) {
  const std::vector<std::string> lines = split_lines(text);
  if (lines.empty()) throw Error("WrongFileFormat", "empty session file");
  const std::string_view header = trim(lines[0]);
  bool has_undo_column;
  if (header == kSessionHeader) has_undo_column = true;
  else if (header == kSessionHeaderLegacy) has_undo_column = false;
  else throw Error("WrongFileFormat", "unrecognized session header '" + std::string(header) + "'");

  std::vector<SessionEvent> events;
  events.reserve(lines.size() - 1);
  for (size_t idx = 1; idx < lines.size(); ++idx) {
    const auto fields = split_view(trim(lines[idx]), ',');
    const size_t expected = has_undo_column ? 6u : 5u;
    if (fields.size() != expected)
      throw Error("WrongFileFormat",
                  "session line " + std::to_string(idx + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected " + std::to_string(expected));
    SessionEvent ev;
    if (!parse_i64(fields[0], ev.tick) || ev.tick < 0)
      throw Error("WrongFileFormat", "bad tick on session line " + std::to_string(idx + 1));
    if (fields[1] == "Journal") ev.source = EventSource::Journal;
    else if (fields[1] == "Tracker") ev.source = EventSource::Tracker;
    else throw Error("WrongFileFormat", "bad source on session line " + std::to_string(idx + 1));
    if (!category_from_name(fields[2], ev.category))
      throw Error("WrongFileFormat", "bad category on session line " + std::to_string(idx + 1));
    if (!method_from_name(fields[3], ev.method))
      throw Error("WrongFileFormat", "bad method on session line " + std::to_string(idx + 1));
    if (!parse_i64(fields[4], ev.count) || ev.count < 1)
      throw Error("WrongFileFormat", "bad count on session line " + std::to_string(idx + 1));
    if (has_undo_column) {
      if (fields[5] == "1") ev.undo = true;
      else if (fields[5] == "0") ev.undo = false;
      else throw Error("WrongFileFormat", "bad undo flag on session line " + std::to_string(idx + 1));
    }
    if (!event_consistent(ev))
      throw Error("WrongFileFormat",
                  "inconsistent source/category on session line " + std::to_string(idx + 1));
    events.push_back(ev);
  }
  return events;
}

}  // namespace bimlog
