#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bimlog/tick_time.hpp"
#include "bimlog/util.hpp"

namespace bimlog {

enum class JournalKind { Command, PushButton, Transaction, OtherJrn };
enum class CommandMethod { Ribbon, AccelKey, Internal, None };

struct JournalRecord {
  Ticks tick = 0;
  JournalKind kind = JournalKind::OtherJrn;
  CommandMethod method = CommandMethod::None;  // != None iff kind == Command
  std::vector<std::string> details;

  friend bool operator==(const JournalRecord&, const JournalRecord&) = default;
};

enum class TrackerKind { ElementsAdded, ElementsDeleted, ElementsModified, KeyPress };

struct TrackerRecord {
  Ticks tick = 0;
  TrackerKind kind = TrackerKind::KeyPress;
  std::int64_t count = 1;  // component count for element kinds, always 1 for KeyPress
  std::string payload;     // key name or element category

  friend bool operator==(const TrackerRecord&, const TrackerRecord&) = default;
};

/// Per-file accounting. Every input line lands in exactly one of kept /
/// skipped-irrelevant / malformed, so the three always sum to lines_total.
struct ParseReport {
  size_t lines_total = 0;
  size_t lines_kept = 0;
  size_t lines_skipped_irrelevant = 0;
  size_t lines_malformed = 0;
  std::vector<std::pair<size_t, std::string>> malformed_samples;  // (1-based line, reason)
  std::vector<std::pair<size_t, std::string>> notes;              // kept lines worth flagging

  static constexpr size_t kMaxSamples = 32;

  void add_malformed(size_t line_no, std::string reason) {
    ++lines_malformed;
    if (malformed_samples.size() < kMaxSamples)
      malformed_samples.emplace_back(line_no, std::move(reason));
  }

  void add_note(size_t line_no, std::string text) {
    if (notes.size() < kMaxSamples) notes.emplace_back(line_no, std::move(text));
  }

  /// Fraction of lines that were behavioral records.
  double relevance() const {
    return lines_total == 0 ? 0.0 : static_cast<double>(lines_kept) / static_cast<double>(lines_total);
  }
};

namespace detail {

struct QuotedToken {
  std::string text;
  bool after_comma = false;
};

// Scans the remainder of a journal line after the data type: a sequence of
// double-quoted strings separated by commas and/or spaces. Details never
// contain a literal quote, so no escape handling.
inline bool scan_quoted_tokens(std::string_view rest, std::vector<QuotedToken>& out,
                               std::string& reason) {
  size_t pos = 0;
  bool saw_comma = false;
  while (pos < rest.size()) {
    char c = rest[pos];
    if (c == ' ' || c == '\t') {
      ++pos;
      continue;
    }
    if (c == ',') {
      if (saw_comma) {
        reason = "consecutive separators in details";
        return false;
      }
      saw_comma = true;
      ++pos;
      continue;
    }
    if (c == '"') {
      size_t close = rest.find('"', pos + 1);
      if (close == std::string_view::npos) {
        reason = "unterminated quoted string";
        return false;
      }
      out.push_back({std::string(rest.substr(pos + 1, close - pos - 1)), saw_comma});
      saw_comma = false;
      pos = close + 1;
      continue;
    }
    reason = "unexpected character in details";
    return false;
  }
  if (saw_comma) {
    reason = "trailing separator in details";
    return false;
  }
  return true;
}

}  // namespace detail

/// Parses journal text. Only lines whose data type begins with "Jrn." or
/// "jrn." are behavioral; everything else is skipped as a system line.
/// Structural problems in behavioral lines are recorded and skipped; the
/// parser itself never fails on content.
inline std::pair<std::vector<JournalRecord>, ParseReport> parse_journal(std::string_view text) {
  std::vector<JournalRecord> records;
  ParseReport report;
  const std::vector<std::string> lines = text.empty() ? std::vector<std::string>{} : split_lines(text);
  report.lines_total = lines.size();

  for (size_t idx = 0; idx < lines.size(); ++idx) {
    const size_t line_no = idx + 1;
    std::string_view line = lines[idx];

    if (line.size() < 3 || line.substr(0, 3) != "'C ") {
      ++report.lines_skipped_irrelevant;
      continue;
    }
    size_t semi = line.find(';', 3);
    if (semi == std::string_view::npos) {
      ++report.lines_skipped_irrelevant;
      continue;
    }
    std::string_view after = trim(line.substr(semi + 1));
    size_t type_end = after.find(' ');
    std::string_view data_type = type_end == std::string_view::npos ? after : after.substr(0, type_end);
    if (!(data_type.starts_with("Jrn.") || data_type.starts_with("jrn."))) {
      ++report.lines_skipped_irrelevant;
      continue;
    }

    CivilTime stamp;
    if (!parse_journal_timestamp(trim(line.substr(3, semi - 3)), stamp)) {
      report.add_malformed(line_no, "bad timestamp");
      continue;
    }

    JournalRecord rec;
    rec.tick = to_ticks(stamp);
    std::string_view kind_token = data_type.substr(4);
    if (kind_token == "Command") {
      rec.kind = JournalKind::Command;
    } else if (kind_token == "PushButton") {
      rec.kind = JournalKind::PushButton;
    } else if (kind_token == "Transaction") {
      rec.kind = JournalKind::Transaction;
    } else {
      rec.kind = JournalKind::OtherJrn;
    }

    std::vector<detail::QuotedToken> tokens;
    std::string reason;
    std::string_view rest = type_end == std::string_view::npos ? std::string_view{} : after.substr(type_end);
    if (!detail::scan_quoted_tokens(rest, tokens, reason)) {
      report.add_malformed(line_no, reason);
      continue;
    }

    size_t first_detail = 0;
    if (rec.kind == JournalKind::Command) {
      if (tokens.empty() || tokens[0].after_comma) {
        report.add_malformed(line_no, "command missing method token");
        continue;
      }
      const std::string& m = tokens[0].text;
      if (m == "Ribbon") {
        rec.method = CommandMethod::Ribbon;
      } else if (m == "AccelKey") {
        rec.method = CommandMethod::AccelKey;
      } else if (m == "Internal") {
        rec.method = CommandMethod::Internal;
      } else {
        rec.method = CommandMethod::Internal;
        report.add_note(line_no, "unknown command method \"" + m + "\" treated as Internal");
      }
      first_detail = 1;
    } else if (!tokens.empty() && !tokens[0].after_comma) {
      report.add_malformed(line_no, "unexpected method token for non-command record");
      continue;
    }

    bool bad_separator = false;
    for (size_t t = first_detail; t < tokens.size(); ++t) {
      if (!tokens[t].after_comma) {
        bad_separator = true;
        break;
      }
      rec.details.push_back(tokens[t].text);
    }
    if (bad_separator) {
      report.add_malformed(line_no, "detail missing comma separator");
      continue;
    }
    if (rec.details.empty()) {
      report.add_malformed(line_no, "record has no details");
      continue;
    }

    ++report.lines_kept;
    records.push_back(std::move(rec));
  }
  return {std::move(records), std::move(report)};
}

inline constexpr std::string_view kTrackerHeader = "ticks,timestamp,record_type,count,payload";

inline std::string_view tracker_kind_name(TrackerKind kind) {
  switch (kind) {
    case TrackerKind::ElementsAdded: return "ElementsAdded";
    case TrackerKind::ElementsDeleted: return "ElementsDeleted";
    case TrackerKind::ElementsModified: return "ElementsModified";
    case TrackerKind::KeyPress: return "KeyPress";
  }
  return "";
}

inline bool tracker_kind_from_name(std::string_view name, TrackerKind& out) {
  if (name == "ElementsAdded") out = TrackerKind::ElementsAdded;
  else if (name == "ElementsDeleted") out = TrackerKind::ElementsDeleted;
  else if (name == "ElementsModified") out = TrackerKind::ElementsModified;
  else if (name == "KeyPress") out = TrackerKind::KeyPress;
  else return false;
  return true;
}

/// Parses tracker CSV. The header must match exactly (anything else means the
/// caller handed in the wrong file). Ticks come verbatim from the tick column;
/// the human-readable timestamp column is never used.
inline std::pair<std::vector<TrackerRecord>, ParseReport> parse_tracker(std::string_view text) {
  std::vector<TrackerRecord> records;
  ParseReport report;
  const std::vector<std::string> lines = text.empty() ? std::vector<std::string>{} : split_lines(text);
  report.lines_total = lines.size();

  if (lines.empty() || trim(lines[0]) != kTrackerHeader)
    throw Error("WrongFileFormat", "tracker file must start with header '" + std::string(kTrackerHeader) + "'");
  ++report.lines_skipped_irrelevant;  // the header line

  for (size_t idx = 1; idx < lines.size(); ++idx) {
    const size_t line_no = idx + 1;
    std::string_view line = lines[idx];

    // payload is everything after the fourth comma, commas included
    std::array<std::string_view, 4> fields;
    size_t start = 0;
    bool short_line = false;
    for (auto& field : fields) {
      size_t pos = line.find(',', start);
      if (pos == std::string_view::npos) {
        short_line = true;
        break;
      }
      field = line.substr(start, pos - start);
      start = pos + 1;
    }
    if (short_line) {
      report.add_malformed(line_no, "expected 5 comma-separated fields");
      continue;
    }

    TrackerRecord rec;
    rec.payload = std::string(line.substr(start));
    if (!parse_i64(fields[0], rec.tick) || rec.tick < 0) {
      report.add_malformed(line_no, "non-integer tick");
      continue;
    }
    if (!tracker_kind_from_name(fields[2], rec.kind)) {
      report.add_malformed(line_no, "unknown record_type '" + std::string(fields[2]) + "'");
      continue;
    }
    if (!parse_i64(fields[3], rec.count) || rec.count < 1) {
      report.add_malformed(line_no, "count must be a positive integer");
      continue;
    }
    if (rec.kind == TrackerKind::KeyPress && rec.count != 1) {
      report.add_malformed(line_no, "KeyPress count must be 1");
      continue;
    }
    ++report.lines_kept;
    records.push_back(std::move(rec));
  }
  return {std::move(records), std::move(report)};
}

inline std::string_view journal_kind_token(JournalKind kind) {
  switch (kind) {
    case JournalKind::Command: return "Jrn.Command";
    case JournalKind::PushButton: return "Jrn.PushButton";
    case JournalKind::Transaction: return "Jrn.Transaction";
    case JournalKind::OtherJrn: return "Jrn.Other";
  }
  return "";
}

inline std::string_view method_name(CommandMethod method) {
  switch (method) {
    case CommandMethod::Ribbon: return "Ribbon";
    case CommandMethod::AccelKey: return "AccelKey";
    case CommandMethod::Internal: return "Internal";
    case CommandMethod::None: return "None";
  }
  return "";
}

inline std::string format_journal_line(const JournalRecord& rec) {
  std::string line = "'C ";
  line += format_journal_timestamp(from_ticks(rec.tick));
  line += "; ";
  line += journal_kind_token(rec.kind);
  if (rec.kind == JournalKind::Command) {
    line += " \"";
    line += method_name(rec.method);
    line += "\"";
  }
  for (const auto& detail : rec.details) {
    line += " , \"";
    line += detail;
    line += "\"";
  }
  return line;
}

inline std::string format_tracker_line(const TrackerRecord& rec) {
  std::string line = std::to_string(rec.tick);
  line += ',';
  line += format_iso_timestamp(from_ticks(rec.tick));
  line += ',';
  line += tracker_kind_name(rec.kind);
  line += ',';
  line += std::to_string(rec.count);
  line += ',';
  line += rec.payload;
  return line;
}

inline std::string format_tracker_file(const std::vector<TrackerRecord>& records) {
  std::string out(kTrackerHeader);
  out += '\n';
  for (const auto& rec : records) {
    out += format_tracker_line(rec);
    out += '\n';
  }
  return out;
}

}  // namespace bimlog
