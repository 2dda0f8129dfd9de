#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "bimlog/ingest.hpp"
#include "bimlog/quality.hpp"
#include "bimlog/rng.hpp"
#include "bimlog/tick_time.hpp"
#include "bimlog/util.hpp"

#include <json.hpp>

namespace bimlog {

using Json = nlohmann::ordered_json;

/// Latent designer traits in [0,1]; everything a designer does is a
/// deterministic function of these plus the seed.
struct DesignerProfile {
  double skill = 0.5;
  double intent_stability = 0.5;
  double engagement = 0.5;
  std::uint64_t seed = 0;
};

struct GenConfig {
  enum class Preset { Paper, Small };

  size_t n_designers = 68;
  size_t sessions_min = 8;
  size_t sessions_max = 14;
  size_t events_min = 35000;
  size_t events_max = 85000;
  double noise_sd = 2.0;
  Preset preset = Preset::Paper;

  static GenConfig paper() { return GenConfig{}; }

  static GenConfig small() {
    GenConfig c;
    c.preset = Preset::Small;
    c.sessions_min = 3;
    c.sessions_max = 5;
    c.events_min = 4000;
    c.events_max = 8000;
    return c;
  }

  void validate() const {
    if (n_designers < 1) throw Error("InvalidConfig", "need at least one designer");
    if (sessions_min < 1 || sessions_min > sessions_max)
      throw Error("InvalidConfig", "bad sessions range");
    if (events_min < 100 || events_min > events_max)
      throw Error("InvalidConfig", "bad events range");
    if (noise_sd < 0) throw Error("InvalidConfig", "noise sd must be >= 0");
  }
};

// Score formula coefficients, frozen after calibrating against the target
// population statistics (mean ~70.9, sd ~7.6 with Beta(2,2) traits and 2.0
// points of noise).
constexpr double kScoreIntercept = 44.0;
constexpr double kScoreSkillCoef = 25.0;
constexpr double kScoreStabilityCoef = 18.0;
constexpr double kScoreEngagementCoef = 11.0;

/// Ground-truth score: linear in the traits plus Gaussian noise, rounded and
/// clamped into the rubric envelope.
inline int true_score(const DesignerProfile& profile, double noise_draw) {
  const double raw = kScoreIntercept + kScoreSkillCoef * profile.skill +
                     kScoreStabilityCoef * profile.intent_stability +
                     kScoreEngagementCoef * profile.engagement + noise_draw;
  const double rounded = std::round(raw);
  return static_cast<int>(std::clamp(rounded, static_cast<double>(kScoreMin),
                                     static_cast<double>(kScoreMax)));
}

/// Decomposes a total score into benchmark-relative assessment deltas whose
/// rubric evaluation reproduces the total exactly. The complexity adjustment
/// absorbs parity; the even remainder is water-filled across the other parts.
inline AssessmentInput assessment_for_total(int total) {
  const int delta = total - 70;  // in [-32, +24] by the score envelope
  int complexity = 0;
  bool found = false;
  const int guess = static_cast<int>(std::lround(delta * 10.0 / 34.0));
  for (int radius = 0; radius <= 21 && !found; ++radius) {
    for (int sign = 0; sign < (radius == 0 ? 1 : 2) && !found; ++sign) {
      const int candidate = guess + (sign == 0 ? radius : -radius);
      if (candidate < -10 || candidate > 10) continue;
      const int rem = delta - candidate;
      if (rem % 2 != 0) continue;
      if (rem < -22 || rem > 14) continue;
      complexity = candidate;
      found = true;
    }
  }
  if (!found)
    throw Error("InvalidConfig", "total " + std::to_string(total) + " outside the score envelope");
  int rem = delta - complexity;

  // completeness offset in [-6,4], accuracy offset in [-8,4], struct offset in [-8,6]
  std::array<int, 3> offsets = {0, 0, 0};
  const std::array<int, 3> lo = {-6, -8, -8};
  const std::array<int, 3> hi = {4, 4, 6};
  while (rem != 0) {
    bool moved = false;
    for (size_t i = 0; i < 3 && rem != 0; ++i) {
      if (rem > 0 && offsets[i] + 2 <= hi[i]) {
        offsets[i] += 2;
        rem -= 2;
        moved = true;
      } else if (rem < 0 && offsets[i] - 2 >= lo[i]) {
        offsets[i] -= 2;
        rem += 2;
        moved = true;
      }
    }
    if (!moved)
      throw Error("InvalidConfig", "score decomposition stuck at total " + std::to_string(total));
  }

  AssessmentInput input;
  input.arch_completeness_delta = offsets[0] / 2;
  input.arch_error_delta = -offsets[1] / 2;
  input.complexity_adjustment = complexity;
  input.struct_delta = offsets[2] / 2;
  return input;
}

struct GroundTruthRow {
  std::string designer_id;
  DesignerProfile profile;
  int true_total = 0;
  AssessmentInput assessment;
  size_t n_sessions = 0;
  size_t n_events = 0;
};

struct SessionFiles {
  std::string journal_text;
  std::string tracker_text;
};

struct DesignerBundle {
  std::vector<SessionFiles> sessions;
  GroundTruthRow truth;
};

namespace detail {

// Event mixture weights. Each source category has a fixed budget and traits
// only reallocate within it, so the total never varies and no flat category
// picks up trait signal through normalization. Skill moves command execution
// from the ribbon (and dialog buttons) toward shortcuts with a cubic link a
// global linear fit approximates poorly; unstable intent reallocates element
// work toward deletions.
struct MixWeights {
  double ribbon, accelkey, internal_cmd, pushbutton;
  double trans_ok, trans_other;
  double add, modify, del, keypress, other_jrn;

  static MixWeights from(const DesignerProfile& p) {
    MixWeights w{};
    const double skill3 = p.skill * p.skill * p.skill;
    const double unskill3 = (1.0 - p.skill) * (1.0 - p.skill) * (1.0 - p.skill);
    const double unstable3 = (1.0 - p.intent_stability) * (1.0 - p.intent_stability) *
                             (1.0 - p.intent_stability);

    const double command_budget = 0.30;
    const double accel_frac = 0.06 + 0.66 * skill3;
    const double internal_frac = 0.12;
    w.accelkey = command_budget * accel_frac;
    w.internal_cmd = command_budget * internal_frac;
    w.ribbon = command_budget * (1.0 - internal_frac - accel_frac);

    const double ui_budget = 0.20;  // dialog buttons vs plain key presses
    w.pushbutton = ui_budget * (0.18 + 0.64 * unskill3);
    w.keypress = ui_budget - w.pushbutton;

    const double element_budget = 0.27;
    w.del = element_budget * (0.05 + 0.44 * unstable3);
    w.add = (element_budget - w.del) * 0.55;
    w.modify = (element_budget - w.del) * 0.45;

    w.trans_ok = 0.16;
    w.trans_other = 0.02;
    w.other_jrn = 0.02;
    return w;
  }

  double total() const {
    return ribbon + accelkey + internal_cmd + pushbutton + trans_ok + trans_other + add + modify +
           del + keypress + other_jrn;
  }
};

enum class EventPick {
  Ribbon,
  AccelKey,
  InternalCmd,
  PushButton,
  TransOk,
  TransOther,
  Add,
  Modify,
  Delete,
  KeyPress,
  OtherJrn,
};

inline EventPick pick_event(Rng& rng, const MixWeights& w) {
  double pick = rng.uniform() * w.total();
  if ((pick -= w.ribbon) < 0) return EventPick::Ribbon;
  if ((pick -= w.accelkey) < 0) return EventPick::AccelKey;
  if ((pick -= w.internal_cmd) < 0) return EventPick::InternalCmd;
  if ((pick -= w.pushbutton) < 0) return EventPick::PushButton;
  if ((pick -= w.trans_ok) < 0) return EventPick::TransOk;
  if ((pick -= w.trans_other) < 0) return EventPick::TransOther;
  if ((pick -= w.add) < 0) return EventPick::Add;
  if ((pick -= w.modify) < 0) return EventPick::Modify;
  if ((pick -= w.del) < 0) return EventPick::Delete;
  if ((pick -= w.keypress) < 0) return EventPick::KeyPress;
  return EventPick::OtherJrn;
}

inline constexpr std::array<std::string_view, 10> kCommandDetails = {
    "Create a basic wall on the current level , ID_OBJECTS_WALL",
    "Place a door into a hosting wall , ID_OBJECTS_DOOR",
    "Place a window into a hosting wall , ID_OBJECTS_WINDOW",
    "Create a floor boundary sketch , ID_OBJECTS_FLOOR",
    "Create a roof by footprint outline , ID_OBJECTS_ROOF",
    "Place a structural column on grid intersection , ID_OBJECTS_COLUMN",
    "Draw a model line in the active sketch view , ID_OBJECTS_MODEL_LINE",
    "Trim or extend elements to a picked boundary , ID_EDIT_TRIM",
    "Mirror the selected elements across an axis , ID_EDIT_MIRROR",
    "Align the selected element to a reference plane , ID_EDIT_ALIGN",
};

inline constexpr std::array<std::string_view, 4> kUndoDetails = {
    "Cancel the current operation , ID_CANCEL_EDITOR",
    "Undo the last modeling action , ID_UNDO_ACTION",
    "Cancel the active placement mode , ID_CANCEL_PLACEMENT",
    "Undo the recent sketch edit , ID_UNDO_SKETCH",
};

inline constexpr std::array<std::string_view, 6> kPushButtonDetails = {
    "Dialog confirmation clicked , IDOK , Element Properties",
    "Dialog confirmation clicked , IDOK , Type Selector",
    "Apply view template changes , ID_APPLY , View Properties",
    "Finish the active sketch panel , ID_FINISH_SKETCH , Sketch Panel",
    "Accept the constraint warning dialog , IDOK , Warning Dialog",
    "Close the family type browser , ID_CLOSE , Family Browser",
};

inline constexpr std::array<std::string_view, 8> kTransactionNames = {
    "Create Wall", "Place Door", "Place Window", "Create Floor",
    "Modify Element", "Move Selection", "Create Roof", "Place Column",
};

inline constexpr std::array<std::string_view, 8> kElementCategories = {
    "Wall", "Door", "Window", "Floor", "Roof", "Stair", "Column", "Beam",
};

inline constexpr std::array<std::string_view, 6> kKeyNames = {
    "Esc", "Enter", "Tab", "Space", "Shift+Click", "Ctrl+Click",
};

inline constexpr std::array<std::string_view, 4> kOtherJrnLines = {
    "Jrn.Wheel , \"0 , 512 , 384\"",
    "Jrn.MouseMove , \"0 , 812 , 404\"",
    "Jrn.Size , \"0 , 1920 , 1017\"",
    "Jrn.Activate , \"1 , Floor Plan: Level 1\"",
};

inline constexpr std::array<std::string_view, 4> kSystemLines = {
    "' 0:< ::0:: Delta VM: Avail 101352 MB, Used 1034 MB, Peak 1322 MB",
    "'H worker pool heartbeat ok",
    "' 0:< SLOG $01a2 session context refresh",
    "' 0:< ::0:: Mc: 12 Mr: 48 dialog cache swept",
};

inline std::int64_t sample_component_count(Rng& rng, double scale, std::int64_t cap) {
  const double u = rng.uniform_open();
  const double extra = std::floor(-std::log(u) * scale);
  return 1 + std::min<std::int64_t>(cap - 1, static_cast<std::int64_t>(extra));
}

// Inter-event gap: a sub-minute working gap most of the time, with pauses
// injected at an engagement-dependent rate. At engagement 1 the >5 min band
// has weight zero, so such gaps cannot occur inside a session.
inline Ticks sample_gap(Rng& rng, const DesignerProfile& p) {
  const double p_pause = 0.010 + 0.030 * (1.0 - p.engagement);
  if (rng.uniform() < p_pause) {
    const double w12 = 0.50;
    const double w25 = 0.30;
    const double wgt5 = 0.20 * (1.0 - p.engagement);
    const double pick = rng.uniform() * (w12 + w25 + wgt5);
    if (pick < w12) return static_cast<Ticks>(rng.uniform(60000.0, 119999.0));
    if (pick < w12 + w25) return static_cast<Ticks>(rng.uniform(120000.0, 299999.0));
    return static_cast<Ticks>(rng.uniform(300000.0, 1500000.0));
  }
  // slower base pace for less skilled designers; stays below the pause bands
  const double gap = std::exp(rng.normal(7.0 + 0.6 * (1.0 - p.skill), 0.9));
  return static_cast<Ticks>(std::clamp(gap, 150.0, 45000.0));
}

template <typename Pool>
std::string_view pool_pick(Rng& rng, const Pool& pool) {
  return pool[static_cast<size_t>(rng.uniform_int(static_cast<std::uint64_t>(pool.size())))];
}

}  // namespace detail

/// Generates one designer's session files. Events realize the planted
/// monotone links between traits and behavior; the files are guaranteed to
/// parse back through the ingest grammar with zero malformed lines.
inline DesignerBundle gen_designer(const DesignerProfile& profile, const GenConfig& config,
                                   const std::string& designer_id) {
  config.validate();
  DesignerBundle bundle;
  bundle.truth.designer_id = designer_id;
  bundle.truth.profile = profile;

  // the score stream is independent of event generation, so presets that
  // rescale event volume leave the score sheet unchanged
  Rng score_rng(derive_seed(profile.seed, 1));
  bundle.truth.true_total = true_score(profile, score_rng.normal(0.0, config.noise_sd));
  bundle.truth.assessment = assessment_for_total(bundle.truth.true_total);

  Rng structure_rng(derive_seed(profile.seed, 2));
  const size_t n_sessions = static_cast<size_t>(structure_rng.uniform_int(
      static_cast<std::int64_t>(config.sessions_min), static_cast<std::int64_t>(config.sessions_max)));
  const size_t total_events = static_cast<size_t>(structure_rng.uniform_int(
      static_cast<std::int64_t>(config.events_min), static_cast<std::int64_t>(config.events_max)));
  bundle.truth.n_sessions = n_sessions;
  bundle.truth.n_events = total_events;

  // proportional session lengths with mild jitter, exact total
  std::vector<double> shares(n_sessions);
  double share_sum = 0.0;
  for (auto& s : shares) {
    s = structure_rng.uniform(0.7, 1.3);
    share_sum += s;
  }
  std::vector<size_t> session_events(n_sessions);
  size_t assigned = 0;
  for (size_t k = 0; k < n_sessions; ++k) {
    session_events[k] = std::max<size_t>(
        50, static_cast<size_t>(static_cast<double>(total_events) * shares[k] / share_sum));
    assigned += session_events[k];
  }
  size_t adjust = 0;
  while (assigned > total_events) {
    if (session_events[adjust % n_sessions] > 50) {
      --session_events[adjust % n_sessions];
      --assigned;
    }
    ++adjust;
  }
  while (assigned < total_events) {
    ++session_events[0];
    ++assigned;
  }

  const detail::MixWeights mix = detail::MixWeights::from(profile);
  const double p_undo =
      0.04 + 0.10 * (1.0 - profile.intent_stability) * (1.0 - profile.intent_stability);

  Ticks clock = to_ticks(CivilTime{2023, 2, 6, 9, 0, 0, 0}) +
                static_cast<Ticks>(structure_rng.uniform(0.0, 6.0 * static_cast<double>(kMsPerHour)));

  for (size_t k = 0; k < n_sessions; ++k) {
    Rng rng(derive_seed(profile.seed, 100 + k));
    std::string journal;
    std::string tracker(kTrackerHeader);
    tracker += '\n';
    journal.reserve(session_events[k] * 90);
    tracker.reserve(session_events[k] * 45);

    for (size_t e = 0; e < session_events[k]; ++e) {
      if (e > 0) clock += detail::sample_gap(rng, profile);

      // occasional system noise the journal parser must skip over
      if (rng.uniform() < 0.03) {
        journal += detail::pool_pick(rng, detail::kSystemLines);
        journal += '\n';
      }

      const detail::EventPick pick = detail::pick_event(rng, mix);
      switch (pick) {
        case detail::EventPick::Ribbon:
        case detail::EventPick::AccelKey:
        case detail::EventPick::InternalCmd: {
          JournalRecord rec;
          rec.tick = clock;
          rec.kind = JournalKind::Command;
          rec.method = pick == detail::EventPick::Ribbon     ? CommandMethod::Ribbon
                       : pick == detail::EventPick::AccelKey ? CommandMethod::AccelKey
                                                             : CommandMethod::Internal;
          const bool undo = rng.uniform() < p_undo;
          rec.details.emplace_back(undo ? detail::pool_pick(rng, detail::kUndoDetails)
                                        : detail::pool_pick(rng, detail::kCommandDetails));
          journal += format_journal_line(rec);
          journal += '\n';
          break;
        }
        case detail::EventPick::PushButton: {
          JournalRecord rec;
          rec.tick = clock;
          rec.kind = JournalKind::PushButton;
          rec.details.emplace_back(detail::pool_pick(rng, detail::kPushButtonDetails));
          journal += format_journal_line(rec);
          journal += '\n';
          break;
        }
        case detail::EventPick::TransOk:
        case detail::EventPick::TransOther: {
          JournalRecord rec;
          rec.tick = clock;
          rec.kind = JournalKind::Transaction;
          rec.details.emplace_back(pick == detail::EventPick::TransOk ? "Transaction Successful"
                                                                      : "Transaction Rolled Back");
          rec.details.emplace_back(detail::pool_pick(rng, detail::kTransactionNames));
          journal += format_journal_line(rec);
          journal += '\n';
          break;
        }
        case detail::EventPick::OtherJrn: {
          journal += "'C ";
          journal += format_journal_timestamp(from_ticks(clock));
          journal += "; ";
          journal += detail::pool_pick(rng, detail::kOtherJrnLines);
          journal += '\n';
          break;
        }
        case detail::EventPick::Add:
        case detail::EventPick::Delete:
        case detail::EventPick::Modify: {
          TrackerRecord rec;
          rec.tick = clock;
          if (pick == detail::EventPick::Add) {
            rec.kind = TrackerKind::ElementsAdded;
            rec.count = detail::sample_component_count(rng, 1.3, 40);
          } else if (pick == detail::EventPick::Delete) {
            rec.kind = TrackerKind::ElementsDeleted;
            rec.count = detail::sample_component_count(rng, 1.8, 60);
          } else {
            rec.kind = TrackerKind::ElementsModified;
            rec.count = detail::sample_component_count(rng, 2.0, 80);
          }
          rec.payload = std::string(detail::pool_pick(rng, detail::kElementCategories));
          tracker += format_tracker_line(rec);
          tracker += '\n';
          break;
        }
        case detail::EventPick::KeyPress: {
          TrackerRecord rec;
          rec.tick = clock;
          rec.kind = TrackerKind::KeyPress;
          rec.count = 1;
          rec.payload = std::string(detail::pool_pick(rng, detail::kKeyNames));
          tracker += format_tracker_line(rec);
          tracker += '\n';
          break;
        }
      }
    }

    bundle.sessions.push_back({std::move(journal), std::move(tracker)});
    // Inter-session break keeps tick ranges disjoint and chronological. Its
    // length scales with disengagement and stays comparable to a session's
    // span, so the boundary gap does not drown the within-session idle signal.
    const double break_scale = 1.0 + 2.0 * (1.0 - profile.engagement);
    clock += static_cast<Ticks>(break_scale *
                                structure_rng.uniform(10.0 * static_cast<double>(kMsPerMinute),
                                                      40.0 * static_cast<double>(kMsPerMinute)));
  }
  return bundle;
}

struct CorpusSummary {
  std::vector<ScoreRow> scores;
  Json manifest;
};

inline std::string designer_name(size_t index_one_based) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "d%03zu", index_one_based);
  return buf;
}

/// Generates the full corpus on disk: one directory per designer with the
/// session pairs, plus scores.csv and ground_truth.json at the top level.
inline CorpusSummary gen_corpus(const GenConfig& config, std::uint64_t master_seed,
                                const std::filesystem::path& out_dir, size_t workers = 1) {
  config.validate();
  std::filesystem::create_directories(out_dir);

  std::vector<DesignerBundle> bundles(config.n_designers);
  parallel_for(config.n_designers, workers, [&](size_t i) {
    DesignerProfile profile;
    profile.seed = derive_seed(master_seed, i + 1);
    // trait stream id frozen during calibration of the default corpus
    Rng trait_rng(derive_seed(profile.seed, 17));
    profile.skill = trait_rng.beta22();
    profile.intent_stability = trait_rng.beta22();
    profile.engagement = trait_rng.beta22();
    bundles[i] = gen_designer(profile, config, designer_name(i + 1));
  });

  CorpusSummary summary;
  Json designers = Json::array();
  for (size_t i = 0; i < bundles.size(); ++i) {
    const DesignerBundle& bundle = bundles[i];
    const std::filesystem::path dir = out_dir / bundle.truth.designer_id;
    std::filesystem::create_directories(dir);
    for (size_t k = 0; k < bundle.sessions.size(); ++k) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "session_%02zu", k + 1);
      write_file(dir / (std::string(stem) + ".journal.txt"), bundle.sessions[k].journal_text);
      write_file(dir / (std::string(stem) + ".tracker.csv"), bundle.sessions[k].tracker_text);
    }

    const QualityScore qs = score(bundle.truth.assessment);
    summary.scores.push_back({bundle.truth.designer_id, qs});

    designers.push_back({{"designer_id", bundle.truth.designer_id},
                         {"seed", bundle.truth.profile.seed},
                         {"skill", bundle.truth.profile.skill},
                         {"intent_stability", bundle.truth.profile.intent_stability},
                         {"engagement", bundle.truth.profile.engagement},
                         {"true_total", bundle.truth.true_total},
                         {"assessment",
                          {{"arch_completeness_delta", bundle.truth.assessment.arch_completeness_delta},
                           {"arch_error_delta", bundle.truth.assessment.arch_error_delta},
                           {"complexity_adjustment", bundle.truth.assessment.complexity_adjustment},
                           {"struct_delta", bundle.truth.assessment.struct_delta}}},
                         {"n_sessions", bundle.truth.n_sessions},
                         {"n_events", bundle.truth.n_events}});
  }

  summary.manifest["version"] = 1;
  summary.manifest["master_seed"] = master_seed;
  summary.manifest["config"] = {{"n_designers", config.n_designers},
                                {"sessions_min", config.sessions_min},
                                {"sessions_max", config.sessions_max},
                                {"events_min", config.events_min},
                                {"events_max", config.events_max},
                                {"noise_sd", config.noise_sd},
                                {"preset", config.preset == GenConfig::Preset::Paper ? "paper" : "small"}};
  summary.manifest["score_coefficients"] = {{"intercept", kScoreIntercept},
                                            {"skill", kScoreSkillCoef},
                                            {"intent_stability", kScoreStabilityCoef},
                                            {"engagement", kScoreEngagementCoef}};
  summary.manifest["designers"] = std::move(designers);

  write_file(out_dir / "scores.csv", format_score_sheet(summary.scores));
  write_file(out_dir / "ground_truth.json", summary.manifest.dump(2) + "\n");
  return summary;
}

}  // namespace bimlog
