#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bimlog/explain.hpp"
#include "bimlog/features.hpp"
#include "bimlog/ingest.hpp"
#include "bimlog/learn.hpp"
#include "bimlog/quality.hpp"
#include "bimlog/sessionize.hpp"
#include "bimlog/synth.hpp"
#include "bimlog/util.hpp"
#include "bimlog/windows.hpp"

namespace bimlog {

struct SweepGrid {
  size_t fixed_n = 3000;
  std::vector<size_t> s_values = {50, 250, 750, 1500};
  size_t fixed_s = 500;
  std::vector<size_t> n_values = {500, 1000, 2000, 3000};
};

struct PipelineConfig {
  std::string corpus_dir;
  std::string workspace_dir;
  CleaningPolicy cleaning;
  WindowConfig window{3000, 500, true};
  SplitConfig split;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  size_t explain_max_samples = 512;
  SweepGrid sweep;
  // execution knob only; never part of the config hash or the run report,
  // so results stay byte-identical across worker counts
  size_t workers = 1;
};

inline Json config_to_json(const PipelineConfig& c) {
  Json j;
  j["corpus"] = c.corpus_dir;
  j["workspace"] = c.workspace_dir;
  j["cleaning"] = {{"min_journal_bytes", c.cleaning.min_journal_bytes},
                   {"min_rows", c.cleaning.min_rows},
                   {"max_tracker_coverage_deficit", c.cleaning.max_tracker_coverage_deficit}};
  j["window"] = {{"length_n", c.window.length_n},
                 {"step_s", c.window.step_s},
                 {"keep_short", c.window.keep_short}};
  j["split"] = {{"test_fraction", c.split.test_fraction},
                {"seed", c.split.seed},
                {"grouped", c.split.grouped}};
  j["seeds"] = c.seeds;
  j["explain_max_samples"] = c.explain_max_samples;
  j["sweep"] = {{"fixed_n", c.sweep.fixed_n},
                {"s_values", c.sweep.s_values},
                {"fixed_s", c.sweep.fixed_s},
                {"n_values", c.sweep.n_values}};
  return j;
}

inline PipelineConfig config_from_json(const Json& j) {
  PipelineConfig c;
  if (j.contains("corpus")) c.corpus_dir = j.at("corpus").get<std::string>();
  if (j.contains("workspace")) c.workspace_dir = j.at("workspace").get<std::string>();
  if (j.contains("cleaning")) {
    const Json& p = j.at("cleaning");
    if (p.contains("min_journal_bytes")) c.cleaning.min_journal_bytes = p.at("min_journal_bytes").get<std::int64_t>();
    if (p.contains("min_rows")) c.cleaning.min_rows = p.at("min_rows").get<std::int64_t>();
    if (p.contains("max_tracker_coverage_deficit"))
      c.cleaning.max_tracker_coverage_deficit = p.at("max_tracker_coverage_deficit").get<double>();
  }
  if (j.contains("window")) {
    const Json& p = j.at("window");
    if (p.contains("length_n")) c.window.length_n = p.at("length_n").get<size_t>();
    if (p.contains("step_s")) c.window.step_s = p.at("step_s").get<size_t>();
    if (p.contains("keep_short")) c.window.keep_short = p.at("keep_short").get<bool>();
  }
  if (j.contains("split")) {
    const Json& p = j.at("split");
    if (p.contains("test_fraction")) c.split.test_fraction = p.at("test_fraction").get<double>();
    if (p.contains("seed")) c.split.seed = p.at("seed").get<std::uint64_t>();
    if (p.contains("grouped")) c.split.grouped = p.at("grouped").get<bool>();
  }
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("explain_max_samples")) c.explain_max_samples = j.at("explain_max_samples").get<size_t>();
  if (j.contains("sweep")) {
    const Json& p = j.at("sweep");
    if (p.contains("fixed_n")) c.sweep.fixed_n = p.at("fixed_n").get<size_t>();
    if (p.contains("s_values")) c.sweep.s_values = p.at("s_values").get<std::vector<size_t>>();
    if (p.contains("fixed_s")) c.sweep.fixed_s = p.at("fixed_s").get<size_t>();
    if (p.contains("n_values")) c.sweep.n_values = p.at("n_values").get<std::vector<size_t>>();
  }
  return c;
}

inline std::string config_hash(const PipelineConfig& c) {
  return hex16(fnv1a64(config_to_json(c).dump()));
}

// --- ingest stage ------------------------------------------------------------

struct DesignerSequence {
  std::string designer_id;
  std::vector<SessionEvent> events;
  std::vector<size_t> boundaries;
};

struct IngestResult {
  std::vector<DesignerSequence> designers;  // sorted by designer id
  Json report;
};

/// Parses every session pair under the corpus, applies the cleaning policy,
/// merges accepted pairs and concatenates them per designer.
inline IngestResult ingest_corpus(const std::filesystem::path& corpus_dir,
                                  const CleaningPolicy& policy, size_t workers = 1) {
  if (!std::filesystem::is_directory(corpus_dir))
    throw Error("FileOpenFailed", "corpus directory not found: " + corpus_dir.string());

  std::vector<std::filesystem::path> designer_dirs;
  for (const auto& entry : std::filesystem::directory_iterator(corpus_dir))
    if (entry.is_directory()) designer_dirs.push_back(entry.path());
  std::sort(designer_dirs.begin(), designer_dirs.end());
  if (designer_dirs.empty())
    throw Error("EmptyCorpus", "no designer directories under " + corpus_dir.string());

  struct PerDesigner {
    DesignerSequence sequence;
    Json report;
    bool kept = false;
  };
  std::vector<PerDesigner> results(designer_dirs.size());

  parallel_for(designer_dirs.size(), workers, [&](size_t d) {
    const std::filesystem::path& dir = designer_dirs[d];
    const std::string designer_id = dir.filename().string();

    std::vector<std::filesystem::path> journal_files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() > 12 && name.substr(name.size() - 12) == ".journal.txt")
        journal_files.push_back(entry.path());
    }
    std::sort(journal_files.begin(), journal_files.end());

    Json session_reports = Json::array();
    std::vector<Session> accepted;
    size_t rejected = 0;
    for (const auto& journal_path : journal_files) {
      std::string stem = journal_path.filename().string();
      stem = stem.substr(0, stem.size() - 12);
      const std::filesystem::path tracker_path = dir / (stem + ".tracker.csv");
      if (!std::filesystem::exists(tracker_path))
        throw Error("FileOpenFailed", "missing tracker pair for " + journal_path.string());

      SessionPair pair;
      pair.pair_id = designer_id + "/" + stem;
      const std::string journal_text = read_file(journal_path);
      pair.journal_bytes = static_cast<std::int64_t>(journal_text.size());
      ParseReport journal_report, tracker_report;
      try {
        auto [journal_records, jr] = parse_journal(journal_text);
        pair.journal = std::move(journal_records);
        journal_report = std::move(jr);
        auto [tracker_records, tr] = parse_tracker(read_file(tracker_path));
        pair.tracker = std::move(tracker_records);
        tracker_report = std::move(tr);
      } catch (const Error& e) {
        throw Error(e.code(), journal_path.string() + ": " + e.what());
      }

      const CleanDecision decision = clean(pair, policy);
      Json reasons = Json::array();
      for (auto r : decision.reasons) reasons.push_back(std::string(reject_reason_name(r)));
      session_reports.push_back(
          {{"session", pair.pair_id},
           {"journal_bytes", pair.journal_bytes},
           {"journal", {{"lines_total", journal_report.lines_total},
                        {"lines_kept", journal_report.lines_kept},
                        {"lines_skipped_irrelevant", journal_report.lines_skipped_irrelevant},
                        {"lines_malformed", journal_report.lines_malformed},
                        {"relevance", journal_report.relevance()}}},
           {"tracker", {{"lines_total", tracker_report.lines_total},
                        {"lines_kept", tracker_report.lines_kept},
                        {"lines_malformed", tracker_report.lines_malformed}}},
           {"accepted", decision.accepted},
           {"reject_reasons", std::move(reasons)}});
      if (!decision.accepted) {
        ++rejected;
        continue;
      }
      try {
        accepted.push_back(integrate(pair.journal, pair.tracker, pair.pair_id, designer_id));
      } catch (const Error& e) {
        throw Error(e.code(), journal_path.string() + ": " + e.what());
      }
    }

    PerDesigner& out = results[d];
    out.report = {{"designer_id", designer_id},
                  {"sessions_total", journal_files.size()},
                  {"sessions_rejected", rejected},
                  {"sessions", std::move(session_reports)}};
    if (!accepted.empty()) {
      ConcatResult concat = concat_sessions(accepted);
      out.sequence.designer_id = designer_id;
      out.sequence.events = std::move(concat.events);
      out.sequence.boundaries = std::move(concat.boundaries);
      out.report["events"] = out.sequence.events.size();
      out.report["warnings"] = concat.warnings;
      out.kept = true;
    } else {
      out.report["events"] = 0;
      out.report["dropped"] = true;
    }
  });

  IngestResult result;
  Json designers = Json::array();
  size_t dropped = 0;
  for (auto& r : results) {
    designers.push_back(std::move(r.report));
    if (r.kept) result.designers.push_back(std::move(r.sequence));
    else ++dropped;
  }
  result.report["designers_total"] = designer_dirs.size();
  result.report["designers_kept"] = result.designers.size();
  result.report["designers_dropped"] = dropped;
  result.report["per_designer"] = std::move(designers);
  return result;
}

// --- windows + features stages -------------------------------------------------

inline std::map<std::string, double> load_score_totals(const std::filesystem::path& scores_csv) {
  std::map<std::string, double> totals;
  for (const auto& row : parse_score_sheet(read_file(scores_csv)))
    totals[row.designer_id] = static_cast<double>(row.score.total);
  return totals;
}

inline std::vector<WindowSample> build_windows(const std::vector<DesignerSequence>& designers,
                                               const WindowConfig& window,
                                               const std::map<std::string, double>& score_totals) {
  std::vector<std::pair<std::string, std::vector<WindowRange>>> ranges;
  ranges.reserve(designers.size());
  for (const auto& d : designers)
    ranges.emplace_back(d.designer_id, make_windows(d.events.size(), window));
  return attach_labels(ranges, score_totals);
}

inline std::vector<FeatureRow> build_features(const std::vector<DesignerSequence>& designers,
                                              const std::vector<WindowSample>& samples,
                                              size_t workers = 1) {
  std::map<std::string, const DesignerSequence*> by_id;
  for (const auto& d : designers) by_id[d.designer_id] = &d;

  std::vector<FeatureRow> rows(samples.size());
  parallel_for(samples.size(), workers, [&](size_t i) {
    const WindowSample& sample = samples[i];
    auto it = by_id.find(sample.designer_id);
    if (it == by_id.end())
      throw Error("MissingScore", "window references unknown designer " + sample.designer_id);
    std::span<const SessionEvent> events(it->second->events.data() + sample.start,
                                         sample.end - sample.start);
    rows[i] = {sample.designer_id, sample.start, sample.label, extract_features(events)};
  });
  return rows;
}

inline Dataset dataset_from_feature_rows(const std::vector<FeatureRow>& rows) {
  Dataset ds;
  ds.n_cols = kFeatureCount;
  ds.x.reserve(rows.size() * kFeatureCount);
  for (const auto& row : rows) {
    ds.x.insert(ds.x.end(), row.values.begin(), row.values.end());
    ds.y.push_back(row.label);
    ds.groups.push_back(row.designer_id);
  }
  return ds;
}

// --- learn stage ------------------------------------------------------------------

struct MeanLeaderboardRow {
  std::string model;
  size_t seeds_ok = 0;
  double train_rmse = 0.0;
  double train_r2 = 0.0;
  double test_rmse = 0.0;
  double test_r2 = 0.0;
};

struct LearnOutcome {
  std::vector<std::vector<LeaderboardRow>> per_seed;  // parallel to seeds
  std::vector<MeanLeaderboardRow> mean;               // ranked by mean test r2
  std::string best_model;
  AnyModel best;            // refitted on the first seed's split
  std::vector<size_t> train_idx, test_idx;  // the first seed's split
};

inline LearnOutcome run_learning(const Dataset& ds, const SplitConfig& split_template,
                                 std::span<const std::uint64_t> seeds, size_t workers = 1) {
  if (seeds.empty()) throw Error("InvalidConfig", "need at least one seed");
  const std::vector<ModelSpec> suite = default_suite(ds.n_cols);

  LearnOutcome outcome;
  for (std::uint64_t seed : seeds) {
    SplitConfig cfg = split_template;
    cfg.seed = seed;
    outcome.per_seed.push_back(compare_models(ds, suite, cfg, seed, workers));
  }

  // aggregate by model name in suite order
  for (const auto& spec : suite) {
    MeanLeaderboardRow mean_row;
    mean_row.model = spec.name;
    for (const auto& board : outcome.per_seed) {
      for (const auto& row : board) {
        if (row.model != spec.name || !row.ok) continue;
        ++mean_row.seeds_ok;
        mean_row.train_rmse += row.train_rmse;
        mean_row.train_r2 += row.train_r2;
        mean_row.test_rmse += row.test_rmse;
        mean_row.test_r2 += row.test_r2;
      }
    }
    if (mean_row.seeds_ok > 0) {
      const double n = static_cast<double>(mean_row.seeds_ok);
      mean_row.train_rmse /= n;
      mean_row.train_r2 /= n;
      mean_row.test_rmse /= n;
      mean_row.test_r2 /= n;
    }
    outcome.mean.push_back(mean_row);
  }
  std::stable_sort(outcome.mean.begin(), outcome.mean.end(),
                   [](const MeanLeaderboardRow& a, const MeanLeaderboardRow& b) {
                     if ((a.seeds_ok > 0) != (b.seeds_ok > 0)) return a.seeds_ok > 0;
                     if (a.test_r2 != b.test_r2) return a.test_r2 > b.test_r2;
                     if (a.test_rmse != b.test_rmse) return a.test_rmse < b.test_rmse;
                     return false;
                   });
  if (outcome.mean.empty() || outcome.mean.front().seeds_ok == 0)
    throw Error("InvalidConfig", "every model in the suite failed");
  outcome.best_model = outcome.mean.front().model;

  SplitConfig first = split_template;
  first.seed = seeds[0];
  const Split split = split_dataset(ds, first);
  outcome.train_idx = split.train_idx;
  outcome.test_idx = split.test_idx;
  const Dataset train = subset(ds, split.train_idx);
  for (const auto& spec : suite) {
    if (spec.name == outcome.best_model) {
      outcome.best = spec.fit(train, seeds[0], workers);
      break;
    }
  }
  return outcome;
}

inline Json leaderboard_to_json(const std::vector<LeaderboardRow>& board) {
  Json j = Json::array();
  for (const auto& row : board) {
    Json r = {{"model", row.model}, {"ok", row.ok}};
    if (row.ok) {
      r["train_rmse"] = row.train_rmse;
      r["train_r2"] = row.train_r2;
      r["test_rmse"] = row.test_rmse;
      r["test_r2"] = row.test_r2;
      r["n_test"] = row.n_test;
    } else {
      r["error"] = row.error;
    }
    j.push_back(std::move(r));
  }
  return j;
}

inline Json mean_leaderboard_to_json(const std::vector<MeanLeaderboardRow>& board) {
  Json j = Json::array();
  for (const auto& row : board) {
    j.push_back({{"model", row.model},
                 {"seeds_ok", row.seeds_ok},
                 {"train_rmse", row.train_rmse},
                 {"train_r2", row.train_r2},
                 {"test_rmse", row.test_rmse},
                 {"test_r2", row.test_r2}});
  }
  return j;
}

// --- explain stage ------------------------------------------------------------------

struct ExplainOutcome {
  std::vector<size_t> sample_indices;        // rows of the dataset that were explained
  std::vector<ShapExplanation> explanations;
  GlobalImportance importance;
  Dataset explained_rows;
};

constexpr size_t kBackgroundCap = 512;

/// Explains a deterministic subsample of rows. Forests get the exact tree
/// algorithm; other model kinds fall back to seeded permutation sampling with
/// background-mean substitution, the background being a seeded subsample of
/// the supplied matrix (normally the training rows), capped at 512.
inline ExplainOutcome run_explanation(const AnyModel& model, const Dataset& ds,
                                      const Dataset& background, size_t max_samples,
                                      std::uint64_t seed, size_t workers = 1) {
  const size_t n = ds.rows();
  if (n == 0) throw Error("TooFewRows", "nothing to explain");
  if (background.rows() == 0) throw Error("TooFewRows", "empty attribution background");

  ExplainOutcome out;
  out.sample_indices.resize(n);
  std::iota(out.sample_indices.begin(), out.sample_indices.end(), size_t{0});
  if (max_samples > 0 && max_samples < n) {
    Rng rng(derive_seed(seed, 0xe281a1ull));
    rng.shuffle(out.sample_indices);
    out.sample_indices.resize(max_samples);
    std::sort(out.sample_indices.begin(), out.sample_indices.end());
  }

  std::vector<size_t> background_rows(background.rows());
  std::iota(background_rows.begin(), background_rows.end(), size_t{0});
  if (background_rows.size() > kBackgroundCap) {
    Rng rng(derive_seed(seed, 0xbac49d00ull));
    rng.shuffle(background_rows);
    background_rows.resize(kBackgroundCap);
    std::sort(background_rows.begin(), background_rows.end());
  }
  std::vector<double> background_means(background.n_cols, 0.0);
  for (size_t r : background_rows)
    for (size_t c = 0; c < background.n_cols; ++c) background_means[c] += background.at(r, c);
  for (auto& m : background_means) m /= static_cast<double>(background_rows.size());

  out.explanations.resize(out.sample_indices.size());
  parallel_for(out.sample_indices.size(), workers, [&](size_t i) {
    const auto x = ds.row(out.sample_indices[i]);
    if (model.is_forest()) {
      out.explanations[i] = tree_shap(model.forest(), x);
    } else {
      const CoalitionFn f = make_coalition_fn(model, x, background_means);
      const SamplingEstimate est =
          shapley_sampling(f, ds.n_cols, 200, derive_seed(seed, out.sample_indices[i]));
      out.explanations[i].phi = est.phi;
      out.explanations[i].base_value = f(0);
      out.explanations[i].prediction = model.predict(x);
    }
  });

  out.explained_rows = subset(ds, out.sample_indices);
  out.importance = aggregate(out.explanations, out.explained_rows);
  return out;
}

inline ExplainOutcome run_explanation(const AnyModel& model, const Dataset& ds, size_t max_samples,
                                      std::uint64_t seed, size_t workers = 1) {
  return run_explanation(model, ds, ds, max_samples, seed, workers);
}

// --- full pipeline ------------------------------------------------------------------

struct RunResult {
  Json report;
  std::filesystem::path run_dir;
};

inline RunResult run_pipeline(const PipelineConfig& config) {
  using Clock = std::chrono::steady_clock;
  if (config.corpus_dir.empty() || config.workspace_dir.empty())
    throw Error("InvalidConfig", "corpus and workspace paths are required");
  config.window.validate();

  const std::string hash = config_hash(config);
  const std::filesystem::path run_dir = std::filesystem::path(config.workspace_dir) / ("run_" + hash);
  std::filesystem::create_directories(run_dir);
  write_file(run_dir / "config.json", config_to_json(config).dump(2) + "\n");

  Json timings;
  // runs one stage: wall-clock goes to timings.json (never into the report),
  // errors get the stage name prepended so failures point at their stage
  auto timed = [&timings](const char* stage, auto&& fn) {
    const auto start = Clock::now();
    try {
      auto result = fn();
      timings[std::string(stage) + "_ms"] =
          std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
      return result;
    } catch (const Error& e) {
      throw Error(e.code(), std::string("stage ") + stage + ": " + e.what());
    }
  };

  // ingest + sessionize
  IngestResult ingest = timed("ingest", [&] {
    return ingest_corpus(config.corpus_dir, config.cleaning, config.workers);
  });
  write_file(run_dir / "ingest_report.json", ingest.report.dump(2) + "\n");
  for (const auto& d : ingest.designers)
    write_file(run_dir / "sessions" / (d.designer_id + ".csv"), format_session_csv(d.events));

  // windows
  const std::map<std::string, double> score_totals =
      load_score_totals(std::filesystem::path(config.corpus_dir) / "scores.csv");
  const std::vector<WindowSample> samples = timed("windows", [&] {
    return build_windows(ingest.designers, config.window, score_totals);
  });
  write_file(run_dir / "windows.csv", format_window_manifest(samples));
  if (samples.empty()) throw Error("TooFewRows", "window stage produced no samples");

  // features
  const std::vector<FeatureRow> feature_rows = timed("features", [&] {
    return build_features(ingest.designers, samples, config.workers);
  });
  write_file(run_dir / "features.csv", format_feature_matrix(feature_rows));
  const Dataset ds = dataset_from_feature_rows(feature_rows);

  // learn
  const LearnOutcome learn = timed("learn", [&] {
    return run_learning(ds, config.split, config.seeds, config.workers);
  });
  write_file(run_dir / "best_model.json", model_to_json(learn.best).dump() + "\n");

  // explain; non-tree models substitute means of the training background
  const ExplainOutcome explain = timed("explain", [&] {
    const Dataset train = subset(ds, learn.train_idx);
    return run_explanation(learn.best, ds, train, config.explain_max_samples, config.seeds[0],
                           config.workers);
  });
  const std::vector<BeeswarmRow> swarm = beeswarm_table(explain.explanations, explain.explained_rows);
  write_file(run_dir / "beeswarm.csv",
             format_beeswarm_csv(swarm, std::span<const std::string_view>(kFeatureNames)));
  const Json importance_json = importance_to_json(
      explain.importance, std::span<const std::string_view>(kFeatureNames), explain.explanations.size());
  write_file(run_dir / "importance.json", importance_json.dump(2) + "\n");

  // deterministic run report; wall-clock timings go to a separate file
  RunResult result;
  result.run_dir = run_dir;
  result.report["version"] = 1;
  result.report["config_hash"] = hash;
  result.report["config"] = config_to_json(config);
  result.report["ingest"] = {{"designers_total", ingest.report["designers_total"]},
                             {"designers_kept", ingest.report["designers_kept"]},
                             {"designers_dropped", ingest.report["designers_dropped"]}};
  result.report["n_samples"] = samples.size();
  Json per_seed = Json::array();
  for (size_t i = 0; i < config.seeds.size(); ++i)
    per_seed.push_back({{"seed", config.seeds[i]},
                        {"leaderboard", leaderboard_to_json(learn.per_seed[i])}});
  result.report["leaderboards"] = std::move(per_seed);
  result.report["mean_leaderboard"] = mean_leaderboard_to_json(learn.mean);
  result.report["best_model"] = learn.best_model;
  result.report["importance"] = importance_json;
  write_file(run_dir / "run_report.json", result.report.dump(2) + "\n");
  write_file(run_dir / "timings.json", timings.dump(2) + "\n");
  return result;
}

// --- hyperparameter sweep --------------------------------------------------------------

struct SweepPoint {
  size_t length_n = 0;
  size_t step_s = 0;
  size_t n_samples = 0;
  bool feasible = false;
  std::string note;
  // metrics averaged over seeds, per model
  std::map<std::string, MeanLeaderboardRow> models;
};

struct SweepResult {
  std::vector<SweepPoint> s_sweep;  // fixed N, varying s
  std::vector<SweepPoint> n_sweep;  // fixed s, varying N
  Json report;
};

namespace detail {

inline SweepPoint sweep_point(const std::vector<DesignerSequence>& designers,
                              const std::map<std::string, double>& score_totals,
                              const WindowConfig& window, const SplitConfig& split_template,
                              std::span<const std::uint64_t> seeds, size_t workers) {
  SweepPoint point;
  point.length_n = window.length_n;
  point.step_s = window.step_s;

  std::vector<ModelSpec> pair;  // the two sweep finalists
  const auto suite = default_suite(kFeatureCount);
  for (const auto& spec : suite)
    if (spec.name == "extra_trees100" || spec.name == "bagging50") pair.push_back(spec);

  try {
    const std::vector<WindowSample> samples = build_windows(designers, window, score_totals);
    point.n_samples = samples.size();
    const std::vector<FeatureRow> rows = build_features(designers, samples, workers);
    const Dataset ds = dataset_from_feature_rows(rows);

    for (const auto& spec : pair) {
      MeanLeaderboardRow mean_row;
      mean_row.model = spec.name;
      point.models[spec.name] = mean_row;
    }
    for (std::uint64_t seed : seeds) {
      SplitConfig cfg = split_template;
      cfg.seed = seed;
      const auto board = compare_models(ds, pair, cfg, seed, workers);
      for (const auto& row : board) {
        if (!row.ok) throw Error("Infeasible", row.model + ": " + row.error);
        MeanLeaderboardRow& m = point.models[row.model];
        ++m.seeds_ok;
        m.train_rmse += row.train_rmse;
        m.train_r2 += row.train_r2;
        m.test_rmse += row.test_rmse;
        m.test_r2 += row.test_r2;
      }
    }
    for (auto& [name, m] : point.models) {
      const double n = static_cast<double>(m.seeds_ok);
      m.train_rmse /= n;
      m.train_r2 /= n;
      m.test_rmse /= n;
      m.test_r2 /= n;
    }
    point.feasible = true;
  } catch (const Error& e) {
    point.feasible = false;
    point.note = e.what();
    point.models.clear();
  }
  return point;
}

inline Json sweep_points_to_json(const std::vector<SweepPoint>& points) {
  Json j = Json::array();
  for (const auto& p : points) {
    Json models;
    for (const auto& [name, m] : p.models) {
      models[name] = {{"train_rmse", m.train_rmse},
                      {"train_r2", m.train_r2},
                      {"test_rmse", m.test_rmse},
                      {"test_r2", m.test_r2}};
    }
    j.push_back({{"length_n", p.length_n},
                 {"step_s", p.step_s},
                 {"n_samples", p.n_samples},
                 {"feasible", p.feasible},
                 {"note", p.note},
                 {"models", std::move(models)}});
  }
  return j;
}

}  // namespace detail

/// Controlled sweeps: one grid over s with N fixed, one over N with s fixed,
/// both evaluated with the two finalist ensembles averaged over the seed list.
/// An infeasible grid point is recorded and skipped.
inline SweepResult run_sweep(const PipelineConfig& config) {
  if (config.corpus_dir.empty() || config.workspace_dir.empty())
    throw Error("InvalidConfig", "corpus and workspace paths are required");
  const IngestResult ingest = ingest_corpus(config.corpus_dir, config.cleaning, config.workers);
  const std::map<std::string, double> score_totals =
      load_score_totals(std::filesystem::path(config.corpus_dir) / "scores.csv");

  SweepResult result;
  for (size_t s : config.sweep.s_values) {
    WindowConfig w{config.sweep.fixed_n, s, config.window.keep_short};
    result.s_sweep.push_back(detail::sweep_point(ingest.designers, score_totals, w, config.split,
                                                 config.seeds, config.workers));
  }
  for (size_t n : config.sweep.n_values) {
    WindowConfig w{n, std::min(config.sweep.fixed_s, n), config.window.keep_short};
    result.n_sweep.push_back(detail::sweep_point(ingest.designers, score_totals, w, config.split,
                                                 config.seeds, config.workers));
  }

  result.report["version"] = 1;
  result.report["config_hash"] = config_hash(config);
  result.report["s_sweep"] = detail::sweep_points_to_json(result.s_sweep);
  result.report["n_sweep"] = detail::sweep_points_to_json(result.n_sweep);

  const std::filesystem::path out_dir =
      std::filesystem::path(config.workspace_dir) / ("sweep_" + config_hash(config));
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "sweep_report.json", result.report.dump(2) + "\n");
  return result;
}

// --- score sheet subcommand ----------------------------------------------------------

struct ScoreSheetOutcome {
  std::vector<ScoreRow> rows;
  std::vector<std::pair<size_t, std::string>> row_errors;  // (1-based line, message)
};

/// Applies the rubric to an assessment file row by row; invalid rows are
/// reported with their line numbers and the rest proceed.
inline ScoreSheetOutcome score_sheet(const std::filesystem::path& assessments_path) {
  ScoreSheetOutcome outcome;
  const std::string text = read_file(assessments_path);
  const std::vector<std::string> lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != kAssessmentHeader)
    throw Error("WrongFileFormat", "assessment header mismatch in " + assessments_path.string());
  for (size_t idx = 1; idx < lines.size(); ++idx) {
    try {
      const std::string row_text = std::string(kAssessmentHeader) + "\n" + lines[idx] + "\n";
      const auto rows = parse_assessments(row_text);
      outcome.rows.push_back({rows[0].designer_id, score(rows[0].input)});
    } catch (const Error& e) {
      outcome.row_errors.emplace_back(idx + 1, e.what());
    }
  }
  return outcome;
}

}  // namespace bimlog
