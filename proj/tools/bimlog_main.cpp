// Command-line front end for the log-mining pipeline. Subcommands mirror the
// pipeline stages so every intermediate can be produced and inspected on its
// own; `run` executes the whole flow with persisted intermediates.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bimlog/pipeline.hpp"

namespace fs = std::filesystem;
using namespace bimlog;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInfeasible = 3;

int exit_code_for(const Error& e) {
  if (e.code() == "InvalidConfig" || e.code() == "Infeasible" || e.code() == "TooFewRows")
    return kExitInfeasible;
  return kExitData;
}

struct CommonFlags {
  std::string config_path;
  PipelineConfig config;

  // flag overrides; only applied when the user set them
  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON configuration file");
    app->add_option("--corpus", config.corpus_dir, "corpus directory");
    app->add_option("--workspace", config.workspace_dir, "workspace output directory");
    app->add_option("--window-length", config.window.length_n, "window length N in records");
    app->add_option("--window-step", config.window.step_s, "window step s in records");
    app->add_option("--keep-short", config.window.keep_short,
                    "keep sequences shorter than N as one flagged window (0/1)");
    app->add_option("--min-journal-bytes", config.cleaning.min_journal_bytes,
                    "cleaning threshold on raw journal size");
    app->add_option("--min-rows", config.cleaning.min_rows, "cleaning threshold on merged rows");
    app->add_option("--coverage-deficit", config.cleaning.max_tracker_coverage_deficit,
                    "max tolerated tracker coverage deficit fraction");
    app->add_option("--test-fraction", config.split.test_fraction, "test split fraction");
    app->add_flag("--grouped-split", config.split.grouped, "keep each designer on one split side");
    app->add_option("--seeds", config.seeds, "seed list for repeated runs");
    app->add_option("--explain-samples", config.explain_max_samples,
                    "max rows explained in the explain stage");
    app->add_option("--workers", config.workers, "worker threads (0 = hardware)");
  }

  PipelineConfig resolve(CLI::App* app) {
    PipelineConfig resolved;
    if (!config_path.empty()) resolved = config_from_json(Json::parse(read_file(config_path)));
    auto take = [&](const char* flag, auto member, auto value) {
      if (app->count(flag) > 0) resolved.*member = value;
    };
    take("--corpus", &PipelineConfig::corpus_dir, config.corpus_dir);
    take("--workspace", &PipelineConfig::workspace_dir, config.workspace_dir);
    if (app->count("--window-length")) resolved.window.length_n = config.window.length_n;
    if (app->count("--window-step")) resolved.window.step_s = config.window.step_s;
    if (app->count("--keep-short")) resolved.window.keep_short = config.window.keep_short;
    if (app->count("--min-journal-bytes"))
      resolved.cleaning.min_journal_bytes = config.cleaning.min_journal_bytes;
    if (app->count("--min-rows")) resolved.cleaning.min_rows = config.cleaning.min_rows;
    if (app->count("--coverage-deficit"))
      resolved.cleaning.max_tracker_coverage_deficit = config.cleaning.max_tracker_coverage_deficit;
    if (app->count("--test-fraction")) resolved.split.test_fraction = config.split.test_fraction;
    if (app->count("--grouped-split")) resolved.split.grouped = config.split.grouped;
    if (app->count("--seeds")) resolved.seeds = config.seeds;
    if (app->count("--explain-samples")) resolved.explain_max_samples = config.explain_max_samples;
    if (app->count("--workers")) resolved.workers = config.workers;
    return resolved;
  }
};

void print_json(const Json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bimlog: mine design-behavior logs into density features, fit regression "
               "ensembles and attribute predictions to behaviors"};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string synth_out = "corpus";
  size_t synth_designers = 68;
  std::uint64_t synth_seed = 0;
  std::string synth_preset = "small";
  double synth_noise = 2.0;
  size_t synth_workers = 1;
  synth_cmd->add_option("--out", synth_out, "output corpus directory")->required();
  synth_cmd->add_option("--designers", synth_designers, "number of designers");
  synth_cmd->add_option("--seed", synth_seed, "master seed");
  synth_cmd->add_option("--preset", synth_preset, "scale preset: paper or small")
      ->check(CLI::IsMember({"paper", "small"}));
  synth_cmd->add_option("--noise-sd", synth_noise, "score noise standard deviation");
  synth_cmd->add_option("--workers", synth_workers, "worker threads (0 = hardware)");

  // --- parse ---------------------------------------------------------------
  auto* parse_cmd = app.add_subcommand("parse", "parse raw files and print the parse report");
  std::string parse_journal_path, parse_tracker_path;
  parse_cmd->add_option("--journal", parse_journal_path, "journal file to parse");
  parse_cmd->add_option("--tracker", parse_tracker_path, "tracker file to parse");

  // --- integrate -------------------------------------------------------------
  auto* integrate_cmd =
      app.add_subcommand("integrate", "clean and merge a corpus into per-designer session files");
  CommonFlags integrate_flags;
  integrate_flags.attach(integrate_cmd);
  std::string integrate_out;
  integrate_cmd->add_option("--out", integrate_out, "output directory for session files")->required();

  // --- window -----------------------------------------------------------------
  auto* window_cmd = app.add_subcommand("window", "crop windows and write the labeled manifest");
  std::string window_sessions, window_scores, window_out = "windows.csv";
  WindowConfig window_cfg{3000, 500, true};
  window_cmd->add_option("--sessions", window_sessions, "directory of session csv files")->required();
  window_cmd->add_option("--scores", window_scores, "score sheet csv")->required();
  window_cmd->add_option("--out", window_out, "output manifest path");
  window_cmd->add_option("--window-length", window_cfg.length_n, "window length N");
  window_cmd->add_option("--window-step", window_cfg.step_s, "window step s");

  // --- features ------------------------------------------------------------------
  auto* features_cmd =
      app.add_subcommand("features", "compute the 29-column feature matrix for a window manifest");
  std::string features_sessions, features_windows, features_out = "features.csv";
  size_t features_workers = 1;
  features_cmd->add_option("--sessions", features_sessions, "directory of session csv files")
      ->required();
  features_cmd->add_option("--windows", features_windows, "window manifest csv")->required();
  features_cmd->add_option("--out", features_out, "output feature matrix path");
  features_cmd->add_option("--workers", features_workers, "worker threads");

  // --- score ------------------------------------------------------------------------
  auto* score_cmd = app.add_subcommand("score", "apply the scoring rubric to an assessment file");
  std::string score_in, score_out = "scores.csv";
  score_cmd->add_option("--assessments", score_in, "assessment csv")->required();
  score_cmd->add_option("--out", score_out, "output score sheet path");

  // --- train ---------------------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "fit one model on a feature matrix");
  std::string train_features, train_model_out = "model.json", train_kind = "extra_trees";
  std::uint64_t train_seed = 0;
  double train_fraction = 0.2;
  bool train_grouped = false;
  size_t train_workers = 1;
  train_cmd->add_option("--features", train_features, "feature matrix csv")->required();
  train_cmd->add_option("--model-out", train_model_out, "output model file");
  train_cmd
      ->add_option("--kind", train_kind, "model kind")
      ->check(CLI::IsMember({"ols", "ridge", "knn", "cart", "bagging", "random_forest", "extra_trees"}));
  train_cmd->add_option("--seed", train_seed, "split/model seed");
  train_cmd->add_option("--test-fraction", train_fraction, "test fraction");
  train_cmd->add_flag("--grouped-split", train_grouped, "group split by designer");
  train_cmd->add_option("--workers", train_workers, "worker threads");

  // --- evaluate -----------------------------------------------------------------------
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "run the fixed model suite on a feature matrix");
  std::string eval_features, eval_out;
  std::vector<std::uint64_t> eval_seeds = {0, 1, 2, 3, 4};
  double eval_fraction = 0.2;
  bool eval_grouped = false;
  size_t eval_workers = 1;
  evaluate_cmd->add_option("--features", eval_features, "feature matrix csv")->required();
  evaluate_cmd->add_option("--out", eval_out, "write leaderboard json here (default stdout)");
  evaluate_cmd->add_option("--seeds", eval_seeds, "seed list");
  evaluate_cmd->add_option("--test-fraction", eval_fraction, "test fraction");
  evaluate_cmd->add_flag("--grouped-split", eval_grouped, "group split by designer");
  evaluate_cmd->add_option("--workers", eval_workers, "worker threads");

  // --- explain ---------------------------------------------------------------------------
  auto* explain_cmd = app.add_subcommand("explain", "attribute model output to features");
  std::string explain_features, explain_model, explain_out_dir = ".";
  size_t explain_samples = 512;
  std::uint64_t explain_seed = 0;
  size_t explain_workers = 1;
  explain_cmd->add_option("--features", explain_features, "feature matrix csv")->required();
  explain_cmd->add_option("--model", explain_model, "model json file")->required();
  explain_cmd->add_option("--out-dir", explain_out_dir, "directory for importance/beeswarm outputs");
  explain_cmd->add_option("--samples", explain_samples, "max rows to explain");
  explain_cmd->add_option("--seed", explain_seed, "subsample seed");
  explain_cmd->add_option("--workers", explain_workers, "worker threads");

  // --- sweep -----------------------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "controlled window hyperparameter sweeps");
  CommonFlags sweep_flags;
  sweep_flags.attach(sweep_cmd);
  std::vector<size_t> sweep_s_values, sweep_n_values;
  size_t sweep_fixed_n = 0, sweep_fixed_s = 0;
  sweep_cmd->add_option("--fixed-n", sweep_fixed_n, "N used while sweeping s");
  sweep_cmd->add_option("--s-values", sweep_s_values, "s grid");
  sweep_cmd->add_option("--fixed-s", sweep_fixed_s, "s used while sweeping N");
  sweep_cmd->add_option("--n-values", sweep_n_values, "N grid");

  // --- run --------------------------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "execute the full pipeline");
  CommonFlags run_flags;
  run_flags.attach(run_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message; the exit code contract is ours
    return kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) {
      GenConfig config = synth_preset == "paper" ? GenConfig::paper() : GenConfig::small();
      config.n_designers = synth_designers;
      config.noise_sd = synth_noise;
      const CorpusSummary summary = gen_corpus(config, synth_seed, synth_out, synth_workers);
      Json j = {{"designers", summary.scores.size()},
                {"out", synth_out},
                {"scores", std::string(synth_out) + "/scores.csv"}};
      print_json(j);
      return kExitOk;
    }

    if (parse_cmd->parsed()) {
      if (parse_journal_path.empty() && parse_tracker_path.empty())
        throw CLI::ValidationError("parse", "need --journal and/or --tracker");
      Json out;
      auto report_json = [](const ParseReport& r) {
        Json j = {{"lines_total", r.lines_total},
                  {"lines_kept", r.lines_kept},
                  {"lines_skipped_irrelevant", r.lines_skipped_irrelevant},
                  {"lines_malformed", r.lines_malformed},
                  {"relevance", r.relevance()}};
        Json samples = Json::array();
        for (const auto& [line, reason] : r.malformed_samples)
          samples.push_back({{"line", line}, {"reason", reason}});
        j["malformed_samples"] = std::move(samples);
        Json notes = Json::array();
        for (const auto& [line, note] : r.notes) notes.push_back({{"line", line}, {"note", note}});
        j["notes"] = std::move(notes);
        return j;
      };
      if (!parse_journal_path.empty()) {
        const auto [records, report] = parse_journal(read_file(parse_journal_path));
        out["journal"] = report_json(report);
        out["journal"]["records"] = records.size();
      }
      if (!parse_tracker_path.empty()) {
        const auto [records, report] = parse_tracker(read_file(parse_tracker_path));
        out["tracker"] = report_json(report);
        out["tracker"]["records"] = records.size();
      }
      print_json(out);
      return kExitOk;
    }

    if (integrate_cmd->parsed()) {
      const PipelineConfig config = integrate_flags.resolve(integrate_cmd);
      if (config.corpus_dir.empty())
        throw CLI::ValidationError("integrate", "--corpus (or --config) is required");
      const IngestResult result = ingest_corpus(config.corpus_dir, config.cleaning, config.workers);
      for (const auto& d : result.designers)
        write_file(fs::path(integrate_out) / (d.designer_id + ".csv"), format_session_csv(d.events));
      write_file(fs::path(integrate_out) / "ingest_report.json", result.report.dump(2) + "\n");
      print_json({{"designers_kept", result.designers.size()},
                  {"out", integrate_out}});
      return kExitOk;
    }

    if (window_cmd->parsed()) {
      std::vector<DesignerSequence> designers;
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(window_sessions))
        if (entry.path().extension() == ".csv") files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      for (const auto& file : files) {
        DesignerSequence seq;
        seq.designer_id = file.stem().string();
        seq.events = parse_session_csv(read_file(file));
        designers.push_back(std::move(seq));
      }
      const auto samples = build_windows(designers, window_cfg, load_score_totals(window_scores));
      write_file(window_out, format_window_manifest(samples));
      print_json({{"n_samples", samples.size()}, {"out", window_out}});
      return kExitOk;
    }

    if (features_cmd->parsed()) {
      std::vector<DesignerSequence> designers;
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(features_sessions))
        if (entry.path().extension() == ".csv") files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      for (const auto& file : files) {
        DesignerSequence seq;
        seq.designer_id = file.stem().string();
        seq.events = parse_session_csv(read_file(file));
        designers.push_back(std::move(seq));
      }
      // manifest rows -> window samples
      std::vector<WindowSample> samples;
      const auto lines = split_lines(read_file(features_windows));
      if (lines.empty() || trim(lines[0]) != kWindowManifestHeader)
        throw Error("WrongFileFormat", "window manifest header mismatch");
      for (size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_view(trim(lines[i]), ',');
        if (fields.size() != 4)
          throw Error("WrongFileFormat", "bad manifest line " + std::to_string(i + 1));
        WindowSample s;
        s.designer_id = std::string(fields[0]);
        std::int64_t start = 0, end = 0;
        double label = 0;
        if (!parse_i64(fields[1], start) || !parse_i64(fields[2], end) || !parse_f64(fields[3], label))
          throw Error("WrongFileFormat", "bad manifest line " + std::to_string(i + 1));
        s.start = static_cast<size_t>(start);
        s.end = static_cast<size_t>(end);
        s.label = label;
        samples.push_back(std::move(s));
      }
      const auto rows = build_features(designers, samples, features_workers);
      write_file(features_out, format_feature_matrix(rows));
      print_json({{"rows", rows.size()}, {"out", features_out}});
      return kExitOk;
    }

    if (score_cmd->parsed()) {
      const ScoreSheetOutcome outcome = score_sheet(score_in);
      write_file(score_out, format_score_sheet(outcome.rows));
      Json errors = Json::array();
      for (const auto& [line, msg] : outcome.row_errors)
        errors.push_back({{"line", line}, {"error", msg}});
      print_json({{"rows", outcome.rows.size()}, {"errors", errors}, {"out", score_out}});
      return kExitOk;
    }

    if (train_cmd->parsed()) {
      const Dataset ds = dataset_from_feature_rows(parse_feature_matrix(read_file(train_features)));
      SplitConfig split_cfg{train_fraction, train_seed, train_grouped};
      const Split split = split_dataset(ds, split_cfg);
      const Dataset train = subset(ds, split.train_idx);
      const Dataset test = subset(ds, split.test_idx);
      AnyModel model;
      if (train_kind == "ols") model = AnyModel{fit_linear(LinearKind::Ols, train)};
      else if (train_kind == "ridge") model = AnyModel{fit_linear(LinearKind::Ridge, train, 1.0)};
      else if (train_kind == "knn") model = AnyModel{fit_knn(train, std::min<size_t>(5, train.rows()))};
      else {
        ForestKind kind = ForestKind::ExtraTrees;
        if (train_kind == "cart") kind = ForestKind::Cart;
        else if (train_kind == "bagging") kind = ForestKind::Bagging;
        else if (train_kind == "random_forest") kind = ForestKind::RandomForest;
        model = AnyModel{fit_forest(kind, train, ForestParams::defaults_for(kind, ds.n_cols),
                                    train_seed, train_workers)};
      }
      write_file(train_model_out, model_to_json(model).dump() + "\n");
      const auto train_pred = model.predict_rows(train);
      const auto test_pred = model.predict_rows(test);
      print_json({{"model", train_kind},
                  {"out", train_model_out},
                  {"train_rmse", rmse(train.y, train_pred)},
                  {"train_r2", r2(train.y, train_pred)},
                  {"test_rmse", rmse(test.y, test_pred)},
                  {"test_r2", r2(test.y, test_pred)}});
      return kExitOk;
    }

    if (evaluate_cmd->parsed()) {
      const Dataset ds = dataset_from_feature_rows(parse_feature_matrix(read_file(eval_features)));
      SplitConfig split_cfg{eval_fraction, 0, eval_grouped};
      const LearnOutcome outcome = run_learning(ds, split_cfg, eval_seeds, eval_workers);
      Json j;
      j["best_model"] = outcome.best_model;
      j["mean_leaderboard"] = mean_leaderboard_to_json(outcome.mean);
      Json per_seed = Json::array();
      for (size_t i = 0; i < eval_seeds.size(); ++i)
        per_seed.push_back({{"seed", eval_seeds[i]},
                            {"leaderboard", leaderboard_to_json(outcome.per_seed[i])}});
      j["leaderboards"] = std::move(per_seed);
      if (eval_out.empty()) print_json(j);
      else {
        write_file(eval_out, j.dump(2) + "\n");
        print_json({{"best_model", outcome.best_model}, {"out", eval_out}});
      }
      return kExitOk;
    }

    if (explain_cmd->parsed()) {
      const Dataset ds = dataset_from_feature_rows(parse_feature_matrix(read_file(explain_features)));
      const AnyModel model = model_from_json(Json::parse(read_file(explain_model)));
      const ExplainOutcome outcome =
          run_explanation(model, ds, explain_samples, explain_seed, explain_workers);
      const Json importance = importance_to_json(
          outcome.importance, std::span<const std::string_view>(kFeatureNames),
          outcome.explanations.size());
      write_file(fs::path(explain_out_dir) / "importance.json", importance.dump(2) + "\n");
      const auto swarm = beeswarm_table(outcome.explanations, outcome.explained_rows);
      write_file(fs::path(explain_out_dir) / "beeswarm.csv",
                 format_beeswarm_csv(swarm, std::span<const std::string_view>(kFeatureNames)));
      print_json({{"explained", outcome.explanations.size()}, {"out_dir", explain_out_dir}});
      return kExitOk;
    }

    if (sweep_cmd->parsed()) {
      PipelineConfig config = sweep_flags.resolve(sweep_cmd);
      if (sweep_cmd->count("--fixed-n")) config.sweep.fixed_n = sweep_fixed_n;
      if (sweep_cmd->count("--fixed-s")) config.sweep.fixed_s = sweep_fixed_s;
      if (sweep_cmd->count("--s-values")) config.sweep.s_values = sweep_s_values;
      if (sweep_cmd->count("--n-values")) config.sweep.n_values = sweep_n_values;
      const SweepResult result = run_sweep(config);
      print_json(result.report);
      return kExitOk;
    }

    if (run_cmd->parsed()) {
      const PipelineConfig config = run_flags.resolve(run_cmd);
      const RunResult result = run_pipeline(config);
      print_json({{"run_dir", result.run_dir.string()},
                  {"best_model", result.report["best_model"]},
                  {"n_samples", result.report["n_samples"]}});
      return kExitOk;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
