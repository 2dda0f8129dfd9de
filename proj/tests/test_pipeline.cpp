#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "bimlog/pipeline.hpp"

using namespace bimlog;
namespace fs = std::filesystem;

namespace {

// A small corpus shared by the pipeline tests; generated once.
struct PipelineFixture {
  fs::path corpus = "pipeline_test_corpus";
  fs::path workspace = "pipeline_test_ws";

  PipelineFixture() {
    if (!fs::exists(corpus / "scores.csv")) {
      GenConfig config = GenConfig::small();
      config.n_designers = 8;
      config.events_min = 1500;
      config.events_max = 2500;
      config.sessions_min = 2;
      config.sessions_max = 3;
      gen_corpus(config, 21, corpus, 2);
    }
    fs::remove_all(workspace);
  }

  PipelineConfig config() const {
    PipelineConfig c;
    c.corpus_dir = corpus.string();
    c.workspace_dir = workspace.string();
    c.cleaning.min_journal_bytes = 4096;
    c.window = {600, 150, true};
    c.seeds = {0, 1};
    c.explain_max_samples = 24;
    c.workers = 2;
    return c;
  }
};

}  // namespace

TEST_CASE("ingest stage accounts for every session", "[pipeline]") {
  PipelineFixture fx;
  const IngestResult result = ingest_corpus(fx.corpus, fx.config().cleaning, 2);
  CHECK(result.designers.size() == 8);
  CHECK(result.report.at("designers_total").get<size_t>() == 8);
  for (const auto& d : result.designers) {
    REQUIRE_FALSE(d.events.empty());
    for (size_t i = 1; i < d.events.size(); ++i)
      REQUIRE(d.events[i - 1].tick <= d.events[i].tick);
  }
  CHECK_THROWS_AS(ingest_corpus("no_such_dir", CleaningPolicy{}, 1), Error);
}

TEST_CASE("default cleaning policy rejects the tiny synthetic sessions", "[pipeline]") {
  PipelineFixture fx;
  CleaningPolicy strict;  // 100 KB journals required
  const IngestResult result = ingest_corpus(fx.corpus, strict, 2);
  CHECK(result.designers.empty());
  CHECK(result.report.at("designers_dropped").get<size_t>() == 8);
}

TEST_CASE("full pipeline produces a deterministic report", "[pipeline]") {
  PipelineFixture fx;
  const PipelineConfig config = fx.config();
  const RunResult first = run_pipeline(config);

  CHECK(first.report.at("n_samples").get<size_t>() > 0);
  CHECK(fs::exists(first.run_dir / "features.csv"));
  CHECK(fs::exists(first.run_dir / "windows.csv"));
  CHECK(fs::exists(first.run_dir / "best_model.json"));
  CHECK(fs::exists(first.run_dir / "importance.json"));
  CHECK(fs::exists(first.run_dir / "beeswarm.csv"));
  CHECK(fs::exists(first.run_dir / "run_report.json"));

  const std::string report_once = read_file(first.run_dir / "run_report.json");
  const std::string features_once = read_file(first.run_dir / "features.csv");

  SECTION("re-running the identical config is byte-identical") {
    const RunResult second = run_pipeline(config);
    CHECK(second.run_dir == first.run_dir);
    CHECK(read_file(second.run_dir / "run_report.json") == report_once);
    CHECK(read_file(second.run_dir / "features.csv") == features_once);
  }

  SECTION("worker count changes nothing") {
    PipelineConfig more_workers = config;
    more_workers.workers = 4;
    const RunResult second = run_pipeline(more_workers);
    CHECK(second.run_dir == first.run_dir);  // workers excluded from the hash
    CHECK(read_file(second.run_dir / "run_report.json") == report_once);
  }

  SECTION("different window config lands in a different run directory") {
    PipelineConfig other = config;
    other.window.step_s = 300;
    CHECK(config_hash(other) != config_hash(config));
    const RunResult second = run_pipeline(other);
    CHECK(second.run_dir != first.run_dir);
  }
}

TEST_CASE("staged invocation over persisted intermediates matches the pipeline", "[pipeline]") {
  PipelineFixture fx;
  const PipelineConfig config = fx.config();
  const RunResult run = run_pipeline(config);

  // stage 1-2: sessions from disk
  std::vector<DesignerSequence> designers;
  std::vector<fs::path> session_files;
  for (const auto& entry : fs::directory_iterator(run.run_dir / "sessions"))
    session_files.push_back(entry.path());
  std::sort(session_files.begin(), session_files.end());
  for (const auto& file : session_files) {
    DesignerSequence seq;
    seq.designer_id = file.stem().string();
    seq.events = parse_session_csv(read_file(file));
    designers.push_back(std::move(seq));
  }

  // stage 3-4: windows and features recomputed from the persisted sessions
  const auto score_totals = load_score_totals(fx.corpus / "scores.csv");
  const auto samples = build_windows(designers, config.window, score_totals);
  const auto rows = build_features(designers, samples, 1);
  CHECK(format_feature_matrix(rows) == read_file(run.run_dir / "features.csv"));

  // stage 5: learning from the persisted matrix reproduces the leaderboard
  const auto rows_from_disk = parse_feature_matrix(read_file(run.run_dir / "features.csv"));
  const Dataset ds = dataset_from_feature_rows(rows_from_disk);
  const LearnOutcome outcome = run_learning(ds, config.split, config.seeds, 1);
  CHECK(mean_leaderboard_to_json(outcome.mean).dump() ==
        run.report.at("mean_leaderboard").dump());
  CHECK(outcome.best_model == run.report.at("best_model").get<std::string>());
}

TEST_CASE("empty corpus directory fails at ingest", "[pipeline]") {
  const fs::path dir = "pipeline_empty_corpus";
  fs::remove_all(dir);
  fs::create_directories(dir);
  PipelineConfig config;
  config.corpus_dir = dir.string();
  config.workspace_dir = "pipeline_empty_ws";
  CHECK_THROWS_WITH(run_pipeline(config), Catch::Matchers::ContainsSubstring("EmptyCorpus"));
  fs::remove_all(dir);
  fs::remove_all("pipeline_empty_ws");
}

TEST_CASE("sweep covers both grids and respects the count identity", "[pipeline]") {
  PipelineFixture fx;
  PipelineConfig config = fx.config();
  config.seeds = {0};
  config.sweep.fixed_n = 600;
  config.sweep.s_values = {100, 300, 600};
  config.sweep.fixed_s = 150;
  config.sweep.n_values = {300, 600};

  const SweepResult sweep = run_sweep(config);
  REQUIRE(sweep.s_sweep.size() == 3);
  REQUIRE(sweep.n_sweep.size() == 2);

  const IngestResult ingest = ingest_corpus(fx.corpus, config.cleaning, 1);
  for (const auto& point : sweep.s_sweep) {
    REQUIRE(point.feasible);
    size_t expected = 0;
    for (const auto& d : ingest.designers) {
      if (d.events.size() >= point.length_n)
        expected += window_count(d.events.size(), point.length_n, point.step_s);
      else
        ++expected;  // keep_short window
    }
    REQUIRE(point.n_samples == expected);
    REQUIRE(point.models.count("extra_trees100") == 1);
    REQUIRE(point.models.count("bagging50") == 1);
  }

  const fs::path out = fs::path(config.workspace_dir) / ("sweep_" + config_hash(config));
  CHECK(fs::exists(out / "sweep_report.json"));
}

TEST_CASE("infeasible sweep points are recorded, not fatal", "[pipeline]") {
  PipelineFixture fx;
  PipelineConfig config = fx.config();
  config.seeds = {0};
  config.sweep.fixed_n = 600;
  config.sweep.s_values = {600};
  config.sweep.fixed_s = 6000000;  // larger than any sequence: one window per designer
  config.sweep.n_values = {6000000};
  config.window.keep_short = false;  // and the short windows are dropped
  const SweepResult sweep = run_sweep(config);
  REQUIRE(sweep.n_sweep.size() == 1);
  CHECK_FALSE(sweep.n_sweep[0].feasible);
  CHECK_FALSE(sweep.n_sweep[0].note.empty());
}

TEST_CASE("score sheet subcommand applies the rubric row-wise", "[pipeline]") {
  const fs::path file = "pipeline_assessments.csv";
  write_file(file,
             std::string(kAssessmentHeader) + "\n" +
                 "bench,0,0,0,0\n" +
                 "student2,0,1,2,-1\n" +
                 "broken,0,0,99,0\n" +
                 "student3,1,0,0,1\n");
  const ScoreSheetOutcome outcome = score_sheet(file);
  REQUIRE(outcome.rows.size() == 3);
  CHECK(outcome.rows[0].score.total == 70);
  CHECK(outcome.rows[1].score.total == 68);
  CHECK(outcome.rows[2].score.total == 74);
  REQUIRE(outcome.row_errors.size() == 1);
  CHECK(outcome.row_errors[0].first == 4);  // 1-based line number of the bad row
  fs::remove(file);

  SECTION("empty assessment file gives an empty sheet") {
    write_file(file, std::string(kAssessmentHeader) + "\n");
    const ScoreSheetOutcome empty = score_sheet(file);
    CHECK(empty.rows.empty());
    CHECK(empty.row_errors.empty());
    fs::remove(file);
  }
}

TEST_CASE("pipeline config json round trip and hashing", "[pipeline]") {
  PipelineConfig config;
  config.corpus_dir = "corpus";
  config.workspace_dir = "ws";
  config.cleaning.min_journal_bytes = 12345;
  config.window = {777, 111, false};
  config.split.test_fraction = 0.25;
  config.split.grouped = true;
  config.seeds = {4, 5, 6};
  config.sweep.s_values = {9, 8};

  const PipelineConfig back = config_from_json(config_to_json(config));
  CHECK(config_to_json(back).dump() == config_to_json(config).dump());
  CHECK(config_hash(back) == config_hash(config));

  PipelineConfig different = config;
  different.window.length_n = 778;
  CHECK(config_hash(different) != config_hash(config));

  // the workers knob must not influence the hash
  PipelineConfig workers = config;
  workers.workers = 16;
  CHECK(config_hash(workers) == config_hash(config));
}
