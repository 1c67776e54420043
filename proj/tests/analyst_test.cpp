#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dsintel/analyst/corpus_io.hpp"
#include "dsintel/analyst/oracle_check.hpp"
#include "dsintel/analyst/pipeline.hpp"
#include "dsintel/analyst/scenario.hpp"

namespace dsintel::analyst {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const char* kTwoReports = R"({
  "frame": ["A", "B"],
  "prior": {"1": 0.5, "2": 0.5},
  "reports": [
    {"id": "e1", "masses": [{"set": ["A"], "mass": 0.6}, {"set": ["A", "B"], "mass": 0.4}]},
    {"id": "e2", "masses": [{"set": ["B"], "mass": 0.5}, {"set": ["A", "B"], "mass": 0.5}],
     "time": 3600, "pos": [1.0, 2.0]}
  ]
})";

std::string error_of(const std::string& text) {
  try {
    parse_corpus(json::parse(text), "case.json");
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("dsintel_analyst_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path file(const std::string& name, const std::string& content = {}) const {
    const auto p = path_ / name;
    if (!content.empty()) std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Ingest, WellFormedFile) {
  TempDir dir;
  const auto file = ingest_corpus(dir.file("two.json", kTwoReports).string());
  EXPECT_EQ(file.corpus.size(), 2U);
  EXPECT_EQ(file.prior.r_max(), 2U);
  EXPECT_FALSE(file.decision.has_value());
  EXPECT_FALSE(file.corpus[0].time_s.has_value());
  ASSERT_TRUE(file.corpus[1].position.has_value());
  EXPECT_EQ(file.corpus[1].position->y_km, 2.0);
}

TEST(Ingest, UnknownElementIsNamed) {
  auto doc = json::parse(kTwoReports);
  doc["reports"][1]["masses"][0]["set"] = {"C"};
  const auto msg = error_of(doc.dump());
  EXPECT_NE(msg.find("'C'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("case.json"), std::string::npos) << msg;
}

TEST(Ingest, BadSumNamesReport) {
  auto doc = json::parse(kTwoReports);
  doc["reports"][1]["masses"][1]["mass"] = 0.48;
  const auto msg = error_of(doc.dump());
  EXPECT_NE(msg.find("e2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("0.98"), std::string::npos) << msg;
}

TEST(Ingest, DuplicateIdRejected) {
  auto doc = json::parse(kTwoReports);
  doc["reports"][1]["id"] = "e1";
  const auto msg = error_of(doc.dump());
  EXPECT_NE(msg.find("duplicate report id 'e1'"), std::string::npos) << msg;
}

TEST(Ingest, MissingFileAndMalformedJson) {
  EXPECT_THROW(ingest_corpus("/nonexistent/dsintel.json"), ValidationError);
  TempDir dir;
  EXPECT_THROW(ingest_corpus(dir.file("bad.json", "{\"frame\": [").string()), ValidationError);
}

TEST(Ingest, DefaultPriorIsUniformOverReportCount) {
  auto doc = json::parse(kTwoReports);
  doc.erase("prior");
  const auto file = parse_corpus(doc);
  EXPECT_EQ(file.prior.r_max(), 2U);
  EXPECT_EQ(file.prior.probability(1), 0.5);
}

TEST(Scenario, DeterministicForFixedSeed) {
  ScenarioConfig cfg;
  cfg.seed = 7;
  EXPECT_EQ(generate_scenario(cfg), generate_scenario(cfg));
  cfg.seed = 8;
  ScenarioConfig seven;
  EXPECT_NE(generate_scenario(cfg), generate_scenario(seven));
}

TEST(Scenario, CountsAndDisjointFocals) {
  ScenarioConfig cfg;
  const auto sc = make_scenario(cfg);
  EXPECT_EQ(sc.reports.size(), 12U);
  EXPECT_EQ(sc.reports.front().id, "r01");
  for (std::size_t i = 1; i < sc.reports.size(); ++i)
    EXPECT_LE(sc.reports[i - 1].time_s, sc.reports[i].time_s);
  const auto file = parse_corpus(json::parse(generate_scenario(cfg)));
  for (std::size_t i = 0; i < sc.reports.size(); ++i)
    for (std::size_t j = i + 1; j < sc.reports.size(); ++j) {
      if (sc.reports[i].target == sc.reports[j].target) continue;
      const std::vector<std::size_t> pair{i, j};
      EXPECT_GT(cluster_conflict(file.corpus, pair), 0.0);
    }
}

TEST(Scenario, LevelZeroMeansNoConflictWithinTarget) {
  ScenarioConfig cfg;
  cfg.contradiction = 0.0;
  const auto sc = make_scenario(cfg);
  const auto file = parse_corpus(json::parse(generate_scenario(cfg)));
  for (std::size_t i = 0; i < sc.reports.size(); ++i)
    for (std::size_t j = i + 1; j < sc.reports.size(); ++j) {
      if (sc.reports[i].target != sc.reports[j].target) continue;
      const std::vector<std::size_t> pair{i, j};
      EXPECT_EQ(cluster_conflict(file.corpus, pair), 0.0);
    }
}

TEST(Scenario, WalkRespectsSpeedLimit) {
  ScenarioConfig cfg;
  cfg.seed = 3;
  const auto sc = make_scenario(cfg);
  for (std::size_t t = 0; t < cfg.targets; ++t) {
    const GeneratedReport* prev = nullptr;
    for (const auto& r : sc.reports) {
      if (r.target != t) continue;
      if (prev && r.time_s > prev->time_s) {
        const double speed = std::hypot(r.x_km - prev->x_km, r.y_km - prev->y_km) /
                             ((r.time_s - prev->time_s) / 3600.0);
        EXPECT_LE(speed, cfg.kinematics.speed_limit_kmh);
      }
      prev = &r;
    }
  }
}

TEST(Scenario, RejectsTooSmallFrame) {
  ScenarioConfig cfg;
  cfg.frame_size = 2;
  EXPECT_THROW(make_scenario(cfg), ValidationError);
}

TEST(Scenario, RoundTripsThroughIngestion) {
  TempDir dir;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.targets = 1 + seed % 4;
    cfg.reports_per_target = 1 + seed % 5;
    cfg.frame_size = cfg.targets + seed % 3;
    const auto path = dir.file("s.json", generate_scenario(cfg));
    const auto file = ingest_corpus(path.string());
    EXPECT_EQ(file.corpus.size(), cfg.targets * cfg.reports_per_target);
  }
}

TEST(Pipeline, GeneratedScenarioRecoversTargets) {
  ScenarioConfig cfg;
  cfg.seed = 7;
  const auto file = parse_corpus(json::parse(generate_scenario(cfg)));
  const auto sc = make_scenario(cfg);
  const auto result = run_pipeline(file, {});
  ASSERT_TRUE(result.partition && result.posterior);
  EXPECT_EQ(result.partition->block_count(), 3U);
  EXPECT_EQ(result.posterior->mode(), 3U);
  for (std::size_t i = 0; i < sc.reports.size(); ++i)
    for (std::size_t j = 0; j < sc.reports.size(); ++j)
      EXPECT_EQ(sc.reports[i].target == sc.reports[j].target,
                result.partition->block_of(i) == result.partition->block_of(j));
  ASSERT_EQ(result.tracks.size(), 3U);
  for (const auto& ct : result.tracks) {
    EXPECT_EQ(ct.vertices.size(), 4U);
    EXPECT_TRUE(ct.oracle.has_value());
    EXPECT_FALSE(ct.best.empty());
  }
  const auto ex = exhaustive_partition_minimum(file.corpus, file.prior);
  EXPECT_NEAR(result.metaconflict->mcf, ex.mcf, 1e-12);
}

TEST(Pipeline, SingleReportHasOnlyDomainConflict) {
  const auto file = parse_corpus(json::parse(R"({
    "frame": ["A", "B"], "prior": {"1": 0.7, "2": 0.3},
    "reports": [{"id": "solo", "masses": [{"set": ["A"], "mass": 0.9}, {"set": ["A", "B"], "mass": 0.1}]}]
  })"));
  const auto result = run_pipeline(file, {});
  EXPECT_EQ(result.partition->block_count(), 1U);
  EXPECT_NEAR(result.metaconflict->mcf, 0.3, 1e-12);
  EXPECT_EQ(result.metaconflict->cluster_conflicts, (std::vector<double>{0.0}));
  EXPECT_FALSE(result.warnings.empty());  // no time/position metadata
}

TEST(Pipeline, EmptyDecisionSectionIsOmitted) {
  auto doc = json::parse(kTwoReports);
  doc["decision"] = json::object();
  const auto file = parse_corpus(doc);
  const auto result = run_pipeline(file, {});
  EXPECT_FALSE(result.decision.has_value());
  const auto out = json::parse(to_json_text(file.corpus, result));
  EXPECT_FALSE(out.contains("decision"));
  EXPECT_TRUE(out.contains("partition"));
  EXPECT_TRUE(out.contains("metaconflict"));
}

TEST(Pipeline, DecisionSectionIsAnalysed) {
  auto doc = json::parse(kTwoReports);
  doc["decision"] = json::parse(R"({
    "utilities": {"A": 1.0, "B": 0.0},
    "makers": [{"id": "blue", "choices": [
      {"id": "wait", "masses": [{"set": ["A", "B"], "mass": 1.0}]},
      {"id": "act", "masses": [{"set": ["A"], "mass": 0.5}, {"set": ["B"], "mass": 0.5}]}]}]
  })");
  const auto file = parse_corpus(doc);
  const auto result = run_pipeline(file, {});
  ASSERT_TRUE(result.decision.has_value());
  const auto& md = result.decision->makers.at(0);
  EXPECT_NEAR(md.segmentation.preference[0], 0.5, 1e-12);
  EXPECT_NEAR(md.segmentation.preference[1], 0.5, 1e-12);
}

TEST(Pipeline, StageErrorsNameTheStage) {
  const auto file = parse_corpus(json::parse(generate_scenario({})));
  PipelineFlags flags;
  flags.v_max = 0.0;
  try {
    run_pipeline(file, flags);
    FAIL() << "expected a stage failure";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "tracks");
  }
}

TEST(Pipeline, OutputIsDeterministicAcrossThreads) {
  ScenarioConfig cfg;
  cfg.seed = 11;
  const auto file = parse_corpus(json::parse(generate_scenario(cfg)));
  PipelineFlags one;
  PipelineFlags four;
  four.threads = 4;
  four.search.threads = 4;
  const auto a = to_json_text(file.corpus, run_pipeline(file, one));
  const auto b = to_json_text(file.corpus, run_pipeline(file, one));
  const auto c = to_json_text(file.corpus, run_pipeline(file, four));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Tables, SixDecimalPlausibilities) {
  ScenarioConfig cfg;
  const auto file = parse_corpus(json::parse(generate_scenario(cfg)));
  std::ostringstream os;
  print_tables(os, file.corpus, run_pipeline(file, {}));
  const std::string text = os.str();
  EXPECT_NE(text.find("metaconflict = 0.800000"), std::string::npos) << text;
  EXPECT_NE(text.find("0.800000"), std::string::npos) << text;
}

// Command-line behaviour, driven through the built binary.

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DSINTEL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const auto good = dir.file("good.json", kTwoReports);
  auto bad_doc = json::parse(kTwoReports);
  bad_doc["reports"][1]["id"] = "e1";
  const auto bad = dir.file("bad.json", bad_doc.dump());

  EXPECT_EQ(run_cli("pipeline " + good.string()), 0);
  EXPECT_EQ(run_cli("cluster --seed 3 --restarts 4 " + good.string()), 0);
  EXPECT_EQ(run_cli("pipeline " + bad.string()), 2);
  EXPECT_EQ(run_cli("pipeline /nonexistent/x.json"), 2);
  EXPECT_EQ(run_cli("pipeline --bogus " + good.string()), 2);
  EXPECT_EQ(run_cli("tracks --vmax 0 " + good.string()), 2);
  EXPECT_EQ(run_cli("decide --rho 1.5 " + good.string()), 2);
  EXPECT_EQ(run_cli("pipeline"), 2);
}

TEST(Cli, GenerateThenRunAllSubcommands) {
  TempDir dir;
  const auto corpus = dir.file("gen.json");
  ASSERT_EQ(run_cli("gen --seed 7 --out " + corpus.string()), 0);
  ScenarioConfig cfg;
  EXPECT_EQ(slurp(corpus), generate_scenario(cfg));
  for (const char* sub : {"cluster", "specify", "posterior", "tracks", "decide"})
    EXPECT_EQ(run_cli(std::string(sub) + " " + corpus.string()), 0) << sub;
  EXPECT_EQ(run_cli("oracle-check " + corpus.string()), 0);

  const auto out = dir.file("out.json");
  const auto dot = dir.file("g.dot");
  ASSERT_EQ(run_cli("pipeline --seed 5 --restarts 10 --rmax 5 --vmax 30 --top-k 2 --dot " +
                    dot.string() + " --out " + out.string() + " " + corpus.string()),
            0);
  const auto result = json::parse(slurp(out));
  EXPECT_EQ(result["partition"].size(), 3U);
  EXPECT_EQ(result["tracks"][0]["best_paths"].size(), 2U);
  EXPECT_NE(slurp(dot).find("digraph"), std::string::npos);
}

}  // namespace
}  // namespace dsintel::analyst
