#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "unrank/error.h"
#include "unrank/harness.h"
#include "unrank/io.h"

namespace unrank {
namespace {

namespace fs = std::filesystem;

// A small corpus that keeps sweeps and pipeline runs quick.
ExperimentConfig SmallConfig(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.output_dir = out.string();
  cfg.run_id = "small";
  cfg.hidden_dim = 32;
  cfg.generator.n_queries = 30;
  cfg.generator.docs_per_query = 10;
  cfg.generator.neg_ratio = 9;
  cfg.generator.d_feat = 16;
  cfg.generator.n_topics = 5;
  cfg.protocol.fraction = 0.2;
  cfg.sweep.fraction = {0.1, 0.2};
  return cfg;
}

class HarnessDirTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("unrank_harness_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST(ConfigTest, JsonRoundTrip) {
  ExperimentConfig cfg;
  cfg.scorer_kind = ScorerKind::kCrossMlp;
  cfg.unlearn.k = 7;
  cfg.unlearn.gamma = 0.25;
  cfg.sweep.methods = {"curd", "cf"};
  cfg.forget_options.include_negative_doc_removal = true;
  cfg.baseline.badt_lr = 0.002;
  const auto j = ConfigToJson(cfg);
  const ExperimentConfig back = ConfigFromJson(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(ConfigToJson(back), j);
}

TEST(ConfigTest, UnknownFieldsAreRejected) {
  EXPECT_THROW(ConfigFromJson(nlohmann::json::parse(R"({"unlearn":{"kk":3}})")),
               ValidationError);
  EXPECT_THROW(ConfigFromJson(nlohmann::json::parse(R"({"extra":1})")),
               ValidationError);
  EXPECT_THROW(ConfigFromJson(nlohmann::json::parse(R"({"unlearn":{"k":"x"}})")),
               ValidationError);
}

TEST(ConfigTest, OverridesAndSeed) {
  const ExperimentConfig cfg = LoadConfig(
      std::nullopt,
      {"unlearn.k=10", "scorer.kind=cross_mlp", "sweep.gamma=[0,0.75]",
       "run_id=abc"},
      std::uint64_t{99});
  EXPECT_EQ(cfg.unlearn.k, 10);
  EXPECT_EQ(cfg.scorer_kind, ScorerKind::kCrossMlp);
  EXPECT_EQ(cfg.sweep.gamma, (std::vector<double>{0.0, 0.75}));
  EXPECT_EQ(cfg.run_id, "abc");
  EXPECT_EQ(cfg.generator.seed, 99u);
  EXPECT_EQ(cfg.protocol.seed, 99u);
  EXPECT_EQ(cfg.train.seed, 99u);
  EXPECT_EQ(cfg.unlearn.seed, 99u);
  EXPECT_EQ(cfg.baseline.seed, 99u);
  EXPECT_THROW(LoadConfig(std::nullopt, {"novalue"}, std::nullopt), UsageError);
  EXPECT_THROW(LoadConfig(std::nullopt, {"unlearn.gamma=3"}, std::nullopt),
               ValidationError);
}

TEST(ConfigTest, MethodNames) {
  EXPECT_EQ(AllMethods().size(), 6u);
  for (const auto& m : AllMethods()) EXPECT_TRUE(IsKnownMethod(m));
  EXPECT_FALSE(IsKnownMethod("teacher"));
}

TEST(HashTest, Fnv1aKnownValues) {
  const fs::path p =
      fs::temp_directory_path() / ("unrank_hash_" + std::to_string(::getpid()));
  WriteTextFile(p, "");
  EXPECT_EQ(HashFile(p), "cbf29ce484222325");
  WriteTextFile(p, "a");
  EXPECT_EQ(HashFile(p), "af63dc4c8601ec8c");
  fs::remove(p);
}

SweepResult FakeSweep(std::vector<std::vector<double>> retain_by_value) {
  SweepResult r;
  r.axis = "k";
  for (std::size_t v = 0; v < retain_by_value.size(); ++v) {
    int repeat = 0;
    for (double x : retain_by_value[v]) {
      SweepCell cell;
      cell.value = std::to_string(v);
      cell.x = static_cast<double>(v);
      cell.repeat = repeat++;
      MetricsReport m;
      m.p_retain = x;
      m.p_forget = 0.5;
      cell.report = m;
      r.cells.push_back(cell);
    }
  }
  return r;
}

TEST(SummaryTest, MeanAndStandardError) {
  const auto rows = SummariseSweep(FakeSweep({{0.2, 0.4, 0.9}, {0.7}}));
  bool saw_multi = false, saw_single = false;
  for (const auto& row : rows) {
    if (row.metric != "p_retain") continue;
    if (row.value == "0") {
      saw_multi = true;
      EXPECT_EQ(row.n, 3);
      EXPECT_DOUBLE_EQ(*row.mean, 0.5);
      // Sample stdev sqrt(0.13) over sqrt(3).
      EXPECT_NEAR(*row.std_error, std::sqrt(0.13) / std::sqrt(3.0), 1e-15);
    } else {
      saw_single = true;
      EXPECT_EQ(row.n, 1);
      EXPECT_DOUBLE_EQ(*row.mean, 0.7);
      EXPECT_FALSE(row.std_error.has_value());
    }
  }
  EXPECT_TRUE(saw_multi && saw_single);
}

TEST(SummaryTest, CsvShapesAndSvg) {
  SweepResult r = FakeSweep({{0.2, 0.4}, {0.7, 0.8}});
  r.cells[1].report.reset();
  r.cells[1].error = "boom, bad";
  EXPECT_TRUE(r.AnyFailed());
  std::istringstream csv(SweepCsv(r));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "axis,value,repeat,metric,score,status");
  int rows = 0, errors = 0;
  while (std::getline(csv, line)) {
    ++rows;
    if (line.find("error: boom  bad") != std::string::npos) ++errors;
  }
  EXPECT_EQ(rows, static_cast<int>(4 * SweepMetrics().size()));
  EXPECT_EQ(errors, static_cast<int>(SweepMetrics().size()));

  const std::string svg = SweepSvg(r);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("width=\"800\""), std::string::npos);
  EXPECT_NE(svg.find("height=\"500\""), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("p_retain"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST_F(HarnessDirTest, GenerateWritesSpecsAndStableManifest) {
  const ExperimentConfig cfg = SmallConfig(dir_);
  ASSERT_EQ(CmdGenerate(cfg), kExitOk);
  const fs::path run = cfg.RunDir();
  for (double f : cfg.sweep.fraction) {
    const fs::path sub = run / "data" / "forget" / ("fraction_" + FormatDouble(f));
    EXPECT_TRUE(fs::exists(sub / "forget_spec.json")) << sub;
    EXPECT_TRUE(fs::exists(sub / "substitutes.json")) << sub;
  }
  int spec_dirs = 0;
  for (const auto& e : fs::directory_iterator(run / "data" / "forget")) {
    spec_dirs += e.is_directory();
  }
  EXPECT_EQ(spec_dirs, 2);
  const std::string first = ReadTextFile(run / "manifest.json");
  const auto manifest = nlohmann::json::parse(first);
  EXPECT_TRUE(manifest.at("files").contains("data/train_pairs.tsv"));
  EXPECT_FALSE(manifest.at("config").contains("output_dir"));
  ASSERT_EQ(CmdGenerate(cfg), kExitOk);
  EXPECT_EQ(ReadTextFile(run / "manifest.json"), first);
}

TEST_F(HarnessDirTest, PipelineProducesConsistentArtifacts) {
  ExperimentConfig cfg = SmallConfig(dir_);
  ASSERT_EQ(CmdGenerate(cfg), kExitOk);
  ASSERT_EQ(CmdTrain(cfg), kExitOk);
  const fs::path run = cfg.RunDir();
  ASSERT_EQ(CmdUnlearn(cfg, "curd"), kExitOk);
  std::istringstream epochs(ReadTextFile(run / "curd" / "epochs.csv"));
  std::string header, line;
  do {
    std::getline(epochs, header);
  } while (header.starts_with("#"));
  EXPECT_NE(header.find("wall_seconds"), std::string::npos);
  int rows = 0;
  while (std::getline(epochs, line)) ++rows;
  EXPECT_GE(rows, 1);
  EXPECT_LE(rows, cfg.unlearn.epochs);

  ASSERT_EQ(CmdEvaluate(cfg, "curd"), kExitOk);
  const MetricsReport a =
      MetricsFromJson(ReadTextFile(run / "curd" / "metrics.json"));
  ASSERT_EQ(CmdEvaluate(cfg, "curd"), kExitOk);
  MetricsReport b = MetricsFromJson(ReadTextFile(run / "curd" / "metrics.json"));
  b.unlearn_time_normalised = a.unlearn_time_normalised;
  EXPECT_EQ(a, b);
  ASSERT_EQ(CmdEvaluate(cfg, "teacher"), kExitOk);
  ASSERT_EQ(CmdReport(cfg), kExitOk);
  std::istringstream report(ReadTextFile(run / "report.csv"));
  rows = 0;
  while (std::getline(report, line)) ++rows;
  EXPECT_EQ(rows, 3);  // header, teacher, curd

  EXPECT_THROW(CmdUnlearn(cfg, "ssd"), UsageError);
  EXPECT_THROW(CmdSweep(cfg, "lambda"), UsageError);
}

TEST_F(HarnessDirTest, SweepAggregatesRepeatsAndTrajectories) {
  ExperimentConfig cfg = SmallConfig(dir_);
  cfg.sweep.repeats = 2;
  cfg.sweep.workers = 2;
  cfg.unlearn.epochs = 2;
  cfg.unlearn.early_stop_loss = 0.0;
  const GeneratedCorpus corpus = BuildCorpus(cfg);
  const TrainResult tr =
      Train(corpus.train, cfg.Shape(corpus.train.feature_dim()), cfg.train);
  const TeacherSnapshot teacher(tr.params);
  const auto seconds = tr.EpochSeconds();
  const SweepResult fr = RunSweep(cfg, "fraction", corpus, teacher, seconds);
  ASSERT_FALSE(fr.AnyFailed());
  ASSERT_EQ(fr.cells.size(), 4u);
  for (const auto& c : fr.cells) EXPECT_EQ(c.trajectory.size(), 2u);
  // Repeats re-partition the forget set.
  EXPECT_NE(fr.cells[0].report->p_forget, std::nullopt);

  // Parallel and sequential sweeps agree on every deterministic field.
  ExperimentConfig seq = cfg;
  seq.sweep.workers = 1;
  const SweepResult k1 = RunSweep(cfg, "k", corpus, teacher, seconds);
  const SweepResult k2 = RunSweep(seq, "k", corpus, teacher, seconds);
  EXPECT_EQ(SweepCsv(k1), SweepCsv(k2));
  EXPECT_EQ(SweepSummaryCsv(k1), SweepSummaryCsv(k2));
}

TEST_F(HarnessDirTest, CurdForgetLossTrendsDownOnReferenceCorpus) {
  ExperimentConfig cfg;
  cfg.unlearn.early_stop_loss = 0.0;
  const GeneratedCorpus corpus = BuildCorpus(cfg);
  const ProtocolResult pr = BuildProtocol(corpus.train, cfg.protocol);
  const Problem problem = MakeProblem(corpus.train, corpus.test, pr.spec, pr.subs);
  const TeacherSnapshot teacher(
      Train(corpus.train, cfg.Shape(corpus.train.feature_dim()), cfg.train)
          .params);
  const UnlearnResult r = RunMethod("curd", teacher, problem, cfg);
  ASSERT_EQ(r.log.size(), static_cast<std::size_t>(cfg.unlearn.epochs));
  EXPECT_LT(r.log.back().fc_loss, r.log.front().fc_loss);
  // Non-increasing trend: each half averages no higher than the one before.
  const std::size_t half = r.log.size() / 2;
  double first = 0.0, second = 0.0;
  for (std::size_t i = 0; i < half; ++i) first += r.log[i].fc_loss;
  for (std::size_t i = half; i < 2 * half; ++i) second += r.log[i].fc_loss;
  EXPECT_LE(second, first);
}

#ifdef UNRANK_CLI
int RunCli(const std::string& args) {
  const std::string cmd =
      std::string(UNRANK_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

TEST_F(HarnessDirTest, CliExitCodes) {
  const std::string base = "--set output_dir=" + dir_.string() +
                           " --set generator.n_queries=20 --set scorer.hidden_dim=8";
  EXPECT_EQ(RunCli(""), kExitUsage);
  EXPECT_EQ(RunCli(base + " frobnicate"), kExitUsage);
  EXPECT_EQ(RunCli(base + " --set unlearn.k=0 generate"), kExitUsage);
  EXPECT_EQ(RunCli(base + " --set bogus.field=1 generate"), kExitUsage);
  // Training before generating is a runtime error.
  EXPECT_EQ(RunCli(base + " train"), kExitRuntime);
  EXPECT_EQ(RunCli(base + " generate"), kExitOk);
  EXPECT_EQ(RunCli(base + " unlearn --method ssd"), kExitUsage);
  EXPECT_EQ(RunCli(base + " sweep --axis lambda"), kExitUsage);
}
#endif

}  // namespace
}  // namespace unrank
