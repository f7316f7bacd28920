#ifndef UNRANK_HARNESS_H_
#define UNRANK_HARNESS_H_

// Config-driven experiment orchestration: corpus generation, base training,
// unlearning with any method, evaluation, parameter sweeps and reports.
//
// Every command reads one ExperimentConfig and writes under
// <output_dir>/<run_id>/:
//
//   manifest.json              config plus content hashes of the data files
//   data/                      pairs, features, forget spec, substitutes
//   teacher.json               trained checkpoint
//   train_log.csv              epoch,loss,val_mrr
//   train_timing.csv           epoch,wall_seconds
//   <method>/model.json        unlearned checkpoint
//   <method>/epochs.csv        epoch,fc_loss,retain_loss,wall_seconds
//   <method>/metrics.{json,csv}
//   sweep_<axis>/sweep.csv     axis,value,repeat,metric,score,status
//   sweep_<axis>/summary.csv   axis,value,metric,mean,stderr,n
//   sweep_<axis>/sweep.svg
//   sweep_<axis>/timing.csv    value,repeat,unlearn_time_normalised
//   sweep_fraction/trajectories.csv
//   report.csv

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "unrank/baselines.h"
#include "unrank/curd.h"
#include "unrank/datagen.h"
#include "unrank/dataset.h"
#include "unrank/metrics.h"
#include "unrank/scorer.h"
#include "unrank/trainer.h"

namespace unrank {

// Exit codes of the command line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitPartialSweep = 3;

struct SweepGrid {
  std::vector<int> k = {2, 5, 10, 15};
  std::vector<double> gamma = {0.0, 0.25, 0.5, 0.75};
  std::vector<double> fraction = {0.01, 0.05, 0.10, 0.20};
  std::vector<std::string> methods = {"curd", "retrain", "cf",
                                      "amnesiac", "neggrad", "badt"};
  int repeats = 3;
  // Epochs per trajectory point in the forget-size study. Presentation only.
  int epoch_unit = 1;
  int workers = 1;
};

// External corpus files. When train_pairs is empty the corpus is synthesised
// from the generator settings.
struct DataPaths {
  std::string train_pairs;
  std::string test_pairs;
  std::string query_features;
  std::string doc_features;
};

struct ExperimentConfig {
  std::string run_id = "default";
  std::string output_dir = "runs";
  ScorerKind scorer_kind = ScorerKind::kBiEncoder;
  std::size_t hidden_dim = 128;
  GenConfig generator;
  ForgetProtocol protocol;
  ForgetOptions forget_options;
  TrainConfig train;
  UnlearnConfig unlearn;
  BaselineConfig baseline;
  SweepGrid sweep;
  DataPaths data;

  std::filesystem::path RunDir() const;
  ScorerShape Shape(std::size_t feature_dim) const;
  // Throws ValidationError for inconsistent settings or empty grids.
  void Validate() const;
};

nlohmann::ordered_json ConfigToJson(const ExperimentConfig& cfg);
// Missing fields keep their defaults; unknown fields are rejected.
ExperimentConfig ConfigFromJson(const nlohmann::json& j);

// Sets a dotted path, e.g. "unlearn.k=10". The value is parsed as JSON when
// possible and taken as a string otherwise.
void ApplyOverride(nlohmann::json& j, std::string_view assignment);

// Replaces every seed in the config.
void ApplySeed(ExperimentConfig& cfg, std::uint64_t seed);

// Reads the JSON file (if any), applies overrides then the global seed.
ExperimentConfig LoadConfig(const std::optional<std::filesystem::path>& path,
                            const std::vector<std::string>& overrides,
                            std::optional<std::uint64_t> seed);

// "curd" or a baseline name.
bool IsKnownMethod(std::string_view method);
const std::vector<std::string>& AllMethods();

// Everything an unlearning method and the evaluator need besides the teacher.
struct Problem {
  Dataset train;
  Dataset test;
  ForgetSet forget;
  SubstituteMap subs;
  CorrectedDataset corrected;
};

Problem MakeProblem(Dataset train, Dataset test, const ForgetSpec& spec,
                    SubstituteMap subs, const ForgetOptions& options = {});

// Runs the named method starting from the teacher. Throws UsageError for an
// unknown method. The observer is honoured by curd, amnesiac and badt.
UnlearnResult RunMethod(std::string_view method,
                        const TeacherSnapshot& teacher, const Problem& problem,
                        const ExperimentConfig& cfg,
                        const EpochObserver& observer = {});

// Full metric report including the normalised unlearning time.
MetricsReport EvaluateResult(const ScorerParams& params,
                             const TeacherSnapshot& teacher,
                             const Problem& problem,
                             std::span<const double> unlearn_epoch_seconds,
                             std::span<const double> train_epoch_seconds);

// Synthesises or ingests the corpus as configured.
GeneratedCorpus BuildCorpus(const ExperimentConfig& cfg);

struct TrajectoryPoint {
  int epoch_unit = 0;
  MetricsReport report;
};

struct SweepCell {
  std::string value;  // grid value as printed
  double x = 0.0;     // numeric position (index for the method axis)
  int repeat = 0;
  std::optional<MetricsReport> report;
  std::string error;  // empty on success
  std::vector<TrajectoryPoint> trajectory;  // fraction axis only
};

struct SweepResult {
  std::string axis;
  std::vector<SweepCell> cells;  // grid-major, then repeat

  bool AnyFailed() const;
};

// Metric names reported by sweeps (deterministic fields only).
const std::vector<std::string>& SweepMetrics();

// Trains nothing: the teacher and its epoch timings are supplied. Repeat r
// re-partitions the forget set with protocol seed + r; model seeds stay fixed.
SweepResult RunSweep(const ExperimentConfig& cfg, std::string_view axis,
                     const GeneratedCorpus& corpus,
                     const TeacherSnapshot& teacher,
                     std::span<const double> train_epoch_seconds);

struct SummaryRow {
  std::string value;
  double x = 0.0;
  std::string metric;
  std::optional<double> mean;
  std::optional<double> std_error;  // sample stdev / sqrt(n), needs n >= 2
  int n = 0;
};

std::vector<SummaryRow> SummariseSweep(const SweepResult& result);

std::string SweepCsv(const SweepResult& result);
std::string SweepSummaryCsv(const SweepResult& result);
std::string SweepTimingCsv(const SweepResult& result);
std::string SweepTrajectoryCsv(const SweepResult& result);
std::string SweepSvg(const SweepResult& result);

// File-based commands behind the CLI. Each returns an exit code.
int CmdGenerate(const ExperimentConfig& cfg);
int CmdTrain(const ExperimentConfig& cfg);
int CmdUnlearn(const ExperimentConfig& cfg, std::string_view method);
// target is a method name or "teacher".
int CmdEvaluate(const ExperimentConfig& cfg, std::string_view target);
int CmdSweep(const ExperimentConfig& cfg, std::string_view axis);
int CmdReport(const ExperimentConfig& cfg);

// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string HashFile(const std::filesystem::path& path);

}  // namespace unrank

#endif  // UNRANK_HARNESS_H_
