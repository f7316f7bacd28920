#include "unrank/harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "unrank/error.h"
#include "unrank/io.h"
#include "unrank/svg.h"

namespace unrank {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads the fields of one config object, rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& parent, const char* name) : name_(name) {
    if (parent.contains(name)) {
      node_ = &parent.at(name);
      if (!node_->is_object()) {
        throw ValidationError(std::string("config section '") + name +
                              "' must be an object");
      }
    }
  }

  template <typename T>
  Section& Get(const char* key, T& out) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return *this;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw ValidationError("config field " + name_ + "." + key + ": " +
                            e.what());
    }
    return *this;
  }

  void Finish() const {
    if (node_ == nullptr) return;
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.contains(key)) {
        throw ValidationError("unknown config field " + name_ + "." + key);
      }
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

fs::path DataDir(const ExperimentConfig& cfg) { return cfg.RunDir() / "data"; }

std::string FractionDirName(double fraction) {
  return "fraction_" + FormatDouble(fraction);
}

// Last column of a CSV with a header row; '#' lines are skipped.
std::vector<double> ReadLastColumn(const fs::path& path) {
  std::istringstream in(ReadTextFile(path));
  std::string line;
  std::vector<double> out;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto comma = line.rfind(',');
    out.push_back(std::stod(line.substr(comma + 1)));
  }
  return out;
}

std::string CsvCell(const std::string& s) {
  std::string out;
  for (char c : s) out += (c == ',' || c == '\n' || c == '\r') ? ' ' : c;
  return out;
}

std::optional<double> MetricByName(const MetricsReport& r,
                                   const std::string& name) {
  for (const auto& [key, value] : MetricsFields(r)) {
    if (key == name) return value;
  }
  return std::nullopt;
}

void PrintReport(std::ostream& out, std::string_view label,
                 const MetricsReport& r) {
  out << label;
  for (const auto& [key, value] : MetricsFields(r)) {
    out << "  " << key << "=";
    if (value) {
      out << *value;
    } else {
      out << "n/a";
    }
  }
  out << "\n";
}

}  // namespace

fs::path ExperimentConfig::RunDir() const {
  return fs::path(output_dir) / run_id;
}

ScorerShape ExperimentConfig::Shape(std::size_t feature_dim) const {
  return {scorer_kind, feature_dim, hidden_dim};
}

void ExperimentConfig::Validate() const {
  if (run_id.empty()) throw ValidationError("run_id must not be empty");
  if (hidden_dim == 0) throw ValidationError("hidden_dim must be positive");
  if (data.train_pairs.empty()) generator.Validate();
  protocol.Validate();
  train.Validate();
  unlearn.Validate();
  baseline.Validate();
  if (sweep.k.empty() || sweep.gamma.empty() || sweep.fraction.empty() ||
      sweep.methods.empty()) {
    throw ValidationError("sweep grids must be non-empty");
  }
  for (const auto& m : sweep.methods) {
    if (!IsKnownMethod(m)) {
      throw ValidationError("unknown method '" + m + "' in sweep.methods");
    }
  }
  if (sweep.repeats < 1) throw ValidationError("sweep.repeats must be >= 1");
  if (sweep.epoch_unit < 1) {
    throw ValidationError("sweep.epoch_unit must be >= 1");
  }
  if (sweep.workers < 1) throw ValidationError("sweep.workers must be >= 1");
}

ordered_json ConfigToJson(const ExperimentConfig& c) {
  ordered_json j;
  j["run_id"] = c.run_id;
  j["output_dir"] = c.output_dir;
  j["scorer"] = {{"kind", std::string(ScorerKindName(c.scorer_kind))},
                 {"hidden_dim", c.hidden_dim}};
  const auto& g = c.generator;
  j["generator"] = {{"n_queries", g.n_queries},
                    {"docs_per_query", g.docs_per_query},
                    {"pos_per_query", g.pos_per_query},
                    {"neg_ratio", g.neg_ratio},
                    {"d_feat", g.d_feat},
                    {"n_topics", g.n_topics},
                    {"noise_sigma", g.noise_sigma},
                    {"test_fraction", g.test_fraction},
                    {"seed", g.seed}};
  j["protocol"] = {
      {"fraction", c.protocol.fraction},
      {"balance", c.protocol.balance},
      {"seed", c.protocol.seed},
      {"include_negative_doc_removal",
       c.forget_options.include_negative_doc_removal}};
  const auto& t = c.train;
  j["train"] = {{"margin", t.margin},
                {"lr", t.lr},
                {"epochs", t.epochs},
                {"negatives_per_positive", t.negatives_per_positive},
                {"seed", t.seed},
                {"patience", t.patience},
                {"min_delta", t.min_delta},
                {"validation_queries", t.validation_queries}};
  const auto& u = c.unlearn;
  j["unlearn"] = {{"k", u.k},
                  {"gamma", u.gamma},
                  {"lambda_fc", u.lambda_fc},
                  {"lambda_r", u.lambda_r},
                  {"epochs", u.epochs},
                  {"lr", u.lr},
                  {"seed", u.seed},
                  {"early_stop_loss", u.early_stop_loss}};
  const auto& b = c.baseline;
  j["baseline"] = {{"epochs", b.epochs},
                   {"lr", b.lr},
                   {"seed", b.seed},
                   {"margin", b.margin},
                   {"negatives_per_positive", b.negatives_per_positive},
                   {"amnesiac_negatives", b.amnesiac_negatives},
                   {"neggrad_ascent_epochs", b.neggrad_ascent_epochs},
                   {"neggrad_ascent_lr", b.neggrad_ascent_lr},
                   {"badt_lr", b.badt_lr}};
  const auto& s = c.sweep;
  j["sweep"] = {{"k", s.k},
                {"gamma", s.gamma},
                {"fraction", s.fraction},
                {"methods", s.methods},
                {"repeats", s.repeats},
                {"epoch_unit", s.epoch_unit},
                {"workers", s.workers}};
  j["data"] = {{"train_pairs", c.data.train_pairs},
               {"test_pairs", c.data.test_pairs},
               {"query_features", c.data.query_features},
               {"doc_features", c.data.doc_features}};
  return j;
}

ExperimentConfig ConfigFromJson(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> kTopLevel = {
      "run_id", "output_dir", "scorer", "generator", "protocol", "train",
      "unlearn", "baseline", "sweep", "data"};
  for (const auto& [key, value] : j.items()) {
    if (!kTopLevel.contains(key)) {
      throw ValidationError("unknown config field " + key);
    }
  }
  ExperimentConfig c;
  try {
    if (j.contains("run_id")) c.run_id = j.at("run_id").get<std::string>();
    if (j.contains("output_dir")) {
      c.output_dir = j.at("output_dir").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  std::string kind(ScorerKindName(c.scorer_kind));
  Section(j, "scorer").Get("kind", kind).Get("hidden_dim", c.hidden_dim)
      .Finish();
  c.scorer_kind = ParseScorerKind(kind);
  auto& g = c.generator;
  Section(j, "generator")
      .Get("n_queries", g.n_queries)
      .Get("docs_per_query", g.docs_per_query)
      .Get("pos_per_query", g.pos_per_query)
      .Get("neg_ratio", g.neg_ratio)
      .Get("d_feat", g.d_feat)
      .Get("n_topics", g.n_topics)
      .Get("noise_sigma", g.noise_sigma)
      .Get("test_fraction", g.test_fraction)
      .Get("seed", g.seed)
      .Finish();
  Section(j, "protocol")
      .Get("fraction", c.protocol.fraction)
      .Get("balance", c.protocol.balance)
      .Get("seed", c.protocol.seed)
      .Get("include_negative_doc_removal",
           c.forget_options.include_negative_doc_removal)
      .Finish();
  auto& t = c.train;
  Section(j, "train")
      .Get("margin", t.margin)
      .Get("lr", t.lr)
      .Get("epochs", t.epochs)
      .Get("negatives_per_positive", t.negatives_per_positive)
      .Get("seed", t.seed)
      .Get("patience", t.patience)
      .Get("min_delta", t.min_delta)
      .Get("validation_queries", t.validation_queries)
      .Finish();
  auto& u = c.unlearn;
  Section(j, "unlearn")
      .Get("k", u.k)
      .Get("gamma", u.gamma)
      .Get("lambda_fc", u.lambda_fc)
      .Get("lambda_r", u.lambda_r)
      .Get("epochs", u.epochs)
      .Get("lr", u.lr)
      .Get("seed", u.seed)
      .Get("early_stop_loss", u.early_stop_loss)
      .Finish();
  auto& b = c.baseline;
  Section(j, "baseline")
      .Get("epochs", b.epochs)
      .Get("lr", b.lr)
      .Get("seed", b.seed)
      .Get("margin", b.margin)
      .Get("negatives_per_positive", b.negatives_per_positive)
      .Get("amnesiac_negatives", b.amnesiac_negatives)
      .Get("neggrad_ascent_epochs", b.neggrad_ascent_epochs)
      .Get("neggrad_ascent_lr", b.neggrad_ascent_lr)
      .Get("badt_lr", b.badt_lr)
      .Finish();
  auto& s = c.sweep;
  Section(j, "sweep")
      .Get("k", s.k)
      .Get("gamma", s.gamma)
      .Get("fraction", s.fraction)
      .Get("methods", s.methods)
      .Get("repeats", s.repeats)
      .Get("epoch_unit", s.epoch_unit)
      .Get("workers", s.workers)
      .Finish();
  Section(j, "data")
      .Get("train_pairs", c.data.train_pairs)
      .Get("test_pairs", c.data.test_pairs)
      .Get("query_features", c.data.query_features)
      .Get("doc_features", c.data.doc_features)
      .Finish();
  return c;
}

void ApplyOverride(json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw UsageError("--set expects key=value, got '" +
                     std::string(assignment) + "'");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;

  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw UsageError("malformed --set key '" + key + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

void ApplySeed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.generator.seed = seed;
  cfg.protocol.seed = seed;
  cfg.train.seed = seed;
  cfg.unlearn.seed = seed;
  cfg.baseline.seed = seed;
}

ExperimentConfig LoadConfig(const std::optional<fs::path>& path,
                            const std::vector<std::string>& overrides,
                            std::optional<std::uint64_t> seed) {
  json j = json::object();
  if (path) {
    try {
      j = json::parse(ReadTextFile(*path));
    } catch (const json::exception& e) {
      throw ValidationError("cannot parse config " + path->string() + ": " +
                            e.what());
    }
  }
  for (const auto& o : overrides) ApplyOverride(j, o);
  ExperimentConfig cfg = ConfigFromJson(j);
  if (seed) ApplySeed(cfg, *seed);
  cfg.Validate();
  return cfg;
}

const std::vector<std::string>& AllMethods() {
  static const std::vector<std::string> kMethods = {
      "curd", "retrain", "cf", "amnesiac", "neggrad", "badt"};
  return kMethods;
}

bool IsKnownMethod(std::string_view method) {
  const auto& all = AllMethods();
  return std::find(all.begin(), all.end(), method) != all.end();
}

Problem MakeProblem(Dataset train, Dataset test, const ForgetSpec& spec,
                    SubstituteMap subs, const ForgetOptions& options) {
  ForgetSet forget = BuildForgetSet(train, spec, options);
  ValidateSubstitutes(train, forget, subs);
  CorrectedDataset corrected = ApplySubstitutes(train, forget, subs);
  return Problem{std::move(train), std::move(test), std::move(forget),
                 std::move(subs), std::move(corrected)};
}

UnlearnResult RunMethod(std::string_view method,
                        const TeacherSnapshot& teacher, const Problem& problem,
                        const ExperimentConfig& cfg,
                        const EpochObserver& observer) {
  if (method == "curd") {
    return CurdUnlearn(teacher, problem.train, problem.forget, problem.subs,
                       cfg.unlearn, observer);
  }
  switch (ParseBaseline(method)) {
    case BaselineMethod::kRetrain:
      return Retrain(problem.corrected, teacher.params().shape(), cfg.train);
    case BaselineMethod::kCF:
      return CatastrophicForgetting(teacher, problem.corrected, cfg.baseline);
    case BaselineMethod::kAmnesiac:
      return Amnesiac(teacher, problem.train, problem.forget, problem.subs,
                      cfg.baseline, observer);
    case BaselineMethod::kNegGrad:
      return NegGrad(teacher, problem.train, problem.corrected, problem.forget,
                     cfg.baseline);
    case BaselineMethod::kBadT:
      return BadTeacher(teacher, problem.train, problem.corrected,
                        problem.forget, cfg.baseline, observer);
  }
  throw UsageError("unknown unlearning method '" + std::string(method) + "'");
}

MetricsReport EvaluateResult(const ScorerParams& params,
                             const TeacherSnapshot& teacher,
                             const Problem& problem,
                             std::span<const double> unlearn_epoch_seconds,
                             std::span<const double> train_epoch_seconds) {
  MetricsReport r = Evaluate(
      params, {problem.train, problem.test, problem.forget, problem.subs,
               problem.corrected, teacher.params()});
  if (!unlearn_epoch_seconds.empty() && !train_epoch_seconds.empty()) {
    r.unlearn_time_normalised = NormalisedUnlearnTime(
        unlearn_epoch_seconds, train_epoch_seconds,
        static_cast<int>(unlearn_epoch_seconds.size()));
  }
  return r;
}

GeneratedCorpus BuildCorpus(const ExperimentConfig& cfg) {
  if (cfg.data.train_pairs.empty()) return Generate(cfg.generator);
  if (cfg.data.test_pairs.empty() || cfg.data.query_features.empty() ||
      cfg.data.doc_features.empty()) {
    throw ValidationError(
        "data.train_pairs requires test_pairs, query_features and "
        "doc_features");
  }
  auto qf = ReadFeaturesFile(cfg.data.query_features);
  auto df = ReadFeaturesFile(cfg.data.doc_features);
  return {Dataset(ReadPairsFile(cfg.data.train_pairs), qf, df),
          Dataset(ReadPairsFile(cfg.data.test_pairs), qf, df)};
}

bool SweepResult::AnyFailed() const {
  return std::any_of(cells.begin(), cells.end(),
                     [](const SweepCell& c) { return !c.error.empty(); });
}

const std::vector<std::string>& SweepMetrics() {
  static const std::vector<std::string> kMetrics = {
      "p_forget",        "p_forget_query", "p_forget_doc",
      "p_correct",       "p_correct_query", "p_correct_doc",
      "p_retain",        "p_test",         "p_delta_retain"};
  return kMetrics;
}

SweepResult RunSweep(const ExperimentConfig& cfg, std::string_view axis,
                     const GeneratedCorpus& corpus,
                     const TeacherSnapshot& teacher,
                     std::span<const double> train_epoch_seconds) {
  struct CellSpec {
    std::string value;
    double x;
    ExperimentConfig cfg;
    std::string method;
  };
  std::vector<CellSpec> grid;
  if (axis == "k") {
    for (int k : cfg.sweep.k) {
      CellSpec c{std::to_string(k), static_cast<double>(k), cfg, "curd"};
      c.cfg.unlearn.k = k;
      grid.push_back(std::move(c));
    }
  } else if (axis == "gamma") {
    for (double g : cfg.sweep.gamma) {
      CellSpec c{FormatDouble(g), g, cfg, "curd"};
      c.cfg.unlearn.gamma = g;
      grid.push_back(std::move(c));
    }
  } else if (axis == "fraction") {
    for (double f : cfg.sweep.fraction) {
      CellSpec c{FormatDouble(f), f, cfg, "curd"};
      c.cfg.protocol.fraction = f;
      grid.push_back(std::move(c));
    }
  } else if (axis == "method") {
    for (std::size_t i = 0; i < cfg.sweep.methods.size(); ++i) {
      grid.push_back({cfg.sweep.methods[i], static_cast<double>(i), cfg,
                      cfg.sweep.methods[i]});
    }
  } else {
    throw UsageError("unknown sweep axis '" + std::string(axis) +
                     "' (expected k, gamma, fraction or method)");
  }
  for (const auto& c : grid) c.cfg.unlearn.Validate();

  const int repeats = cfg.sweep.repeats;
  const bool per_cell_partition = axis == "fraction";

  // Shared partitions, one per repeat, when the axis leaves F unchanged.
  std::vector<std::optional<Problem>> shared(repeats);
  std::vector<std::string> shared_error(repeats);
  const auto make_problem = [&](const ForgetProtocol& proto) {
    ProtocolResult pr = BuildProtocol(corpus.train, proto);
    return MakeProblem(corpus.train, corpus.test, pr.spec, std::move(pr.subs),
                       cfg.forget_options);
  };
  if (!per_cell_partition) {
    for (int r = 0; r < repeats; ++r) {
      ForgetProtocol proto = cfg.protocol;
      proto.seed += static_cast<std::uint64_t>(r);
      try {
        shared[r].emplace(make_problem(proto));
      } catch (const std::exception& e) {
        shared_error[r] = e.what();
      }
    }
  }

  SweepResult result;
  result.axis = std::string(axis);
  result.cells.resize(grid.size() * repeats);
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    while (true) {
      const std::size_t task = next.fetch_add(1);
      if (task >= result.cells.size()) return;
      const CellSpec& spec = grid[task / repeats];
      const int r = static_cast<int>(task % repeats);
      SweepCell& cell = result.cells[task];
      cell.value = spec.value;
      cell.x = spec.x;
      cell.repeat = r;
      try {
        std::optional<Problem> local;
        const Problem* problem = nullptr;
        if (per_cell_partition) {
          ForgetProtocol proto = spec.cfg.protocol;
          proto.seed += static_cast<std::uint64_t>(r);
          local.emplace(make_problem(proto));
          problem = &*local;
        } else if (shared[r]) {
          problem = &*shared[r];
        } else {
          throw ValidationError(shared_error[r]);
        }
        EpochObserver observer;
        if (per_cell_partition) {
          observer = [&](int epoch, const ScorerParams& w) {
            if (epoch % cfg.sweep.epoch_unit != 0) return;
            cell.trajectory.push_back(
                {epoch / cfg.sweep.epoch_unit,
                 EvaluateResult(w, teacher, *problem, {}, {})});
          };
        }
        const UnlearnResult run =
            RunMethod(spec.method, teacher, *problem, spec.cfg, observer);
        cell.report = EvaluateResult(run.params, teacher, *problem,
                                     run.EpochSeconds(), train_epoch_seconds);
      } catch (const std::exception& e) {
        cell.error = e.what();
        cell.report.reset();
      }
    }
  };
  const int workers = std::max(1, cfg.sweep.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  return result;
}

std::vector<SummaryRow> SummariseSweep(const SweepResult& result) {
  std::vector<SummaryRow> rows;
  // Cells are grid-major, so equal values are contiguous.
  std::size_t i = 0;
  while (i < result.cells.size()) {
    std::size_t end = i;
    while (end < result.cells.size() &&
           result.cells[end].value == result.cells[i].value) {
      ++end;
    }
    for (const auto& metric : SweepMetrics()) {
      std::vector<double> xs;
      for (std::size_t c = i; c < end; ++c) {
        if (!result.cells[c].report) continue;
        if (auto v = MetricByName(*result.cells[c].report, metric)) {
          xs.push_back(*v);
        }
      }
      SummaryRow row{result.cells[i].value, result.cells[i].x, metric,
                     std::nullopt, std::nullopt, static_cast<int>(xs.size())};
      if (!xs.empty()) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        row.mean = mean;
        if (xs.size() >= 2) {
          double ss = 0.0;
          for (double x : xs) ss += (x - mean) * (x - mean);
          const double n = static_cast<double>(xs.size());
          row.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
        }
      }
      rows.push_back(std::move(row));
    }
    i = end;
  }
  return rows;
}

std::string SweepCsv(const SweepResult& result) {
  std::ostringstream out;
  out << "axis,value,repeat,metric,score,status\n";
  for (const auto& cell : result.cells) {
    const std::string status =
        cell.error.empty() ? "ok" : "error: " + CsvCell(cell.error);
    for (const auto& metric : SweepMetrics()) {
      out << result.axis << ',' << cell.value << ',' << cell.repeat << ','
          << metric << ',';
      if (cell.report) {
        if (auto v = MetricByName(*cell.report, metric)) {
          out << FormatDouble(*v);
        }
      }
      out << ',' << status << '\n';
    }
  }
  return out.str();
}

std::string SweepSummaryCsv(const SweepResult& result) {
  std::ostringstream out;
  out << "axis,value,metric,mean,stderr,n\n";
  for (const auto& row : SummariseSweep(result)) {
    out << result.axis << ',' << row.value << ',' << row.metric << ',';
    if (row.mean) out << FormatDouble(*row.mean);
    out << ',';
    if (row.std_error) out << FormatDouble(*row.std_error);
    out << ',' << row.n << '\n';
  }
  return out.str();
}

std::string SweepTimingCsv(const SweepResult& result) {
  std::ostringstream out;
  out << "value,repeat,unlearn_time_normalised\n";
  for (const auto& cell : result.cells) {
    out << cell.value << ',' << cell.repeat << ',';
    if (cell.report) out << FormatDouble(cell.report->unlearn_time_normalised);
    out << '\n';
  }
  return out.str();
}

std::string SweepTrajectoryCsv(const SweepResult& result) {
  std::ostringstream out;
  out << "value,repeat,epoch_unit,metric,score\n";
  for (const auto& cell : result.cells) {
    for (const auto& point : cell.trajectory) {
      for (const auto& metric : SweepMetrics()) {
        out << cell.value << ',' << cell.repeat << ',' << point.epoch_unit
            << ',' << metric << ',';
        if (auto v = MetricByName(point.report, metric)) {
          out << FormatDouble(*v);
        }
        out << '\n';
      }
    }
  }
  return out.str();
}

std::string SweepSvg(const SweepResult& result) {
  const auto rows = SummariseSweep(result);
  std::vector<ChartSeries> series;
  for (const auto& metric : SweepMetrics()) {
    ChartSeries s{metric, {}, {}};
    for (const auto& row : rows) {
      if (row.metric != metric || !row.mean) continue;
      s.x.push_back(row.x);
      s.y.push_back(*row.mean);
    }
    if (!s.x.empty()) series.push_back(std::move(s));
  }
  ChartOptions options;
  options.title = "Sweep over " + result.axis + " (mean over repeats)";
  options.x_label = result.axis;
  options.y_label = "score";
  if (result.axis == "method") {
    for (const auto& row : rows) {
      if (row.metric == SweepMetrics().front()) {
        options.x_categories.push_back(row.value);
      }
    }
  }
  return LineChartSvg(series, options);
}

std::string HashFile(const fs::path& path) {
  const std::string bytes = ReadTextFile(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

namespace {

struct RunCorpus {
  GeneratedCorpus corpus;
};

GeneratedCorpus LoadRunCorpus(const ExperimentConfig& cfg) {
  const fs::path dir = DataDir(cfg);
  if (!fs::exists(dir / "train_pairs.tsv")) {
    throw ValidationError("no corpus under " + dir.string() +
                          "; run `generate` first");
  }
  auto qf = ReadFeaturesFile(dir / "query_features.tsv");
  auto df = ReadFeaturesFile(dir / "doc_features.tsv");
  return {Dataset(ReadPairsFile(dir / "train_pairs.tsv"), qf, df),
          Dataset(ReadPairsFile(dir / "test_pairs.tsv"), qf, df)};
}

Problem LoadRunProblem(const ExperimentConfig& cfg) {
  GeneratedCorpus corpus = LoadRunCorpus(cfg);
  const fs::path dir = DataDir(cfg);
  return MakeProblem(
      std::move(corpus.train), std::move(corpus.test),
      ForgetSpecFromJson(ReadTextFile(dir / "forget_spec.json")),
      SubstitutesFromJson(ReadTextFile(dir / "substitutes.json")),
      cfg.forget_options);
}

TeacherSnapshot LoadTeacher(const ExperimentConfig& cfg) {
  const fs::path path = cfg.RunDir() / "teacher.json";
  if (!fs::exists(path)) {
    throw ValidationError("no teacher checkpoint at " + path.string() +
                          "; run `train` first");
  }
  return TeacherSnapshot(LoadCheckpoint(path));
}

// Config as recorded in the manifest; run location is left out so that two
// runs of one config produce identical manifests.
ordered_json ManifestConfig(const ExperimentConfig& cfg) {
  ordered_json j = ConfigToJson(cfg);
  j.erase("run_id");
  j.erase("output_dir");
  return j;
}

}  // namespace

int CmdGenerate(const ExperimentConfig& cfg) {
  const GeneratedCorpus corpus = BuildCorpus(cfg);
  const fs::path dir = DataDir(cfg);
  WritePairsFile(dir / "train_pairs.tsv", corpus.train);
  WritePairsFile(dir / "test_pairs.tsv", corpus.test);
  WriteFeaturesFile(dir / "query_features.tsv", *corpus.train.query_features());
  WriteFeaturesFile(dir / "doc_features.tsv", *corpus.train.doc_features());

  const ProtocolResult main = BuildProtocol(corpus.train, cfg.protocol);
  WriteTextFile(dir / "forget_spec.json", ForgetSpecToJson(main.spec));
  WriteTextFile(dir / "substitutes.json", SubstitutesToJson(main.subs));
  for (double f : cfg.sweep.fraction) {
    ForgetProtocol proto = cfg.protocol;
    proto.fraction = f;
    const ProtocolResult pr = BuildProtocol(corpus.train, proto);
    const fs::path sub = dir / "forget" / FractionDirName(f);
    WriteTextFile(sub / "forget_spec.json", ForgetSpecToJson(pr.spec));
    WriteTextFile(sub / "substitutes.json", SubstitutesToJson(pr.subs));
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  ordered_json manifest;
  manifest["config"] = ManifestConfig(cfg);
  ordered_json hashes = ordered_json::object();
  for (const auto& f : files) {
    hashes[fs::relative(f, cfg.RunDir()).generic_string()] =
        "fnv1a64:" + HashFile(f);
  }
  manifest["files"] = hashes;
  WriteTextFile(cfg.RunDir() / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "generated " << corpus.train.queries().size()
            << " training queries (" << corpus.train.num_pairs()
            << " pairs), " << corpus.test.queries().size()
            << " test queries, " << BuildForgetSet(corpus.train, main.spec).size()
            << " forget pairs into " << dir.string() << "\n";
  return kExitOk;
}

int CmdTrain(const ExperimentConfig& cfg) {
  const GeneratedCorpus corpus = LoadRunCorpus(cfg);
  const TrainResult result = Train(
      corpus.train, cfg.Shape(corpus.train.feature_dim()), cfg.train);
  SaveCheckpoint(cfg.RunDir() / "teacher.json", result.params);
  WriteTextFile(cfg.RunDir() / "train_log.csv", TrainLogCsv(result));
  WriteTextFile(cfg.RunDir() / "train_timing.csv", TrainTimingCsv(result));
  std::cout << "trained " << ScorerKindName(cfg.scorer_kind) << " for "
            << result.log.size() << " epochs"
            << (result.converged ? " (converged)" : "") << "; training MRR "
            << MeanReciprocalRank(result.params, corpus.train) << "\n";
  return kExitOk;
}

int CmdUnlearn(const ExperimentConfig& cfg, std::string_view method) {
  if (!IsKnownMethod(method)) {
    throw UsageError("unknown method '" + std::string(method) +
                     "' (expected retrain, cf, amnesiac, neggrad, badt or "
                     "curd)");
  }
  const Problem problem = LoadRunProblem(cfg);
  const TeacherSnapshot teacher = LoadTeacher(cfg);
  const UnlearnResult result = RunMethod(method, teacher, problem, cfg);
  const fs::path dir = cfg.RunDir() / std::string(method);
  SaveCheckpoint(dir / "model.json", result.params);
  WriteTextFile(dir / "epochs.csv", UnlearnLogCsv(method, result));
  std::cout << method << ": " << result.log.size() << " epochs -> "
            << (dir / "model.json").string() << "\n";
  return kExitOk;
}

int CmdEvaluate(const ExperimentConfig& cfg, std::string_view target) {
  if (target != "teacher" && !IsKnownMethod(target)) {
    throw UsageError("unknown evaluation target '" + std::string(target) + "'");
  }
  const Problem problem = LoadRunProblem(cfg);
  const TeacherSnapshot teacher = LoadTeacher(cfg);
  const fs::path dir = cfg.RunDir() / std::string(target);
  ScorerParams params = teacher.params();
  std::vector<double> unlearn_seconds;
  if (target != "teacher") {
    params = LoadCheckpoint(dir / "model.json");
    unlearn_seconds = ReadLastColumn(dir / "epochs.csv");
  }
  const std::vector<double> train_seconds =
      ReadLastColumn(cfg.RunDir() / "train_timing.csv");
  const MetricsReport report = EvaluateResult(params, teacher, problem,
                                              unlearn_seconds, train_seconds);
  WriteTextFile(dir / "metrics.json", MetricsToJson(report));
  WriteTextFile(dir / "metrics.csv", MetricsToCsv(report));
  PrintReport(std::cout, target, report);
  return kExitOk;
}

int CmdSweep(const ExperimentConfig& cfg, std::string_view axis) {
  if (axis != "k" && axis != "gamma" && axis != "fraction" &&
      axis != "method") {
    throw UsageError("unknown sweep axis '" + std::string(axis) + "'");
  }
  if (!fs::exists(DataDir(cfg) / "train_pairs.tsv")) CmdGenerate(cfg);
  if (!fs::exists(cfg.RunDir() / "teacher.json")) CmdTrain(cfg);
  const GeneratedCorpus corpus = LoadRunCorpus(cfg);
  const TeacherSnapshot teacher = LoadTeacher(cfg);
  const std::vector<double> train_seconds =
      ReadLastColumn(cfg.RunDir() / "train_timing.csv");
  const SweepResult result =
      RunSweep(cfg, axis, corpus, teacher, train_seconds);

  const fs::path dir = cfg.RunDir() / ("sweep_" + std::string(axis));
  WriteTextFile(dir / "sweep.csv", SweepCsv(result));
  WriteTextFile(dir / "summary.csv", SweepSummaryCsv(result));
  WriteTextFile(dir / "timing.csv", SweepTimingCsv(result));
  WriteTextFile(dir / "sweep.svg", SweepSvg(result));
  if (axis == "fraction") {
    WriteTextFile(dir / "trajectories.csv", SweepTrajectoryCsv(result));
  }
  for (const auto& cell : result.cells) {
    if (!cell.error.empty()) {
      std::cerr << "cell " << axis << "=" << cell.value << " repeat "
                << cell.repeat << " failed: " << cell.error << "\n";
    }
  }
  std::cout << "sweep over " << axis << ": " << result.cells.size()
            << " cells -> " << dir.string() << "\n";
  return result.AnyFailed() ? kExitPartialSweep : kExitOk;
}

int CmdReport(const ExperimentConfig& cfg) {
  std::vector<std::string> targets = {"teacher"};
  for (const auto& m : AllMethods()) targets.push_back(m);
  std::ostringstream csv;
  csv << "method";
  for (const auto& c : MetricsColumns()) csv << ',' << c;
  csv << '\n';
  int rows = 0;
  for (const auto& t : targets) {
    const fs::path path = cfg.RunDir() / t / "metrics.json";
    if (!fs::exists(path)) continue;
    const MetricsReport r = MetricsFromJson(ReadTextFile(path));
    csv << t;
    for (const auto& [key, value] : MetricsFields(r)) {
      csv << ',';
      if (value) csv << FormatDouble(*value);
    }
    csv << '\n';
    PrintReport(std::cout, t, r);
    ++rows;
  }
  if (rows == 0) {
    throw ValidationError("no metrics under " + cfg.RunDir().string() +
                          "; run `evaluate` first");
  }
  WriteTextFile(cfg.RunDir() / "report.csv", csv.str());
  return kExitOk;
}

}  // namespace unrank
