#include "unrank/baselines.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <vector>

#include "unrank/error.h"
#include "unrank/rng.h"
#include "unrank/scoring.h"

namespace unrank {

namespace {

constexpr std::uint64_t kBadTeacherSalt = 0xA0761D6478BD642FULL;
constexpr std::uint64_t kShuffleSalt = 0xE7037ED1A0B428DBULL;

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void CheckLoss(double loss, const char* method, int epoch, std::size_t item) {
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << method << ": non-finite loss at epoch " << epoch << ", item "
        << item;
    throw NumericError(msg.str());
  }
}

TrainConfig FineTuneConfig(const BaselineConfig& cfg) {
  TrainConfig t;
  t.margin = cfg.margin;
  t.lr = cfg.lr;
  t.epochs = cfg.epochs;
  t.negatives_per_positive = cfg.negatives_per_positive;
  t.seed = cfg.seed;
  t.patience = 0;
  return t;
}

UnlearnResult FromTraining(const TrainResult& tr) {
  UnlearnResult out{tr.params, {}};
  for (const auto& e : tr.log) {
    out.log.push_back({e.epoch, 0.0, e.loss, e.wall_seconds});
  }
  return out;
}

// Fixed per-pair negative samples drawn once per run.
std::vector<std::vector<DocId>> SampleForgetNegatives(const Dataset& dataset,
                                                      const ForgetSet& forget,
                                                      int count,
                                                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<DocId>> out;
  for (const auto& p : forget.pairs()) {
    const auto negs = dataset.Negatives(p.query);
    const std::size_t k =
        std::min(negs.size(), static_cast<std::size_t>(count));
    std::vector<DocId> picked;
    for (std::size_t i : rng.SampleWithoutReplacement(negs.size(), k)) {
      picked.push_back(negs[i]);
    }
    out.push_back(std::move(picked));
  }
  return out;
}

}  // namespace

std::string_view BaselineName(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::kRetrain:
      return "retrain";
    case BaselineMethod::kCF:
      return "cf";
    case BaselineMethod::kAmnesiac:
      return "amnesiac";
    case BaselineMethod::kNegGrad:
      return "neggrad";
    case BaselineMethod::kBadT:
      return "badt";
  }
  return "unknown";
}

BaselineMethod ParseBaseline(std::string_view name) {
  for (auto m : {BaselineMethod::kRetrain, BaselineMethod::kCF,
                 BaselineMethod::kAmnesiac, BaselineMethod::kNegGrad,
                 BaselineMethod::kBadT}) {
    if (BaselineName(m) == name) return m;
  }
  throw UsageError("unknown unlearning method '" + std::string(name) + "'");
}

void BaselineConfig::Validate() const {
  if (epochs < 1) throw ValidationError("baseline epochs must be at least 1");
  if (!(lr > 0.0)) throw ValidationError("baseline lr must be positive");
  if (amnesiac_negatives < 1) {
    throw ValidationError("amnesiac_negatives must be at least 1");
  }
  if (neggrad_ascent_epochs < 0) {
    throw ValidationError("neggrad_ascent_epochs must be non-negative");
  }
  if (!(neggrad_ascent_lr >= 0.0)) {
    throw ValidationError("neggrad_ascent_lr must be non-negative");
  }
  if (!(badt_lr > 0.0)) throw ValidationError("badt_lr must be positive");
}

void ApplyAscentStep(ScorerParams& params, std::span<const double> grad,
                     double lr) {
  auto w = params.mutable_weights();
  if (grad.size() != w.size()) {
    throw ShapeError("gradient length does not match weight count");
  }
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += lr * grad[i];
}

UnlearnResult Retrain(const CorrectedDataset& corrected,
                      const ScorerShape& shape, const TrainConfig& train) {
  return FromTraining(Train(corrected.dataset(), shape, train));
}

UnlearnResult CatastrophicForgetting(const TeacherSnapshot& teacher,
                                     const CorrectedDataset& corrected,
                                     const BaselineConfig& cfg) {
  if (cfg.epochs == 0) return {teacher.params(), {}};
  cfg.Validate();
  return FromTraining(
      TrainFrom(teacher.params(), corrected.dataset(), FineTuneConfig(cfg)));
}

UnlearnResult Amnesiac(const TeacherSnapshot& teacher, const Dataset& dataset,
                       const ForgetSet& forget, const SubstituteMap& subs,
                       const BaselineConfig& cfg,
                       const EpochObserver& observer) {
  cfg.Validate();
  ValidateSubstitutes(dataset, forget, subs);
  UnlearnResult result{teacher.params(), {}};
  if (forget.empty()) return result;

  const auto negatives =
      SampleForgetNegatives(dataset, forget, cfg.amnesiac_negatives, cfg.seed);
  std::vector<double> old_level;
  for (const auto& p : forget.pairs()) {
    old_level.push_back(ScorePair(teacher.params(), dataset, p.query, p.doc));
  }
  ScorerParams& w = result.params;
  std::vector<double> grad(w.size());
  std::vector<std::size_t> order(forget.size());
  Rng rng(cfg.seed ^ kShuffleSalt);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = Clock::now();
    UnlearnEpoch entry;
    entry.epoch = epoch;
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.Shuffle(order);
    // Swap: the forgotten document drops below each sampled negative, and
    // the negatives climb to the forgotten document's old score.
    for (std::size_t i : order) {
      const auto& p = forget.pairs()[i];
      const auto qf = dataset.QueryFeature(p.query);
      const auto xf = dataset.DocFeature(p.doc);
      const double inv_n = 1.0 / static_cast<double>(negatives[i].size());
      std::fill(grad.begin(), grad.end(), 0.0);
      const double s_x = Score(w, qf, xf);
      double loss = 0.0, x_weight = 0.0;
      for (const auto& neg : negatives[i]) {
        const auto nf = dataset.DocFeature(neg);
        const double s_n = Score(w, qf, nf);
        double n_weight = 0.0;
        if (cfg.margin + s_x - s_n > 0.0) {
          loss += inv_n * (cfg.margin + s_x - s_n);
          x_weight += inv_n;
          n_weight -= inv_n;
        }
        if (old_level[i] - s_n > 0.0) {
          loss += inv_n * (old_level[i] - s_n);
          n_weight -= inv_n;
        }
        if (n_weight != 0.0) AccumulateScoreGradient(w, qf, nf, n_weight, grad);
      }
      CheckLoss(loss, "amnesiac", epoch, i);
      if (x_weight != 0.0) AccumulateScoreGradient(w, qf, xf, x_weight, grad);
      if (loss > 0.0) ApplySgdStep(w, grad, cfg.lr);
      entry.fc_loss += loss;
    }
    // Substitutes rise above the same negatives.
    for (std::size_t i : order) {
      const auto& p = forget.pairs()[i];
      const auto qf = dataset.QueryFeature(p.query);
      const auto sf = dataset.DocFeature(*subs.Get(p.query, p.doc));
      const double inv_n = 1.0 / static_cast<double>(negatives[i].size());
      std::fill(grad.begin(), grad.end(), 0.0);
      const double s_sub = Score(w, qf, sf);
      double loss = 0.0, sub_weight = 0.0;
      for (const auto& neg : negatives[i]) {
        const auto nf = dataset.DocFeature(neg);
        const double h = cfg.margin - s_sub + Score(w, qf, nf);
        if (h > 0.0) {
          loss += inv_n * h;
          sub_weight -= inv_n;
          AccumulateScoreGradient(w, qf, nf, inv_n, grad);
        }
      }
      CheckLoss(loss, "amnesiac", epoch, i);
      if (sub_weight != 0.0) {
        AccumulateScoreGradient(w, qf, sf, sub_weight, grad);
        ApplySgdStep(w, grad, cfg.lr);
      }
      entry.fc_loss += loss;
    }
    entry.wall_seconds = SecondsSince(start);
    result.log.push_back(entry);
    if (observer) observer(epoch, w);
  }
  return result;
}

ScorerParams NegGradAscent(const ScorerParams& start, const Dataset& dataset,
                           const ForgetSet& forget, const BaselineConfig& cfg) {
  ScorerParams w = start;
  if (forget.empty() || cfg.neggrad_ascent_lr == 0.0) return w;
  const auto negatives =
      SampleForgetNegatives(dataset, forget, cfg.amnesiac_negatives, cfg.seed);
  std::vector<double> grad(w.size());
  for (int epoch = 1; epoch <= cfg.neggrad_ascent_epochs; ++epoch) {
    for (std::size_t i = 0; i < forget.size(); ++i) {
      const auto& p = forget.pairs()[i];
      const auto qf = dataset.QueryFeature(p.query);
      const auto xf = dataset.DocFeature(p.doc);
      const double inv_n = 1.0 / static_cast<double>(negatives[i].size());
      std::fill(grad.begin(), grad.end(), 0.0);
      const double s_x = Score(w, qf, xf);
      double loss = 0.0, x_weight = 0.0;
      // Unclipped margin term: a trained model satisfies the hinge on F, so
      // ascending the clipped loss would have zero gradient.
      for (const auto& neg : negatives[i]) {
        const auto nf = dataset.DocFeature(neg);
        loss += inv_n * (cfg.margin - s_x + Score(w, qf, nf));
        x_weight -= inv_n;
        AccumulateScoreGradient(w, qf, nf, inv_n, grad);
      }
      if (!std::isfinite(loss)) {
        throw NumericError("neggrad: ascent diverged at epoch " +
                           std::to_string(epoch));
      }
      AccumulateScoreGradient(w, qf, xf, x_weight, grad);
      ApplyAscentStep(w, grad, cfg.neggrad_ascent_lr);
    }
    for (double v : w.weights()) {
      if (!std::isfinite(v)) {
        throw NumericError("neggrad: ascent diverged at epoch " +
                           std::to_string(epoch));
      }
    }
  }
  return w;
}

UnlearnResult NegGrad(const TeacherSnapshot& teacher, const Dataset& dataset,
                      const CorrectedDataset& corrected,
                      const ForgetSet& forget, const BaselineConfig& cfg) {
  cfg.Validate();
  UnlearnResult result{teacher.params(), {}};
  // Ascent epochs are timed and logged as a single leading entry per epoch.
  ScorerParams w = teacher.params();
  BaselineConfig one = cfg;
  one.neggrad_ascent_epochs = 1;
  for (int epoch = 1; epoch <= cfg.neggrad_ascent_epochs; ++epoch) {
    const auto start = Clock::now();
    one.seed = cfg.seed + static_cast<std::uint64_t>(epoch - 1);
    w = NegGradAscent(w, dataset, forget, one);
    result.log.push_back({epoch, 0.0, 0.0, SecondsSince(start)});
  }
  const TrainResult tuned =
      TrainFrom(std::move(w), corrected.dataset(), FineTuneConfig(cfg));
  const int offset = static_cast<int>(result.log.size());
  for (const auto& e : tuned.log) {
    result.log.push_back({offset + e.epoch, 0.0, e.loss, e.wall_seconds});
  }
  result.params = tuned.params;
  return result;
}

ScorerParams BadTeacherModel(const ScorerShape& shape, std::uint64_t seed) {
  return ScorerParams::RandomInit(shape, seed ^ kBadTeacherSalt);
}

UnlearnResult BadTeacher(const TeacherSnapshot& teacher,
                         const Dataset& dataset,
                         const CorrectedDataset& corrected,
                         const ForgetSet& forget, const BaselineConfig& cfg,
                         const EpochObserver& observer) {
  cfg.Validate();
  const ScorerParams bad = BadTeacherModel(teacher.params().shape(), cfg.seed);
  struct Target {
    PairFeatures features;
    double value;
    bool forget;
  };
  std::vector<Target> targets;
  for (const auto& p : forget.pairs()) {
    const auto f = FeaturesOf(dataset, p.query, p.doc);
    targets.push_back({f, Score(bad, f.query, f.doc), true});
  }
  const Dataset& star = corrected.dataset();
  for (const auto& p : corrected.star_pairs()) {
    const auto f = FeaturesOf(star, p.query, p.doc);
    targets.push_back({f, Score(teacher.params(), f.query, f.doc), false});
  }

  UnlearnResult result{teacher.params(), {}};
  ScorerParams& w = result.params;
  std::vector<double> grad(w.size());
  std::vector<std::size_t> order(targets.size());
  Rng rng(cfg.seed ^ kShuffleSalt);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = Clock::now();
    UnlearnEpoch entry;
    entry.epoch = epoch;
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.Shuffle(order);
    for (std::size_t i : order) {
      const Target& t = targets[i];
      const double diff = Score(w, t.features.query, t.features.doc) - t.value;
      const double loss = diff * diff;
      CheckLoss(loss, "badt", epoch, i);
      (t.forget ? entry.fc_loss : entry.retain_loss) += loss;
      if (diff == 0.0) continue;
      std::fill(grad.begin(), grad.end(), 0.0);
      AccumulateScoreGradient(w, t.features.query, t.features.doc, 2.0 * diff,
                              grad);
      ApplySgdStep(w, grad, cfg.badt_lr);
    }
    entry.wall_seconds = SecondsSince(start);
    result.log.push_back(entry);
    if (observer) observer(epoch, w);
  }
  return result;
}

}  // namespace unrank
