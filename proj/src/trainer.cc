#include "unrank/trainer.h"

#include <chrono>
#include <cmath>
#include <sstream>

#include "unrank/error.h"
#include "unrank/io.h"
#include "unrank/metrics.h"
#include "unrank/rng.h"
#include "unrank/scoring.h"

namespace unrank {

namespace {

constexpr std::uint64_t kSamplingSalt = 0x9E3779B97F4A7C15ULL;

struct PositiveItem {
  const QueryId* query;
  const DocId* doc;
  const std::vector<DocId>* negatives;
};

bool Converged(const std::vector<TrainEpoch>& log, const TrainConfig& cfg) {
  const std::size_t p = static_cast<std::size_t>(cfg.patience);
  if (cfg.patience <= 0 || log.size() < p + 1) return false;
  for (std::size_t i = log.size() - p; i < log.size(); ++i) {
    if (std::abs(log[i].val_mrr - log[i - 1].val_mrr) > cfg.min_delta) {
      return false;
    }
    if (log[i].loss > log[i - 1].loss + cfg.min_delta) return false;
  }
  return true;
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(margin > 0.0)) throw ValidationError("train margin must be positive");
  if (!(lr > 0.0)) throw ValidationError("train lr must be positive");
  if (epochs < 0) throw ValidationError("train epochs must be non-negative");
  if (negatives_per_positive < 1) {
    throw ValidationError("negatives_per_positive must be at least 1");
  }
  if (patience < 0) throw ValidationError("patience must be non-negative");
}

std::vector<double> TrainResult::EpochSeconds() const {
  std::vector<double> out;
  for (const auto& e : log) out.push_back(e.wall_seconds);
  return out;
}

TrainResult TrainFrom(ScorerParams init, const Dataset& dataset,
                      const TrainConfig& config) {
  config.Validate();
  if (init.shape().feature_dim != dataset.feature_dim()) {
    throw ShapeError("scorer feature_dim does not match the dataset");
  }
  TrainResult result{std::move(init), {}, false};
  if (config.epochs == 0) return result;

  std::vector<QueryId> val_queries = dataset.queries();
  if (config.validation_queries > 0 &&
      config.validation_queries < val_queries.size()) {
    val_queries.resize(config.validation_queries);
  }

  std::vector<std::vector<DocId>> negatives;
  std::vector<std::vector<DocId>> positives;
  for (const auto& q : dataset.queries()) {
    negatives.push_back(dataset.Negatives(q));
    positives.push_back(dataset.Positives(q));
  }
  std::vector<PositiveItem> items;
  for (std::size_t qi = 0; qi < dataset.queries().size(); ++qi) {
    for (const auto& d : positives[qi]) {
      items.push_back({&dataset.queries()[qi], &d, &negatives[qi]});
    }
  }

  Rng rng(config.seed ^ kSamplingSalt);
  std::vector<double> grad(result.params.size());
  std::vector<std::size_t> order(items.size());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.Shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t batch = 0; batch < order.size(); ++batch) {
      const PositiveItem& item = items[order[batch]];
      const auto& negs = *item.negatives;
      const std::size_t k = std::min<std::size_t>(
          negs.size(), static_cast<std::size_t>(config.negatives_per_positive));
      const auto picks = rng.SampleWithoutReplacement(negs.size(), k);

      const auto qf = dataset.QueryFeature(*item.query);
      const double pos = Score(result.params, qf, dataset.DocFeature(*item.doc));
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = 0.0;
      double pos_weight = 0.0;
      const double inv_k = 1.0 / static_cast<double>(k);
      for (std::size_t idx : picks) {
        const auto df = dataset.DocFeature(negs[idx]);
        const double neg = Score(result.params, qf, df);
        const double h = config.margin - pos + neg;
        if (h > 0.0) {
          loss += h * inv_k;
          pos_weight -= inv_k;
          AccumulateScoreGradient(result.params, qf, df, inv_k, grad);
        }
      }
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch "
            << batch;
        throw NumericError(msg.str());
      }
      if (pos_weight != 0.0) {
        AccumulateScoreGradient(result.params, qf,
                                dataset.DocFeature(*item.doc), pos_weight,
                                grad);
        ApplySgdStep(result.params, grad, config.lr);
      }
      epoch_loss += loss;
    }
    const double seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    TrainEpoch entry;
    entry.epoch = epoch;
    entry.loss = items.empty() ? 0.0
                               : epoch_loss / static_cast<double>(items.size());
    entry.val_mrr = MeanReciprocalRank(result.params, dataset, val_queries);
    entry.wall_seconds = seconds;
    result.log.push_back(entry);
    if (Converged(result.log, config)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

TrainResult Train(const Dataset& dataset, const ScorerShape& shape,
                  const TrainConfig& config) {
  return TrainFrom(ScorerParams::RandomInit(shape, config.seed), dataset,
                   config);
}

std::string TrainLogCsv(const TrainResult& result) {
  std::ostringstream out;
  out << "epoch,loss,val_mrr\n";
  for (const auto& e : result.log) {
    out << e.epoch << ',' << FormatDouble(e.loss) << ','
        << FormatDouble(e.val_mrr) << '\n';
  }
  return out.str();
}

std::string TrainTimingCsv(const TrainResult& result) {
  std::ostringstream out;
  out << "epoch,wall_seconds\n";
  for (const auto& e : result.log) {
    out << e.epoch << ',' << FormatDouble(e.wall_seconds) << '\n';
  }
  return out.str();
}

}  // namespace unrank
