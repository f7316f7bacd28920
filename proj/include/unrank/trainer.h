#ifndef UNRANK_TRAINER_H_
#define UNRANK_TRAINER_H_

// Pairwise margin-loss training of a scorer on a labelled corpus.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "unrank/dataset.h"
#include "unrank/scorer.h"

namespace unrank {

struct TrainConfig {
  double margin = 1.0;
  double lr = 0.05;
  int epochs = 100;
  int negatives_per_positive = 5;
  std::uint64_t seed = 1;
  // Stop once validation MRR has moved by at most min_delta, and the epoch
  // loss has not risen by more than min_delta, for `patience` consecutive
  // epochs. patience == 0 disables early stopping.
  int patience = 10;
  double min_delta = 1e-3;
  // Leading queries (sorted order) used for validation MRR; 0 means all.
  std::size_t validation_queries = 0;

  void Validate() const;
};

struct TrainEpoch {
  int epoch = 0;  // 1-based
  double loss = 0.0;     // mean hinge loss per positive
  double val_mrr = 0.0;
  double wall_seconds = 0.0;  // update pass only
};

struct TrainResult {
  ScorerParams params;
  std::vector<TrainEpoch> log;
  bool converged = false;

  std::vector<double> EpochSeconds() const;
};

// max(0, margin - f(d+) + f(d-)) averaged over the sampled negatives of each
// positive, one SGD step per positive. Negatives are drawn without replacement
// each epoch. Throws NumericError with the epoch and batch index if the loss
// becomes non-finite.
TrainResult TrainFrom(ScorerParams init, const Dataset& dataset,
                      const TrainConfig& config);

// Fresh RandomInit(shape, config.seed) followed by TrainFrom.
TrainResult Train(const Dataset& dataset, const ScorerShape& shape,
                  const TrainConfig& config);

// CSV `epoch,loss,val_mrr`.
std::string TrainLogCsv(const TrainResult& result);
// CSV `epoch,wall_seconds`.
std::string TrainTimingCsv(const TrainResult& result);

}  // namespace unrank

#endif  // UNRANK_TRAINER_H_
