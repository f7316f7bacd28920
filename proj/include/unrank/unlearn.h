#ifndef UNRANK_UNLEARN_H_
#define UNRANK_UNLEARN_H_

// Types shared by every unlearning method.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "unrank/scorer.h"

namespace unrank {

struct UnlearnEpoch {
  int epoch = 0;  // 1-based
  // Summed per-item losses over the epoch, split into the forgetting /
  // correcting side and the retaining side. Baselines map their own terms.
  double fc_loss = 0.0;
  double retain_loss = 0.0;
  double wall_seconds = 0.0;
};

struct UnlearnResult {
  ScorerParams params;
  std::vector<UnlearnEpoch> log;

  std::vector<double> EpochSeconds() const;
};

// Called after every unlearning epoch with the current student.
using EpochObserver = std::function<void(int epoch, const ScorerParams&)>;

// `# method=<name>` then `epoch,fc_loss,retain_loss,wall_seconds`.
std::string UnlearnLogCsv(std::string_view method, const UnlearnResult& result);

}  // namespace unrank

#endif  // UNRANK_UNLEARN_H_
