#ifndef UNRANK_BASELINES_H_
#define UNRANK_BASELINES_H_

// Comparison unlearners adapted to corrective unranking:
//
//   Retrain   train from scratch on S*
//   CF        keep training the trained model on S* (catastrophic forgetting)
//   Amnesiac  swap forgotten documents below sampled negatives, then lift the
//             substitutes above those negatives
//   NegGrad   gradient ascent on the forget pairs, then fine-tune on S*
//   BadT      distil a random "bad teacher" on F and the trained model on S*

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "unrank/dataset.h"
#include "unrank/scorer.h"
#include "unrank/trainer.h"
#include "unrank/unlearn.h"

namespace unrank {

enum class BaselineMethod { kRetrain, kCF, kAmnesiac, kNegGrad, kBadT };

std::string_view BaselineName(BaselineMethod method);
// "retrain", "cf", "amnesiac", "neggrad", "badt". Throws UsageError.
BaselineMethod ParseBaseline(std::string_view name);

struct BaselineConfig {
  int epochs = 20;
  double lr = 0.05;
  std::uint64_t seed = 1;
  // Pairwise settings for the fine-tuning phases (CF, NegGrad phase 2).
  double margin = 1.0;
  int negatives_per_positive = 5;
  // Negatives sampled per forget pair by Amnesiac and NegGrad.
  int amnesiac_negatives = 10;
  int neggrad_ascent_epochs = 3;
  double neggrad_ascent_lr = 0.05;
  // Squared-error distillation has residual-scaled gradients and diverges at
  // the hinge-based rate, so BadT keeps its own step size.
  double badt_lr = 0.01;

  void Validate() const;
};

// w + lr * grad; lr = 0 is the identity.
void ApplyAscentStep(ScorerParams& params, std::span<const double> grad,
                     double lr);

// Retraining reuses the base training configuration so that an empty forget
// set reproduces the trained model exactly.
UnlearnResult Retrain(const CorrectedDataset& corrected,
                      const ScorerShape& shape, const TrainConfig& train);

UnlearnResult CatastrophicForgetting(const TeacherSnapshot& teacher,
                                     const CorrectedDataset& corrected,
                                     const BaselineConfig& cfg);

UnlearnResult Amnesiac(const TeacherSnapshot& teacher, const Dataset& dataset,
                       const ForgetSet& forget, const SubstituteMap& subs,
                       const BaselineConfig& cfg,
                       const EpochObserver& observer = {});

// Runs only the ascent phase, which climbs the unclipped pairwise margin on F;
// exposed for tests.
ScorerParams NegGradAscent(const ScorerParams& start, const Dataset& dataset,
                           const ForgetSet& forget, const BaselineConfig& cfg);

UnlearnResult NegGrad(const TeacherSnapshot& teacher, const Dataset& dataset,
                      const CorrectedDataset& corrected,
                      const ForgetSet& forget, const BaselineConfig& cfg);

UnlearnResult BadTeacher(const TeacherSnapshot& teacher,
                         const Dataset& dataset,
                         const CorrectedDataset& corrected,
                         const ForgetSet& forget, const BaselineConfig& cfg,
                         const EpochObserver& observer = {});

// The randomly initialised scorer BadTeacher distils on F.
ScorerParams BadTeacherModel(const ScorerShape& shape, std::uint64_t seed);

}  // namespace unrank

#endif  // UNRANK_BASELINES_H_
