#ifndef UNRANK_CURD_H_
#define UNRANK_CURD_H_

// Corrective unranking distillation.
//
// The trained model is frozen as a teacher M and copied into a student w.
// For every forget pair x = <q, d> with substitute r(x) = <q, r_q(d)> the
// student is trained so that
//
//   f_w(x)    <= qtl      (the gamma-quantile of M's scores on A_q^-)
//   f_w(r(x)) >= f_M(x)   (the substitute takes over d's old score)
//
// while every retained positive keeps f_w >= f_M and the sampled negatives
// A_q^- keep f_w <= f_M. All constraints are one-sided hinges, so a student
// already satisfying them receives no update.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "unrank/dataset.h"
#include "unrank/scorer.h"
#include "unrank/unlearn.h"

namespace unrank {

struct UnlearnConfig {
  int k = 5;             // |A_q^-|
  double gamma = 0.0;    // quantile level of the forgetting target
  double lambda_fc = 1.0;
  double lambda_r = 1.0;
  int epochs = 8;
  double lr = 0.05;
  std::uint64_t seed = 1;
  // Stop early once the mean per-item loss of an epoch falls below this.
  // Non-positive disables early stopping.
  double early_stop_loss = 1e-4;

  void Validate() const;
};

// A_q^- for every query, drawn once per run.
struct NegativeSample {
  std::map<QueryId, std::vector<DocId>> per_query;
};

// k documents from D_q^- per query: without replacement when k <= |D_q^-|,
// with replacement otherwise. Deterministic in seed.
NegativeSample SampleNegatives(const Dataset& dataset, int k,
                               std::uint64_t seed);

// Sorts ascending and linearly interpolates at fractional index
// gamma * (n - 1). gamma = 0 gives the minimum and gamma = 1 the maximum.
double Quantile(std::span<const double> scores, double gamma);

// H(a, b) = max(0, a - b).
inline double Hinge(double a, double b) { return a > b ? a - b : 0.0; }

// H(f_w(x), qtl) + H(f_M(x), f_w(r(x))), from scores.
inline double FcLossFromScores(double student_forget, double qtl,
                               double teacher_forget,
                               double student_substitute) {
  return Hinge(student_forget, qtl) +
         Hinge(teacher_forget, student_substitute);
}

// H(f_M(d+), f_w(d+)) + mean over A_q^- of H(f_w(d-), f_M(d-)), from scores.
double RetainLossFromScores(double teacher_pos, double student_pos,
                            std::span<const double> teacher_negs,
                            std::span<const double> student_negs);

double FcLoss(const ScorerParams& student, const TeacherSnapshot& teacher,
              const Dataset& dataset, const QueryId& q, const DocId& d,
              const DocId& substitute, double qtl);

double RetainLoss(const ScorerParams& student, const TeacherSnapshot& teacher,
                  const Dataset& dataset, const QueryId& q, const DocId& d_pos,
                  std::span<const DocId> negatives);

// Per forget pair: the query, document, substitute and the cached teacher
// targets. Exposed for inspection and tests.
struct ForgetTarget {
  QueryId query;
  DocId doc;
  DocId substitute;
  double qtl = 0.0;
  double teacher_score = 0.0;  // f_M(x)
};

// qtl^gamma_M(q; A_q^-) for every affected query, from teacher scores only.
std::vector<ForgetTarget> ComputeForgetTargets(const TeacherSnapshot& teacher,
                                               const Dataset& dataset,
                                               const ForgetSet& forget,
                                               const SubstituteMap& subs,
                                               const NegativeSample& negatives,
                                               double gamma);

// Runs the full procedure and returns M_correct with its per-epoch losses.
// The work list holds one entry per forget pair and one per retained positive
// pair; it is reshuffled every epoch and each entry takes one SGD step.
UnlearnResult CurdUnlearn(const TeacherSnapshot& teacher,
                          const Dataset& dataset, const ForgetSet& forget,
                          const SubstituteMap& subs, const UnlearnConfig& cfg,
                          const EpochObserver& observer = {});

}  // namespace unrank

#endif  // UNRANK_CURD_H_
