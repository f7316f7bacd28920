#ifndef UNRANK_METRICS_H_
#define UNRANK_METRICS_H_

// Ranking-based evaluation of corrective unranking: forgetting, correction,
// retention, generalisation, retention shift and unlearning cost.
//
// All rankings sort by descending score and break ties by ascending DocId, so
// every metric is a deterministic function of the scores.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "unrank/dataset.h"
#include "unrank/scorer.h"

namespace unrank {

struct RankTable {
  // Descending score, ties by ascending id.
  std::vector<std::pair<DocId, double>> ordered;
  std::map<DocId, std::size_t> rank_of;  // 1-based

  // Throws ValidationError for a document not in the table.
  std::size_t RankOf(const DocId& d) const;
};

// Ranks pre-computed scores. Input order does not matter.
RankTable RankScores(std::vector<std::pair<DocId, double>> scored);

// Scores docs for q with params and ranks them. Requires docs non-empty.
RankTable Rank(const ScorerParams& params, const Dataset& features,
               const QueryId& q, std::span<const DocId> docs);
RankTable Rank(const ScorerParams& params, const Dataset& features,
               const QueryId& q, std::span<const Judgment> docs);

// Which part of F a metric is computed over. A pair selected by both query
// and document removal belongs to both subsets.
enum class RemovalFilter { kAll, kQueryRemoval, kDocRemoval };

ForgetSet FilterForgetSet(const ForgetSet& forget, RemovalFilter filter);

// MRR of the best-ranked forgotten document per affected query, ranked among
// the original D_q. Lower is better. Throws if the filtered Q_F is empty.
double PForget(const ScorerParams& params, const ForgetSet& forget,
               const Dataset& dataset,
               RemovalFilter filter = RemovalFilter::kAll);

// 1 - mean over F of (1/rank_teacher(q, d; D_q) - 1/rank_w(q, r_q(d); D_q^*))^2.
double PCorrect(const ScorerParams& params, const ScorerParams& teacher,
                const ForgetSet& forget, const SubstituteMap& subs,
                const Dataset& dataset, const CorrectedDataset& corrected,
                RemovalFilter filter = RemovalFilter::kAll);

// MRR of the best-ranked positive per query over every query of dataset.
double MeanReciprocalRank(const ScorerParams& params, const Dataset& dataset);
double MeanReciprocalRank(const ScorerParams& params, const Dataset& dataset,
                          std::span<const QueryId> queries);

// P_retain is MRR over the retain set (see RetainDataset); P_test over the
// held-out split.
inline double PRetain(const ScorerParams& params, const Dataset& retain) {
  return MeanReciprocalRank(params, retain);
}
inline double PTest(const ScorerParams& params, const Dataset& test) {
  return MeanReciprocalRank(params, test);
}

// Mean per-document squared reciprocal-rank shift of retained positives,
// student over D_q^* versus teacher over D_q. Queries without retained
// positives are skipped.
double PDeltaRetain(const ScorerParams& params, const ScorerParams& teacher,
                    const Dataset& dataset, const CorrectedDataset& corrected,
                    const ForgetSet& forget);

// (mean unlearn epoch / mean train epoch) * unlearn epoch count.
double NormalisedUnlearnTime(std::span<const double> unlearn_epoch_seconds,
                             std::span<const double> train_epoch_seconds,
                             int n_unlearn_epochs);

struct MetricsReport {
  std::optional<double> p_forget;
  std::optional<double> p_forget_query;
  std::optional<double> p_forget_doc;
  std::optional<double> p_correct;
  std::optional<double> p_correct_query;
  std::optional<double> p_correct_doc;
  std::optional<double> p_retain;  // unset when no query keeps a positive
  double p_test = 0.0;
  double p_delta_retain = 0.0;
  // Wall-clock derived; kept apart from the deterministic fields.
  double unlearn_time_normalised = 0.0;

  bool operator==(const MetricsReport&) const = default;
};

struct EvaluationInputs {
  const Dataset& train;
  const Dataset& test;
  const ForgetSet& forget;
  const SubstituteMap& subs;
  const CorrectedDataset& corrected;
  const ScorerParams& teacher;
};

// Every metric except unlearn_time_normalised, which is left at zero.
MetricsReport Evaluate(const ScorerParams& params,
                       const EvaluationInputs& inputs);

// Column order of the CSV form; unlearn_time_normalised is always last.
const std::vector<std::string>& MetricsColumns();
// (column, value) in MetricsColumns order; absent values are nullopt.
std::vector<std::pair<std::string, std::optional<double>>> MetricsFields(
    const MetricsReport& report);

std::string MetricsToJson(const MetricsReport& report);
MetricsReport MetricsFromJson(const std::string& text);
// Header line plus one data row. Absent values are empty cells.
std::string MetricsToCsv(const MetricsReport& report);

}  // namespace unrank

#endif  // UNRANK_METRICS_H_
