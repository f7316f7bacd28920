#include "unrank/curd.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "unrank/error.h"
#include "unrank/rng.h"
#include "unrank/scoring.h"

namespace unrank {

namespace {

constexpr std::uint64_t kShuffleSalt = 0xD1B54A32D192ED03ULL;

struct RetainTarget {
  const QueryId* query;
  DocId doc;
  double teacher_score;
  const std::vector<DocId>* negatives;
  std::vector<double> teacher_negs;
};

// Either a forget target or a retain target.
struct WorkItem {
  bool forget;
  std::size_t index;
};

}  // namespace

void UnlearnConfig::Validate() const {
  if (k < 1) throw ValidationError("k must be at least 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ValidationError("gamma must lie in [0, 1]");
  }
  if (!(lambda_fc >= 0.0) || !(lambda_r >= 0.0)) {
    throw ValidationError("loss weights must be non-negative");
  }
  if (epochs < 0) throw ValidationError("epochs must be non-negative");
  if (!(lr > 0.0)) throw ValidationError("unlearning lr must be positive");
}

NegativeSample SampleNegatives(const Dataset& dataset, int k,
                               std::uint64_t seed) {
  if (k < 1) throw ValidationError("k must be at least 1");
  Rng rng(seed);
  NegativeSample out;
  const auto kk = static_cast<std::size_t>(k);
  for (const auto& q : dataset.queries()) {
    const auto negs = dataset.Negatives(q);
    if (negs.empty()) {
      throw ValidationError("query '" + q + "' has no negative document");
    }
    const auto picks = kk <= negs.size()
                           ? rng.SampleWithoutReplacement(negs.size(), kk)
                           : rng.SampleWithReplacement(negs.size(), kk);
    auto& list = out.per_query[q];
    for (std::size_t i : picks) list.push_back(negs[i]);
  }
  return out;
}

double Quantile(std::span<const double> scores, double gamma) {
  if (scores.empty()) throw ValidationError("quantile of an empty list");
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ValidationError("quantile level must lie in [0, 1]");
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = gamma * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double RetainLossFromScores(double teacher_pos, double student_pos,
                            std::span<const double> teacher_negs,
                            std::span<const double> student_negs) {
  double loss = Hinge(teacher_pos, student_pos);
  if (teacher_negs.empty()) return loss;
  double neg = 0.0;
  for (std::size_t i = 0; i < teacher_negs.size(); ++i) {
    neg += Hinge(student_negs[i], teacher_negs[i]);
  }
  return loss + neg / static_cast<double>(teacher_negs.size());
}

double FcLoss(const ScorerParams& student, const TeacherSnapshot& teacher,
              const Dataset& dataset, const QueryId& q, const DocId& d,
              const DocId& substitute, double qtl) {
  return FcLossFromScores(ScorePair(student, dataset, q, d), qtl,
                          ScorePair(teacher.params(), dataset, q, d),
                          ScorePair(student, dataset, q, substitute));
}

double RetainLoss(const ScorerParams& student, const TeacherSnapshot& teacher,
                  const Dataset& dataset, const QueryId& q, const DocId& d_pos,
                  std::span<const DocId> negatives) {
  std::vector<double> t(negatives.size()), s(negatives.size());
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    t[i] = ScorePair(teacher.params(), dataset, q, negatives[i]);
    s[i] = ScorePair(student, dataset, q, negatives[i]);
  }
  return RetainLossFromScores(ScorePair(teacher.params(), dataset, q, d_pos),
                              ScorePair(student, dataset, q, d_pos), t, s);
}

std::vector<ForgetTarget> ComputeForgetTargets(const TeacherSnapshot& teacher,
                                               const Dataset& dataset,
                                               const ForgetSet& forget,
                                               const SubstituteMap& subs,
                                               const NegativeSample& negatives,
                                               double gamma) {
  std::map<QueryId, double> qtl_of;
  std::vector<ForgetTarget> out;
  for (const auto& p : forget.pairs()) {
    auto it = qtl_of.find(p.query);
    if (it == qtl_of.end()) {
      const auto& sample = negatives.per_query.at(p.query);
      std::vector<double> scores;
      for (const auto& d : sample) {
        scores.push_back(ScorePair(teacher.params(), dataset, p.query, d));
      }
      it = qtl_of.emplace(p.query, Quantile(scores, gamma)).first;
    }
    const auto sub = subs.Get(p.query, p.doc);
    if (!sub) {
      throw ValidationError("missing substitute for (" + p.query + ", " +
                            p.doc + ")");
    }
    out.push_back({p.query, p.doc, *sub, it->second,
                   ScorePair(teacher.params(), dataset, p.query, p.doc)});
  }
  return out;
}

UnlearnResult CurdUnlearn(const TeacherSnapshot& teacher,
                          const Dataset& dataset, const ForgetSet& forget,
                          const SubstituteMap& subs, const UnlearnConfig& cfg,
                          const EpochObserver& observer) {
  cfg.Validate();
  ValidateSubstitutes(dataset, forget, subs);
  const ScorerParams& m = teacher.params();

  // Data preparation: A_q^-, quantile targets and the work list.
  const NegativeSample negatives = SampleNegatives(dataset, cfg.k, cfg.seed);
  const std::vector<ForgetTarget> forget_targets =
      ComputeForgetTargets(teacher, dataset, forget, subs, negatives,
                           cfg.gamma);
  std::vector<RetainTarget> retain_targets;
  std::vector<WorkItem> work;
  std::map<std::pair<QueryId, DocId>, std::size_t> forget_index;
  for (std::size_t i = 0; i < forget_targets.size(); ++i) {
    forget_index.emplace(
        std::make_pair(forget_targets[i].query, forget_targets[i].doc), i);
  }
  for (const auto& q : dataset.queries()) {
    const auto& sample = negatives.per_query.at(q);
    for (const auto& j : dataset.DocsOf(q)) {
      if (forget.Contains(q, j.doc)) {
        work.push_back({true, forget_index.at({q, j.doc})});
      } else if (j.label == Label::kPositive) {
        RetainTarget t{&q, j.doc, ScorePair(m, dataset, q, j.doc), &sample, {}};
        for (const auto& d : sample) {
          t.teacher_negs.push_back(ScorePair(m, dataset, q, d));
        }
        work.push_back({false, retain_targets.size()});
        retain_targets.push_back(std::move(t));
      }
    }
  }

  UnlearnResult result{m, {}};
  ScorerParams& w = result.params;
  Rng rng(cfg.seed ^ kShuffleSalt);
  std::vector<double> grad(w.size());
  const double inv_k = 1.0 / static_cast<double>(cfg.k);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    rng.Shuffle(work);
    UnlearnEpoch entry;
    entry.epoch = epoch;
    for (std::size_t i = 0; i < work.size(); ++i) {
      std::fill(grad.begin(), grad.end(), 0.0);
      bool active = false;
      double loss = 0.0;
      if (work[i].forget) {
        const ForgetTarget& t = forget_targets[work[i].index];
        const auto qf = dataset.QueryFeature(t.query);
        const auto df = dataset.DocFeature(t.doc);
        const auto sf = dataset.DocFeature(t.substitute);
        const double s_forget = Score(w, qf, df);
        const double s_sub = Score(w, qf, sf);
        if (s_forget > t.qtl) {
          loss += cfg.lambda_fc * (s_forget - t.qtl);
          AccumulateScoreGradient(w, qf, df, cfg.lambda_fc, grad);
          active = true;
        }
        if (t.teacher_score > s_sub) {
          loss += cfg.lambda_fc * (t.teacher_score - s_sub);
          AccumulateScoreGradient(w, qf, sf, -cfg.lambda_fc, grad);
          active = true;
        }
        entry.fc_loss += loss;
      } else {
        const RetainTarget& t = retain_targets[work[i].index];
        const auto qf = dataset.QueryFeature(*t.query);
        const auto pf = dataset.DocFeature(t.doc);
        const double s_pos = Score(w, qf, pf);
        if (t.teacher_score > s_pos) {
          loss += cfg.lambda_r * (t.teacher_score - s_pos);
          AccumulateScoreGradient(w, qf, pf, -cfg.lambda_r, grad);
          active = true;
        }
        const auto& negs = *t.negatives;
        for (std::size_t n = 0; n < negs.size(); ++n) {
          const auto nf = dataset.DocFeature(negs[n]);
          const double s_neg = Score(w, qf, nf);
          if (s_neg > t.teacher_negs[n]) {
            loss += cfg.lambda_r * inv_k * (s_neg - t.teacher_negs[n]);
            AccumulateScoreGradient(w, qf, nf, cfg.lambda_r * inv_k, grad);
            active = true;
          }
        }
        entry.retain_loss += loss;
      }
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite unlearning loss at epoch " << epoch << ", item "
            << i;
        throw NumericError(msg.str());
      }
      if (active) ApplySgdStep(w, grad, cfg.lr);
    }
    entry.wall_seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    result.log.push_back(entry);
    if (observer) observer(epoch, w);
    const double mean_loss =
        work.empty() ? 0.0
                     : (entry.fc_loss + entry.retain_loss) /
                           static_cast<double>(work.size());
    if (cfg.early_stop_loss > 0.0 && mean_loss < cfg.early_stop_loss) break;
  }
  return result;
}

}  // namespace unrank
