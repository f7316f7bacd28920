#ifndef UNRANK_TESTS_TEST_UTIL_H_
#define UNRANK_TESTS_TEST_UTIL_H_

// Fixtures and brute-force oracles shared by the test binaries. The oracles
// deliberately avoid the library's ranking code: a rank is counted directly
// as one plus the number of documents that beat the target.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "unrank/dataset.h"
#include "unrank/rng.h"
#include "unrank/scorer.h"

namespace unrank::testing {

using JudgmentList = std::vector<std::pair<std::string, int>>;

// Dataset with uniform(-1, 1) features for every id that appears.
inline Dataset MakeDataset(const std::map<std::string, JudgmentList>& spec,
                           std::size_t dim = 4, std::uint64_t seed = 3) {
  Rng rng(seed);
  auto qf = std::make_shared<FeatureTable>(dim);
  auto df = std::make_shared<FeatureTable>(dim);
  std::map<QueryId, std::vector<Judgment>> docs_of;
  std::vector<double> v(dim);
  for (const auto& [q, list] : spec) {
    for (auto& x : v) x = rng.Uniform(-1.0, 1.0);
    qf->Add(q, v);
    for (const auto& [d, label] : list) {
      if (!df->Contains(d)) {
        for (auto& x : v) x = rng.Uniform(-1.0, 1.0);
        df->Add(d, v);
      }
      docs_of[q].push_back(
          {d, label ? Label::kPositive : Label::kNegative});
    }
  }
  return Dataset(std::move(docs_of), qf, df);
}

// Two-dimensional "score world": every query has features (1, 1) and each
// document (a, b). TeacherScorer scores a document as a, StudentScorer as b,
// so rankings can be written down directly.
struct ScoredDoc {
  std::string id;
  int label;
  double teacher;
  double student;
};

inline Dataset MakeScoredDataset(
    const std::map<std::string, std::vector<ScoredDoc>>& spec) {
  auto qf = std::make_shared<FeatureTable>(2);
  auto df = std::make_shared<FeatureTable>(2);
  std::map<QueryId, std::vector<Judgment>> docs_of;
  for (const auto& [q, docs] : spec) {
    const double ones[] = {1.0, 1.0};
    qf->Add(q, ones);
    for (const auto& d : docs) {
      if (!df->Contains(d.id)) {
        const double v[] = {d.teacher, d.student};
        df->Add(d.id, v);
      }
      docs_of[q].push_back(
          {d.id, d.label ? Label::kPositive : Label::kNegative});
    }
  }
  return Dataset(std::move(docs_of), qf, df);
}

inline ScorerParams TeacherScorer() {
  return ScorerParams({ScorerKind::kBiEncoder, 2, 1}, {1, 0, 1, 0});
}

inline ScorerParams StudentScorer() {
  return ScorerParams({ScorerKind::kBiEncoder, 2, 1}, {1, 0, 0, 1});
}

// ---- Oracles ---------------------------------------------------------------

inline double OracleScore(const ScorerParams& w, const Dataset& ds,
                          const QueryId& q, const DocId& d) {
  return Score(w, ds.QueryFeature(q), ds.DocFeature(d));
}

// 1 + #{e in docs : s(e) > s(target) or (s(e) == s(target) and e < target)}.
inline int OracleRank(const ScorerParams& w, const Dataset& ds,
                      const QueryId& q, const std::set<DocId>& docs,
                      const DocId& target) {
  const double s = OracleScore(w, ds, q, target);
  int rank = 1;
  for (const auto& e : docs) {
    if (e == target) continue;
    const double t = OracleScore(w, ds, q, e);
    if (t > s || (t == s && e < target)) ++rank;
  }
  return rank;
}

inline std::set<DocId> OracleDocs(const Dataset& ds, const QueryId& q) {
  std::set<DocId> out;
  for (const auto& j : ds.DocsOf(q)) out.insert(j.doc);
  return out;
}

inline std::set<DocId> OracleForgottenDocs(const ForgetSet& f,
                                           const QueryId& q) {
  std::set<DocId> out;
  for (const auto& p : f.pairs()) {
    if (p.query == q) out.insert(p.doc);
  }
  return out;
}

inline double OraclePForget(const ScorerParams& w, const Dataset& ds,
                            const ForgetSet& f) {
  std::set<QueryId> qs;
  for (const auto& p : f.pairs()) qs.insert(p.query);
  double total = 0.0;
  for (const auto& q : qs) {
    const auto docs = OracleDocs(ds, q);
    int best = 1 << 30;
    for (const auto& d : OracleForgottenDocs(f, q)) {
      best = std::min(best, OracleRank(w, ds, q, docs, d));
    }
    total += 1.0 / best;
  }
  return total / static_cast<double>(qs.size());
}

inline std::set<DocId> OracleStarDocs(const Dataset& ds, const ForgetSet& f,
                                      const SubstituteMap& subs,
                                      const QueryId& q) {
  std::set<DocId> out = OracleDocs(ds, q);
  for (const auto& d : OracleForgottenDocs(f, q)) out.erase(d);
  for (const auto& d : OracleForgottenDocs(f, q)) {
    out.insert(subs.subs.at({q, d}));
  }
  return out;
}

inline double OraclePCorrect(const ScorerParams& w, const ScorerParams& m,
                             const Dataset& ds, const ForgetSet& f,
                             const SubstituteMap& subs) {
  double sq = 0.0;
  for (const auto& p : f.pairs()) {
    const double t = 1.0 / OracleRank(m, ds, p.query, OracleDocs(ds, p.query),
                                      p.doc);
    const auto star = OracleStarDocs(ds, f, subs, p.query);
    const double s = 1.0 / OracleRank(w, ds, p.query, star,
                                      subs.subs.at({p.query, p.doc}));
    sq += (t - s) * (t - s);
  }
  return 1.0 - sq / static_cast<double>(f.size());
}

// MRR of the best positive per query over the documents that survive
// removal; queries left without a positive or a negative are skipped.
inline double OraclePRetain(const ScorerParams& w, const Dataset& ds,
                            const ForgetSet& f) {
  double total = 0.0;
  int n = 0;
  for (const auto& q : ds.queries()) {
    std::set<DocId> kept;
    bool pos = false, neg = false;
    for (const auto& j : ds.DocsOf(q)) {
      if (f.Contains(q, j.doc)) continue;
      kept.insert(j.doc);
      (j.label == Label::kPositive ? pos : neg) = true;
    }
    if (!pos || !neg) continue;
    int best = 1 << 30;
    for (const auto& j : ds.DocsOf(q)) {
      if (j.label != Label::kPositive || !kept.contains(j.doc)) continue;
      best = std::min(best, OracleRank(w, ds, q, kept, j.doc));
    }
    total += 1.0 / best;
    ++n;
  }
  return total / n;
}

inline double OracleMrr(const ScorerParams& w, const Dataset& ds) {
  return OraclePRetain(w, ds, ForgetSet{});
}

inline double OraclePDeltaRetain(const ScorerParams& w, const ScorerParams& m,
                                 const Dataset& ds, const ForgetSet& f,
                                 const SubstituteMap& subs) {
  double total = 0.0;
  int n = 0;
  for (const auto& q : ds.queries()) {
    std::vector<DocId> retained;
    for (const auto& j : ds.DocsOf(q)) {
      if (j.label == Label::kPositive && !f.Contains(q, j.doc)) {
        retained.push_back(j.doc);
      }
    }
    if (retained.empty()) continue;
    const auto docs = OracleDocs(ds, q);
    const auto star = OracleStarDocs(ds, f, subs, q);
    double sum = 0.0;
    for (const auto& d : retained) {
      const double a = 1.0 / OracleRank(w, ds, q, star, d);
      const double b = 1.0 / OracleRank(m, ds, q, docs, d);
      sum += (a - b) * (a - b);
    }
    total += sum / static_cast<double>(retained.size());
    ++n;
  }
  return total / n;
}

// ---- Gradient check --------------------------------------------------------

// Largest relative error between ComputeLossGradient and central differences
// over `draws` random parameter/feature draws. The loss mixes a linear and a
// quadratic term over two pairs so that both scale and curvature are tested.
inline double MaxGradientError(ScorerKind kind, int draws, std::uint64_t seed,
                               double step = 1e-5) {
  Rng rng(seed);
  double worst = 0.0;
  for (int draw = 0; draw < draws; ++draw) {
    const ScorerShape shape{kind, 3 + rng.Index(4), 2 + rng.Index(5)};
    ScorerParams w = ScorerParams::RandomInit(shape, rng.Index(1u << 30));
    for (auto& x : w.mutable_weights()) x = rng.Uniform(-1.0, 1.0);
    std::vector<double> q(shape.feature_dim), d1(q.size()), d2(q.size());
    for (auto* v : {&q, &d1, &d2}) {
      for (auto& x : *v) x = rng.Uniform(-1.0, 1.0);
    }
    const PairFeatures pairs[] = {{q, d1}, {q, d2}};
    const PairLoss loss = [](std::span<const double> s,
                             std::span<double> ds) {
      ds[0] = 1.0 + s[1];
      ds[1] = s[0] - 2.0 * s[1];
      return s[0] + s[0] * s[1] - s[1] * s[1];
    };
    const LossGradient analytic = ComputeLossGradient(w, pairs, loss);
    std::vector<double> dummy(2);
    const auto eval = [&](const ScorerParams& p) {
      const double s[] = {Score(p, q, d1), Score(p, q, d2)};
      return loss(s, dummy);
    };
    for (std::size_t i = 0; i < w.size(); ++i) {
      ScorerParams plus = w, minus = w;
      plus.mutable_weights()[i] += step;
      minus.mutable_weights()[i] -= step;
      const double numeric = (eval(plus) - eval(minus)) / (2.0 * step);
      const double a = analytic.grad[i];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace unrank::testing

#endif  // UNRANK_TESTS_TEST_UTIL_H_
