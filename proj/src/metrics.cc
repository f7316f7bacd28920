#include "unrank/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "unrank/error.h"
#include "unrank/io.h"
#include "unrank/scoring.h"

namespace unrank {

std::size_t RankTable::RankOf(const DocId& d) const {
  auto it = rank_of.find(d);
  if (it == rank_of.end()) {
    throw ValidationError("document '" + d + "' is not in the ranking");
  }
  return it->second;
}

RankTable RankScores(std::vector<std::pair<DocId, double>> scored) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  RankTable table;
  table.ordered = std::move(scored);
  for (std::size_t i = 0; i < table.ordered.size(); ++i) {
    table.rank_of.emplace(table.ordered[i].first, i + 1);
  }
  return table;
}

RankTable Rank(const ScorerParams& params, const Dataset& features,
               const QueryId& q, std::span<const DocId> docs) {
  if (docs.empty()) throw ValidationError("cannot rank an empty set");
  std::vector<std::pair<DocId, double>> scored;
  scored.reserve(docs.size());
  for (const auto& d : docs) {
    scored.emplace_back(d, ScorePair(params, features, q, d));
  }
  return RankScores(std::move(scored));
}

RankTable Rank(const ScorerParams& params, const Dataset& features,
               const QueryId& q, std::span<const Judgment> docs) {
  std::vector<DocId> ids;
  ids.reserve(docs.size());
  for (const auto& j : docs) ids.push_back(j.doc);
  return Rank(params, features, q, std::span<const DocId>(ids));
}

ForgetSet FilterForgetSet(const ForgetSet& forget, RemovalFilter filter) {
  if (filter == RemovalFilter::kAll) return forget;
  std::vector<ForgetPair> kept;
  for (const auto& p : forget.pairs()) {
    if ((filter == RemovalFilter::kQueryRemoval && p.via_query) ||
        (filter == RemovalFilter::kDocRemoval && p.via_doc)) {
      kept.push_back(p);
    }
  }
  return ForgetSet(std::move(kept));
}

double PForget(const ScorerParams& params, const ForgetSet& forget,
               const Dataset& dataset, RemovalFilter filter) {
  const ForgetSet subset = FilterForgetSet(forget, filter);
  const auto queries = subset.Queries();
  if (queries.empty()) {
    throw ValidationError("P_forget is undefined for an empty forget set");
  }
  double total = 0.0;
  for (const auto& q : queries) {
    const RankTable table = Rank(params, dataset, q, dataset.DocsOf(q));
    std::size_t best = table.ordered.size();
    for (const auto& d : subset.DocsOf(q)) {
      best = std::min(best, table.RankOf(d));
    }
    total += 1.0 / static_cast<double>(best);
  }
  return total / static_cast<double>(queries.size());
}

double PCorrect(const ScorerParams& params, const ScorerParams& teacher,
                const ForgetSet& forget, const SubstituteMap& subs,
                const Dataset& dataset, const CorrectedDataset& corrected,
                RemovalFilter filter) {
  const ForgetSet subset = FilterForgetSet(forget, filter);
  if (subset.empty()) {
    throw ValidationError("P_correct is undefined for an empty forget set");
  }
  double total = 0.0;
  QueryId current;
  RankTable teacher_table, student_table;
  for (const auto& p : subset.pairs()) {
    const auto sub = subs.Get(p.query, p.doc);
    if (!sub) {
      throw ValidationError("missing substitute for (" + p.query + ", " +
                            p.doc + ")");
    }
    if (p.query != current || teacher_table.ordered.empty()) {
      current = p.query;
      teacher_table = Rank(teacher, dataset, p.query, dataset.DocsOf(p.query));
      student_table = Rank(params, corrected.dataset(), p.query,
                           corrected.DocsStarOf(p.query));
    }
    const double diff =
        1.0 / static_cast<double>(teacher_table.RankOf(p.doc)) -
        1.0 / static_cast<double>(student_table.RankOf(*sub));
    total += diff * diff;
  }
  return 1.0 - total / static_cast<double>(subset.size());
}

double MeanReciprocalRank(const ScorerParams& params, const Dataset& dataset,
                          std::span<const QueryId> queries) {
  if (queries.empty()) throw ValidationError("MRR over zero queries");
  double total = 0.0;
  for (const auto& q : queries) {
    const auto& docs = dataset.DocsOf(q);
    const RankTable table = Rank(params, dataset, q, docs);
    std::size_t best = 0;
    for (const auto& j : docs) {
      if (j.label != Label::kPositive) continue;
      const std::size_t r = table.RankOf(j.doc);
      if (best == 0 || r < best) best = r;
    }
    if (best == 0) {
      throw ValidationError("query '" + q + "' has no positive document");
    }
    total += 1.0 / static_cast<double>(best);
  }
  return total / static_cast<double>(queries.size());
}

double MeanReciprocalRank(const ScorerParams& params, const Dataset& dataset) {
  return MeanReciprocalRank(params, dataset, dataset.queries());
}

double PDeltaRetain(const ScorerParams& params, const ScorerParams& teacher,
                    const Dataset& dataset, const CorrectedDataset& corrected,
                    const ForgetSet& forget) {
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& q : dataset.queries()) {
    std::vector<DocId> retained;
    for (const auto& d : dataset.Positives(q)) {
      if (!forget.Contains(q, d)) retained.push_back(d);
    }
    if (retained.empty()) continue;
    const RankTable teacher_table = Rank(teacher, dataset, q, dataset.DocsOf(q));
    const RankTable student_table =
        Rank(params, corrected.dataset(), q, corrected.DocsStarOf(q));
    double sum = 0.0;
    for (const auto& d : retained) {
      const double diff =
          1.0 / static_cast<double>(student_table.RankOf(d)) -
          1.0 / static_cast<double>(teacher_table.RankOf(d));
      sum += diff * diff;
    }
    total += sum / static_cast<double>(retained.size());
    ++counted;
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

double NormalisedUnlearnTime(std::span<const double> unlearn_epoch_seconds,
                             std::span<const double> train_epoch_seconds,
                             int n_unlearn_epochs) {
  if (unlearn_epoch_seconds.empty() || train_epoch_seconds.empty()) {
    throw ValidationError("epoch timings must be non-empty");
  }
  const auto mean = [](std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) /
           static_cast<double>(xs.size());
  };
  const double train_mean = mean(train_epoch_seconds);
  if (!(train_mean > 0.0)) {
    throw ValidationError("mean training epoch duration must be positive");
  }
  return mean(unlearn_epoch_seconds) / train_mean *
         static_cast<double>(n_unlearn_epochs);
}

namespace {

bool HasFilteredPairs(const ForgetSet& forget, RemovalFilter filter) {
  return !FilterForgetSet(forget, filter).empty();
}

}  // namespace

MetricsReport Evaluate(const ScorerParams& params,
                       const EvaluationInputs& in) {
  MetricsReport r;
  constexpr RemovalFilter kFilters[] = {RemovalFilter::kAll,
                                        RemovalFilter::kQueryRemoval,
                                        RemovalFilter::kDocRemoval};
  std::optional<double>* forget_slots[] = {&r.p_forget, &r.p_forget_query,
                                           &r.p_forget_doc};
  std::optional<double>* correct_slots[] = {&r.p_correct, &r.p_correct_query,
                                            &r.p_correct_doc};
  for (int i = 0; i < 3; ++i) {
    if (!HasFilteredPairs(in.forget, kFilters[i])) continue;
    *forget_slots[i] = PForget(params, in.forget, in.train, kFilters[i]);
    *correct_slots[i] = PCorrect(params, in.teacher, in.forget, in.subs,
                                 in.train, in.corrected, kFilters[i]);
  }
  // Undefined when F removes every positive of every query.
  const Dataset retain = RetainDataset(in.train, in.forget);
  if (!retain.queries().empty()) r.p_retain = PRetain(params, retain);
  r.p_test = PTest(params, in.test);
  r.p_delta_retain =
      PDeltaRetain(params, in.teacher, in.train, in.corrected, in.forget);
  return r;
}

const std::vector<std::string>& MetricsColumns() {
  static const std::vector<std::string> kColumns = {
      "p_forget",  "p_forget_query", "p_forget_doc",   "p_correct",
      "p_correct_query", "p_correct_doc", "p_retain", "p_test",
      "p_delta_retain",  "unlearn_time_normalised"};
  return kColumns;
}

std::vector<std::pair<std::string, std::optional<double>>> MetricsFields(
    const MetricsReport& r) {
  const auto& c = MetricsColumns();
  return {{c[0], r.p_forget},        {c[1], r.p_forget_query},
          {c[2], r.p_forget_doc},    {c[3], r.p_correct},
          {c[4], r.p_correct_query}, {c[5], r.p_correct_doc},
          {c[6], r.p_retain},        {c[7], r.p_test},
          {c[8], r.p_delta_retain},  {c[9], r.unlearn_time_normalised}};
}

std::string MetricsToJson(const MetricsReport& report) {
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  nlohmann::ordered_json timing = nlohmann::ordered_json::object();
  for (const auto& [name, value] : MetricsFields(report)) {
    auto& target = name == "unlearn_time_normalised" ? timing : metrics;
    target[name] = value ? nlohmann::ordered_json(*value)
                         : nlohmann::ordered_json(nullptr);
  }
  nlohmann::ordered_json j;
  j["metrics"] = metrics;
  j["timing"] = timing;
  return j.dump(2) + "\n";
}

MetricsReport MetricsFromJson(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& m = j.at("metrics");
    const auto opt = [&](const char* key) -> std::optional<double> {
      if (!m.contains(key) || m.at(key).is_null()) return std::nullopt;
      return m.at(key).get<double>();
    };
    MetricsReport r;
    r.p_forget = opt("p_forget");
    r.p_forget_query = opt("p_forget_query");
    r.p_forget_doc = opt("p_forget_doc");
    r.p_correct = opt("p_correct");
    r.p_correct_query = opt("p_correct_query");
    r.p_correct_doc = opt("p_correct_doc");
    r.p_retain = opt("p_retain");
    r.p_test = m.at("p_test").get<double>();
    r.p_delta_retain = m.at("p_delta_retain").get<double>();
    r.unlearn_time_normalised =
        j.at("timing").at("unlearn_time_normalised").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed metrics report: ") +
                          e.what());
  }
}

std::string MetricsToCsv(const MetricsReport& report) {
  std::ostringstream header, row;
  bool first = true;
  for (const auto& [name, value] : MetricsFields(report)) {
    header << (first ? "" : ",") << name;
    row << (first ? "" : ",");
    if (value) row << FormatDouble(*value);
    first = false;
  }
  return header.str() + "\n" + row.str() + "\n";
}

}  // namespace unrank
