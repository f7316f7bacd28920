#include "unrank/datagen.h"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "unrank/error.h"
#include "unrank/rng.h"

namespace unrank {

namespace {

constexpr std::uint64_t kSubstituteSalt = 0x94D049BB133111EBULL;

std::string MakeId(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%05d", prefix, n);
  return buf;
}

std::vector<double> NoisyCopy(const std::vector<double>& centroid,
                              double sigma, Rng& rng) {
  std::vector<double> v(centroid);
  for (auto& x : v) x += sigma * rng.Normal();
  return v;
}

// A selectable removal request and the positive pairs it would forget.
struct Unit {
  std::string id;
  std::vector<std::pair<QueryId, DocId>> pairs;
};

}  // namespace

void GenConfig::Validate() const {
  if (n_queries < 1) throw ValidationError("n_queries must be at least 1");
  if (pos_per_query < 1) {
    throw ValidationError("pos_per_query must be at least 1");
  }
  if (neg_ratio < 1) throw ValidationError("neg_ratio must be at least 1");
  if (docs_per_query != pos_per_query * (1 + neg_ratio)) {
    throw ValidationError(
        "docs_per_query must equal pos_per_query * (1 + neg_ratio)");
  }
  if (d_feat < 1) throw ValidationError("d_feat must be at least 1");
  if (n_topics < 2) {
    throw ValidationError("n_topics must be at least 2 so negatives can come "
                          "from a foreign topic");
  }
  if (!(noise_sigma >= 0.0)) {
    throw ValidationError("noise_sigma must be non-negative");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test_fraction must lie in (0, 1)");
  }
}

int GenConfig::NumTestQueries() const {
  const double n = n_queries * test_fraction / (1.0 - test_fraction);
  return std::max(1, static_cast<int>(std::lround(n)));
}

GeneratedCorpus Generate(const GenConfig& cfg) {
  cfg.Validate();
  Rng rng(cfg.seed);
  const auto dim = static_cast<std::size_t>(cfg.d_feat);

  std::vector<std::vector<double>> centroids(cfg.n_topics);
  for (auto& c : centroids) {
    double norm = 0.0;
    c.resize(dim);
    for (auto& x : c) {
      x = rng.Normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : c) x /= norm;
  }

  auto query_features = std::make_shared<FeatureTable>(dim);
  auto doc_features = std::make_shared<FeatureTable>(dim);
  int next_doc = 0;
  const auto make_split = [&](const char* prefix, int count) {
    std::map<QueryId, std::vector<Judgment>> docs_of;
    for (int i = 0; i < count; ++i) {
      const QueryId q = MakeId(prefix, i);
      const std::size_t topic = rng.Index(centroids.size());
      query_features->Add(q, NoisyCopy(centroids[topic], cfg.noise_sigma, rng));
      auto& docs = docs_of[q];
      for (int p = 0; p < cfg.pos_per_query; ++p) {
        const DocId d = MakeId("d", next_doc++);
        doc_features->Add(d, NoisyCopy(centroids[topic], cfg.noise_sigma, rng));
        docs.push_back({d, Label::kPositive});
      }
      const int negatives = cfg.docs_per_query - cfg.pos_per_query;
      for (int n = 0; n < negatives; ++n) {
        std::size_t other = rng.Index(centroids.size() - 1);
        if (other >= topic) ++other;
        const DocId d = MakeId("d", next_doc++);
        doc_features->Add(d, NoisyCopy(centroids[other], cfg.noise_sigma, rng));
        docs.push_back({d, Label::kNegative});
      }
    }
    return docs_of;
  };
  auto train = make_split("q", cfg.n_queries);
  auto test = make_split("t", cfg.NumTestQueries());
  return {Dataset(std::move(train), query_features, doc_features),
          Dataset(std::move(test), query_features, doc_features)};
}

void ForgetProtocol::Validate() const {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ValidationError("forget fraction must lie in [0, 1]");
  }
  if (!(balance >= 0.0 && balance <= 1.0)) {
    throw ValidationError("balance must lie in [0, 1]");
  }
}

std::size_t ForgetPairCount(const Dataset& dataset, double fraction) {
  const double raw =
      fraction * static_cast<double>(dataset.num_positive_pairs());
  return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

ProtocolResult BuildProtocol(const Dataset& dataset,
                             const ForgetProtocol& proto) {
  proto.Validate();
  const std::size_t target = ForgetPairCount(dataset, proto.fraction);
  const auto target_query =
      static_cast<std::size_t>(std::llround(proto.balance * target));
  const std::size_t target_doc = target - target_query;

  std::vector<Unit> query_units, doc_units;
  std::map<DocId, std::size_t> doc_unit_of;
  for (const auto& q : dataset.queries()) {
    Unit u{q, {}};
    for (const auto& d : dataset.Positives(q)) {
      u.pairs.emplace_back(q, d);
      auto [it, inserted] = doc_unit_of.emplace(d, doc_units.size());
      if (inserted) doc_units.push_back({d, {}});
      doc_units[it->second].pairs.emplace_back(q, d);
    }
    query_units.push_back(std::move(u));
  }

  Rng rng(proto.seed);
  ProtocolResult out;
  std::set<std::pair<QueryId, DocId>> taken;
  std::vector<bool> query_used(query_units.size()), doc_used(doc_units.size());
  std::size_t count_query = 0, count_doc = 0;

  const auto pick = [&](std::vector<Unit>& units, std::vector<bool>& used,
                        std::size_t room) -> const Unit* {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (used[i] || units[i].pairs.size() > room) continue;
      bool fresh = true;
      for (const auto& p : units[i].pairs) fresh = fresh && !taken.contains(p);
      if (fresh) candidates.push_back(i);
    }
    if (candidates.empty()) return nullptr;
    const std::size_t i = candidates[rng.Index(candidates.size())];
    used[i] = true;
    for (const auto& p : units[i].pairs) taken.insert(p);
    return &units[i];
  };

  while (count_query < target_query || count_doc < target_doc) {
    // Advance whichever removal type lags its share.
    const bool query_turn =
        count_query < target_query &&
        (count_doc >= target_doc ||
         count_query * std::max<std::size_t>(target_doc, 1) <=
             count_doc * std::max<std::size_t>(target_query, 1));
    const Unit* chosen =
        query_turn
            ? pick(query_units, query_used, target_query - count_query)
            : pick(doc_units, doc_used, target_doc - count_doc);
    if (chosen == nullptr) {
      std::ostringstream msg;
      msg << "forget fraction " << proto.fraction
          << " cannot be met with balance " << proto.balance
          << "; achievable maximum is about "
          << static_cast<double>(count_query + count_doc) /
                 static_cast<double>(dataset.num_positive_pairs());
      throw ValidationError(msg.str());
    }
    if (query_turn) {
      out.spec.forget_queries.insert(chosen->id);
      count_query += chosen->pairs.size();
    } else {
      out.spec.forget_docs.insert(chosen->id);
      count_doc += chosen->pairs.size();
    }
  }

  const ForgetSet forget = BuildForgetSet(dataset, out.spec);
  out.subs = AssignRandomSubstitutes(dataset, forget,
                                     proto.seed ^ kSubstituteSalt);
  return out;
}

}  // namespace unrank
