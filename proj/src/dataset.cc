#include "unrank/dataset.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "unrank/error.h"
#include "unrank/rng.h"

namespace unrank {

void FeatureTable::Add(const std::string& id, std::span<const double> values) {
  if (values.size() != dim_) {
    std::ostringstream msg;
    msg << "feature vector for '" << id << "' has length " << values.size()
        << ", expected " << dim_;
    throw ValidationError(msg.str());
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw ValidationError("non-finite feature value for '" + id + "'");
    }
  }
  if (!index_.emplace(id, ids_.size()).second) {
    throw ValidationError("duplicate feature vector for '" + id + "'");
  }
  ids_.push_back(id);
  values_.insert(values_.end(), values.begin(), values.end());
}

std::span<const double> FeatureTable::Get(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw ValidationError("no feature vector for '" + id + "'");
  }
  return std::span<const double>(values_).subspan(it->second * dim_, dim_);
}

Dataset::Dataset(std::map<QueryId, std::vector<Judgment>> docs_of,
                 std::shared_ptr<const FeatureTable> query_features,
                 std::shared_ptr<const FeatureTable> doc_features,
                 bool require_negatives)
    : docs_of_(std::move(docs_of)),
      query_features_(std::move(query_features)),
      doc_features_(std::move(doc_features)) {
  if (!query_features_ || !doc_features_) {
    throw ValidationError("dataset requires query and document features");
  }
  if (query_features_->dim() != doc_features_->dim()) {
    throw ValidationError("query and document feature dimensions differ");
  }
  std::set<DocId> universe;
  for (const auto& [q, docs] : docs_of_) {
    if (!query_features_->Contains(q)) {
      throw ValidationError("no feature vector for query '" + q + "'");
    }
    std::set<DocId> seen;
    std::size_t pos = 0;
    for (const auto& j : docs) {
      if (!seen.insert(j.doc).second) {
        throw ValidationError("duplicate pair (" + q + ", " + j.doc + ")");
      }
      if (!doc_features_->Contains(j.doc)) {
        throw ValidationError("no feature vector for document '" + j.doc +
                              "'");
      }
      if (j.label == Label::kPositive) ++pos;
      universe.insert(j.doc);
    }
    if (pos == 0) {
      throw ValidationError("query '" + q + "' has no positive document");
    }
    if (require_negatives && pos == docs.size()) {
      throw ValidationError("query '" + q + "' has no negative document");
    }
    queries_.push_back(q);
    num_pairs_ += docs.size();
    num_positive_pairs_ += pos;
  }
  universe_.assign(universe.begin(), universe.end());
}

const std::vector<Judgment>& Dataset::DocsOf(const QueryId& q) const {
  auto it = docs_of_.find(q);
  if (it == docs_of_.end()) {
    throw ValidationError("unknown query '" + q + "'");
  }
  return it->second;
}

std::vector<DocId> Dataset::Positives(const QueryId& q) const {
  std::vector<DocId> out;
  for (const auto& j : DocsOf(q)) {
    if (j.label == Label::kPositive) out.push_back(j.doc);
  }
  return out;
}

std::vector<DocId> Dataset::Negatives(const QueryId& q) const {
  std::vector<DocId> out;
  for (const auto& j : DocsOf(q)) {
    if (j.label == Label::kNegative) out.push_back(j.doc);
  }
  return out;
}

std::optional<Label> Dataset::LabelOf(const QueryId& q,
                                      const DocId& d) const {
  auto it = docs_of_.find(q);
  if (it == docs_of_.end()) return std::nullopt;
  for (const auto& j : it->second) {
    if (j.doc == d) return j.label;
  }
  return std::nullopt;
}

bool Dataset::HasDoc(const DocId& d) const {
  return std::binary_search(universe_.begin(), universe_.end(), d);
}

std::vector<Pair> Dataset::Pairs() const {
  std::vector<Pair> out;
  out.reserve(num_pairs_);
  for (const auto& [q, docs] : docs_of_) {
    for (const auto& j : docs) out.push_back({q, j.doc, j.label});
  }
  return out;
}

ForgetSet::ForgetSet(std::vector<ForgetPair> pairs) : pairs_(std::move(pairs)) {
  std::sort(pairs_.begin(), pairs_.end(),
            [](const ForgetPair& a, const ForgetPair& b) {
              return std::tie(a.query, a.doc) < std::tie(b.query, b.doc);
            });
  for (std::size_t i = 1; i < pairs_.size(); ++i) {
    if (pairs_[i].query == pairs_[i - 1].query &&
        pairs_[i].doc == pairs_[i - 1].doc) {
      throw ValidationError("duplicate forget pair (" + pairs_[i].query +
                            ", " + pairs_[i].doc + ")");
    }
  }
  for (const auto& p : pairs_) per_query_[p.query].insert(p.doc);
}

bool ForgetSet::Contains(const QueryId& q, const DocId& d) const {
  auto it = per_query_.find(q);
  return it != per_query_.end() && it->second.contains(d);
}

const std::set<DocId>& ForgetSet::DocsOf(const QueryId& q) const {
  static const std::set<DocId> kEmpty;
  auto it = per_query_.find(q);
  return it == per_query_.end() ? kEmpty : it->second;
}

std::vector<QueryId> ForgetSet::Queries() const {
  std::vector<QueryId> out;
  for (const auto& [q, docs] : per_query_) out.push_back(q);
  return out;
}

ForgetSet BuildForgetSet(const Dataset& dataset, const ForgetSpec& spec,
                         const ForgetOptions& options) {
  for (const auto& q : spec.forget_queries) {
    if (!dataset.HasQuery(q)) {
      throw ValidationError("forget spec names unknown query '" + q + "'");
    }
  }
  for (const auto& d : spec.forget_docs) {
    if (!dataset.HasDoc(d)) {
      throw ValidationError("forget spec names unknown document '" + d + "'");
    }
  }
  std::vector<ForgetPair> pairs;
  for (const auto& [q, docs] : dataset.docs_of()) {
    const bool query_removed = spec.forget_queries.contains(q);
    for (const auto& j : docs) {
      const bool positive = j.label == Label::kPositive;
      const bool via_query = query_removed && positive;
      const bool via_doc =
          spec.forget_docs.contains(j.doc) &&
          (positive || options.include_negative_doc_removal);
      if (via_query || via_doc) {
        pairs.push_back({q, j.doc, j.label, via_query, via_doc});
      }
    }
  }
  return ForgetSet(std::move(pairs));
}

Partition PartitionDataset(const Dataset& dataset, const ForgetSet& forget) {
  Partition out{forget, {}};
  for (auto& p : dataset.Pairs()) {
    if (!forget.Contains(p.query, p.doc)) out.retain.push_back(std::move(p));
  }
  return out;
}

Dataset RetainDataset(const Dataset& dataset, const ForgetSet& forget) {
  std::map<QueryId, std::vector<Judgment>> docs_of;
  for (const auto& [q, docs] : dataset.docs_of()) {
    std::vector<Judgment> kept;
    bool pos = false, neg = false;
    for (const auto& j : docs) {
      if (forget.Contains(q, j.doc)) continue;
      kept.push_back(j);
      (j.label == Label::kPositive ? pos : neg) = true;
    }
    if (pos && neg) docs_of.emplace(q, std::move(kept));
  }
  return Dataset(std::move(docs_of), dataset.query_features(),
                 dataset.doc_features());
}

std::optional<DocId> SubstituteMap::Get(const QueryId& q,
                                        const DocId& d) const {
  auto it = subs.find({q, d});
  if (it == subs.end()) return std::nullopt;
  return it->second;
}

namespace {

std::string UncoveredPairs(const ForgetSet& forget, const SubstituteMap& subs) {
  std::ostringstream msg;
  bool first = true;
  for (const auto& p : forget.pairs()) {
    if (!subs.subs.contains({p.query, p.doc})) {
      msg << (first ? "" : ", ") << "(" << p.query << ", " << p.doc << ")";
      first = false;
    }
  }
  return msg.str();
}

}  // namespace

void ValidateSubstitutes(const Dataset& dataset, const ForgetSet& forget,
                         const SubstituteMap& subs) {
  const std::string uncovered = UncoveredPairs(forget, subs);
  if (!uncovered.empty()) {
    throw ValidationError("missing substitutes for forget pairs: " +
                          uncovered);
  }
  for (const auto& [key, sub] : subs.subs) {
    const auto& [q, d] = key;
    if (!forget.Contains(q, d)) {
      throw ValidationError("substitute given for (" + q + ", " + d +
                            ") which is not a forget pair");
    }
    if (!dataset.HasDoc(sub)) {
      throw ValidationError("substitute '" + sub + "' is not in the corpus");
    }
    if (forget.DocsOf(q).contains(sub)) {
      throw ValidationError("substitute '" + sub + "' for query '" + q +
                            "' is itself being forgotten");
    }
    if (dataset.LabelOf(q, sub) == Label::kPositive) {
      throw ValidationError("substitute '" + sub + "' is already positive for '" +
                            q + "'");
    }
  }
}

SubstituteMap AssignRandomSubstitutes(const Dataset& dataset,
                                      const ForgetSet& forget,
                                      std::uint64_t seed) {
  Rng rng(seed);
  SubstituteMap out;
  for (const auto& q : forget.Queries()) {
    const auto& forgotten = forget.DocsOf(q);
    std::vector<DocId> candidates;
    for (const auto& d : dataset.universe()) {
      if (forgotten.contains(d)) continue;
      if (dataset.LabelOf(q, d) == Label::kPositive) continue;
      candidates.push_back(d);
    }
    if (candidates.empty()) {
      throw ValidationError("no admissible substitute for query '" + q + "'");
    }
    for (const auto& d : forgotten) {
      out.subs[{q, d}] = candidates[rng.Index(candidates.size())];
    }
  }
  return out;
}

namespace {

// Fills S* and F* and returns S* as a corpus over D_q^*.
Dataset BuildStar(const Dataset& base, const ForgetSet& forget,
                  const SubstituteMap& subs, std::vector<Pair>& star_pairs,
                  std::vector<Pair>& substitute_pairs) {
  const std::string uncovered = UncoveredPairs(forget, subs);
  if (!uncovered.empty()) {
    throw ValidationError("missing substitutes for forget pairs: " +
                          uncovered);
  }
  std::map<QueryId, std::vector<Judgment>> docs_star_of;
  for (const auto& [q, docs] : base.docs_of()) {
    const auto& forgotten = forget.DocsOf(q);
    // Final label for every document of D_q^*; positive wins on a merge.
    std::map<DocId, Label> merged;
    std::set<DocId> substitutes;
    for (const auto& j : docs) {
      if (forgotten.contains(j.doc)) {
        const DocId sub = *subs.Get(q, j.doc);
        substitutes.insert(sub);
        auto [it, inserted] = merged.emplace(sub, j.label);
        if (!inserted && j.label == Label::kPositive) it->second = j.label;
        star_pairs.push_back({q, sub, j.label});
        substitute_pairs.push_back({q, sub, j.label});
      } else {
        auto [it, inserted] = merged.emplace(j.doc, j.label);
        if (!inserted && j.label == Label::kPositive) it->second = j.label;
        star_pairs.push_back({q, j.doc, j.label});
      }
    }
    std::vector<Judgment> star_docs;
    std::set<DocId> emitted;
    for (const auto& j : docs) {
      DocId d = j.doc;
      if (forgotten.contains(d)) {
        d = *subs.Get(q, d);
      } else if (substitutes.contains(d)) {
        // Emitted at the position of the forgotten document it replaces.
        continue;
      }
      if (emitted.insert(d).second) star_docs.push_back({d, merged.at(d)});
    }
    docs_star_of.emplace(q, std::move(star_docs));
  }
  return Dataset(std::move(docs_star_of), base.query_features(),
                 base.doc_features(), /*require_negatives=*/false);
}

}  // namespace

CorrectedDataset::CorrectedDataset(const Dataset& base,
                                   const ForgetSet& forget,
                                   const SubstituteMap& subs)
    : star_(BuildStar(base, forget, subs, star_pairs_, substitute_pairs_)) {}

CorrectedDataset ApplySubstitutes(const Dataset& dataset,
                                  const ForgetSet& forget,
                                  const SubstituteMap& subs) {
  return CorrectedDataset(dataset, forget, subs);
}

}  // namespace unrank
