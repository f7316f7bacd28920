#ifndef UNRANK_DATASET_H_
#define UNRANK_DATASET_H_

// Dataset algebra for corrective unranking: labelled query-document corpora,
// forget/retain partitions, substitute maps and the corrected dataset.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace unrank {

using QueryId = std::string;
using DocId = std::string;

enum class Label : std::uint8_t { kNegative = 0, kPositive = 1 };

struct Judgment {
  DocId doc;
  Label label;

  bool operator==(const Judgment&) const = default;
};

struct Pair {
  QueryId query;
  DocId doc;
  Label label;

  auto operator<=>(const Pair&) const = default;
};

// Dense per-entity feature vectors of a fixed dimension.
class FeatureTable {
 public:
  explicit FeatureTable(std::size_t dim) : dim_(dim) {}

  // Rejects duplicate ids, wrong lengths and non-finite entries.
  void Add(const std::string& id, std::span<const double> values);

  bool Contains(const std::string& id) const { return index_.contains(id); }
  // Throws ValidationError for an unknown id.
  std::span<const double> Get(const std::string& id) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  // Insertion order.
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> values_;
};

// The labelled pairwise corpus S. Immutable once constructed.
//
// Invariants checked on construction: every (q, d) pair is unique, every
// query has at least one positive and one negative document, and every
// referenced entity has a feature vector of the shared dimension. A corrected
// corpus may promote a query's only negative to a substitute, so it opts out
// of the negative requirement.
class Dataset {
 public:
  Dataset(std::map<QueryId, std::vector<Judgment>> docs_of,
          std::shared_ptr<const FeatureTable> query_features,
          std::shared_ptr<const FeatureTable> doc_features,
          bool require_negatives = true);

  // Sorted ascending.
  const std::vector<QueryId>& queries() const { return queries_; }
  bool HasQuery(const QueryId& q) const { return docs_of_.contains(q); }
  // D_q in ingestion order.
  const std::vector<Judgment>& DocsOf(const QueryId& q) const;
  std::vector<DocId> Positives(const QueryId& q) const;
  std::vector<DocId> Negatives(const QueryId& q) const;
  std::optional<Label> LabelOf(const QueryId& q, const DocId& d) const;

  // Every document referenced by some query, sorted ascending.
  const std::vector<DocId>& universe() const { return universe_; }
  bool HasDoc(const DocId& d) const;

  // All pairs, grouped by query in sorted query order.
  std::vector<Pair> Pairs() const;
  std::size_t num_pairs() const { return num_pairs_; }
  std::size_t num_positive_pairs() const { return num_positive_pairs_; }

  std::size_t feature_dim() const { return query_features_->dim(); }
  std::span<const double> QueryFeature(const QueryId& q) const {
    return query_features_->Get(q);
  }
  std::span<const double> DocFeature(const DocId& d) const {
    return doc_features_->Get(d);
  }
  const std::shared_ptr<const FeatureTable>& query_features() const {
    return query_features_;
  }
  const std::shared_ptr<const FeatureTable>& doc_features() const {
    return doc_features_;
  }

  const std::map<QueryId, std::vector<Judgment>>& docs_of() const {
    return docs_of_;
  }

 private:
  std::map<QueryId, std::vector<Judgment>> docs_of_;
  std::vector<QueryId> queries_;
  std::vector<DocId> universe_;
  std::size_t num_pairs_ = 0;
  std::size_t num_positive_pairs_ = 0;
  std::shared_ptr<const FeatureTable> query_features_;
  std::shared_ptr<const FeatureTable> doc_features_;
};

// Q^f and D^f. Both may be non-empty at once.
struct ForgetSpec {
  std::set<QueryId> forget_queries;
  std::set<DocId> forget_docs;

  bool empty() const { return forget_queries.empty() && forget_docs.empty(); }
  bool operator==(const ForgetSpec&) const = default;
};

struct ForgetOptions {
  // Document removal normally only forgets positive pairs; set this to also
  // forget negative pairs of the removed documents.
  bool include_negative_doc_removal = false;
};

struct ForgetPair {
  QueryId query;
  DocId doc;
  Label label;
  // Which removal request selected the pair. Both may be set.
  bool via_query = false;
  bool via_doc = false;

  bool operator==(const ForgetPair&) const = default;
};

// The forget set F with its per-query view D_q^f and affected queries Q_F.
class ForgetSet {
 public:
  ForgetSet() = default;
  explicit ForgetSet(std::vector<ForgetPair> pairs);

  // Sorted by (query, doc).
  const std::vector<ForgetPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

  bool Contains(const QueryId& q, const DocId& d) const;
  // D_q^f; empty for unaffected queries.
  const std::set<DocId>& DocsOf(const QueryId& q) const;
  // Q_F, sorted.
  std::vector<QueryId> Queries() const;

 private:
  std::vector<ForgetPair> pairs_;
  std::map<QueryId, std::set<DocId>> per_query_;
};

// F built from query removal (positive pairs of Q^f) united with document
// removal (pairs whose document is in D^f). Throws ValidationError naming any
// id absent from the dataset.
ForgetSet BuildForgetSet(const Dataset& dataset, const ForgetSpec& spec,
                         const ForgetOptions& options = {});

struct Partition {
  ForgetSet forget;
  std::vector<Pair> retain;  // R = S \ F, in dataset order
};

Partition PartitionDataset(const Dataset& dataset, const ForgetSet& forget);

// R as a rankable corpus: each query keeps D_q \ D_q^f. Queries left without a
// positive or a negative are dropped.
Dataset RetainDataset(const Dataset& dataset, const ForgetSet& forget);

// r_q, keyed by (q, d) for d in D_q^f.
struct SubstituteMap {
  std::map<std::pair<QueryId, DocId>, DocId> subs;

  std::optional<DocId> Get(const QueryId& q, const DocId& d) const;
  bool operator==(const SubstituteMap&) const = default;
};

// Checks the domain is exactly F and every substitute lies in the corpus
// universe outside D_q^f and D_q^+.
void ValidateSubstitutes(const Dataset& dataset, const ForgetSet& forget,
                         const SubstituteMap& subs);

// Uniform draw from universe \ (D_q^f u D_q^+) for every forget pair.
SubstituteMap AssignRandomSubstitutes(const Dataset& dataset,
                                      const ForgetSet& forget,
                                      std::uint64_t seed);

// S* = F* u R together with the per-query substituted document lists D_q^*.
class CorrectedDataset {
 public:
  // F* = {(r(x), y)}, S* = F* u R. A substitute that coincides with a
  // retained document keeps a single entry in D_q^*, labelled positive if
  // either source is positive. Throws ValidationError listing uncovered pairs.
  CorrectedDataset(const Dataset& base, const ForgetSet& forget,
                   const SubstituteMap& subs);

  // |S*| == |S|; F* entries first replace their F pairs in dataset order.
  const std::vector<Pair>& star_pairs() const { return star_pairs_; }
  const std::vector<Pair>& substitute_pairs() const { return substitute_pairs_; }
  // S* as a rankable corpus over D_q^*.
  const Dataset& dataset() const { return star_; }
  const std::vector<Judgment>& DocsStarOf(const QueryId& q) const {
    return star_.DocsOf(q);
  }

 private:
  std::vector<Pair> star_pairs_;
  std::vector<Pair> substitute_pairs_;
  Dataset star_;
};

CorrectedDataset ApplySubstitutes(const Dataset& dataset,
                                  const ForgetSet& forget,
                                  const SubstituteMap& subs);

}  // namespace unrank

#endif  // UNRANK_DATASET_H_
