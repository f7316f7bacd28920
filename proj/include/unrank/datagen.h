#ifndef UNRANK_DATAGEN_H_
#define UNRANK_DATAGEN_H_

// Synthetic corpora with planted topical relevance, and the forget-set
// construction protocol (balanced query / document removal with random
// substitutes).

#include <cstdint>
#include <utility>

#include "unrank/dataset.h"

namespace unrank {

struct GenConfig {
  int n_queries = 100;  // training queries
  int docs_per_query = 20;
  int pos_per_query = 1;
  int neg_ratio = 19;  // negatives per positive
  int d_feat = 32;
  int n_topics = 10;
  double noise_sigma = 0.3;
  // Share of all generated queries held out as the test split.
  double test_fraction = 0.2;
  std::uint64_t seed = 42;

  void Validate() const;
  int NumTestQueries() const;
};

struct GeneratedCorpus {
  Dataset train;
  Dataset test;
};

// Topic centroids are random unit vectors. A query and its positives are
// noisy copies of one centroid; each negative is a noisy copy of a different,
// uniformly chosen centroid. Every document belongs to exactly one query.
// Train and test queries are disjoint.
GeneratedCorpus Generate(const GenConfig& cfg);

struct ForgetProtocol {
  double fraction = 0.10;  // of all positive pairs
  double balance = 0.5;    // share of forget pairs selected by query removal
  std::uint64_t seed = 7;

  void Validate() const;
};

// ceil(fraction * positive pairs), tolerant of binary rounding.
std::size_t ForgetPairCount(const Dataset& dataset, double fraction);

struct ProtocolResult {
  ForgetSpec spec;
  SubstituteMap subs;
};

// Alternately selects whole queries (all their positives) and positive
// documents (all their positive pairs) at random until the query-removal and
// document-removal shares reach round(balance * target) and the remainder.
// Selections never overlap, so |F| equals the target exactly. Substitutes are
// drawn uniformly from universe \ (D_q^f u D_q^+). Throws ValidationError
// with the achievable fraction when the target cannot be met.
ProtocolResult BuildProtocol(const Dataset& dataset,
                             const ForgetProtocol& proto);

}  // namespace unrank

#endif  // UNRANK_DATAGEN_H_
