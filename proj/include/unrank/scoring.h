#ifndef UNRANK_SCORING_H_
#define UNRANK_SCORING_H_

// Glue between corpus ids and scorer feature inputs.

#include "unrank/dataset.h"
#include "unrank/scorer.h"

namespace unrank {

inline PairFeatures FeaturesOf(const Dataset& dataset, const QueryId& q,
                               const DocId& d) {
  return {dataset.QueryFeature(q), dataset.DocFeature(d)};
}

inline double ScorePair(const ScorerParams& params, const Dataset& dataset,
                        const QueryId& q, const DocId& d) {
  return Score(params, dataset.QueryFeature(q), dataset.DocFeature(d));
}

}  // namespace unrank

#endif  // UNRANK_SCORING_H_
