#ifndef UNRANK_IO_H_
#define UNRANK_IO_H_

// File formats for corpora, forget specifications and substitute maps.
//
//   pairs file     query_id<TAB>doc_id<TAB>label   (label 1 or 0, '#' comments)
//   feature file   entity_id<TAB>v1<TAB>...<TAB>v_n
//   forget spec    {"forget_queries": [...], "forget_docs": [...]}
//   substitutes    {"substitutes": {"<qid>|<did>": "<sub_did>"}}

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "unrank/dataset.h"

namespace unrank {

using PairsTable = std::map<QueryId, std::vector<Judgment>>;

PairsTable ReadPairs(std::istream& in);
PairsTable ReadPairsFile(const std::filesystem::path& path);
void WritePairs(std::ostream& out, const Dataset& dataset);
void WritePairsFile(const std::filesystem::path& path, const Dataset& dataset);

std::shared_ptr<FeatureTable> ReadFeatures(std::istream& in);
std::shared_ptr<FeatureTable> ReadFeaturesFile(
    const std::filesystem::path& path);
void WriteFeatures(std::ostream& out, const FeatureTable& table);
void WriteFeaturesFile(const std::filesystem::path& path,
                       const FeatureTable& table);

Dataset LoadDataset(const std::filesystem::path& pairs,
                    const std::filesystem::path& query_features,
                    const std::filesystem::path& doc_features);

std::string ForgetSpecToJson(const ForgetSpec& spec);
ForgetSpec ForgetSpecFromJson(const std::string& text);
std::string SubstitutesToJson(const SubstituteMap& subs);
SubstituteMap SubstitutesFromJson(const std::string& text);

std::string ReadTextFile(const std::filesystem::path& path);
// Writes through a temporary file in the same directory, then renames.
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

// Shortest decimal form that parses back to the same double.
std::string FormatDouble(double v);

}  // namespace unrank

#endif  // UNRANK_IO_H_
