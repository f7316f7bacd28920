#include "unrank/io.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "unrank/error.h"

namespace unrank {

namespace {

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

double ParseDouble(const std::string& text, std::size_t line_no) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("line " + std::to_string(line_no) +
                          ": not a number: '" + text + "'");
  }
  return v;
}

bool SkipLine(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line.empty() || line[0] == '#';
}

std::ifstream OpenInput(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

PairsTable ReadPairs(std::istream& in) {
  PairsTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (SkipLine(line)) continue;
    const auto fields = SplitTabs(line);
    if (fields.size() != 3) {
      throw ValidationError("pairs line " + std::to_string(line_no) +
                            ": expected 3 tab-separated fields");
    }
    Label label;
    if (fields[2] == "1") {
      label = Label::kPositive;
    } else if (fields[2] == "0") {
      label = Label::kNegative;
    } else {
      throw ValidationError("pairs line " + std::to_string(line_no) +
                            ": label must be 1 or 0, got '" + fields[2] + "'");
    }
    table[fields[0]].push_back({fields[1], label});
  }
  return table;
}

PairsTable ReadPairsFile(const std::filesystem::path& path) {
  auto in = OpenInput(path);
  return ReadPairs(in);
}

void WritePairs(std::ostream& out, const Dataset& dataset) {
  for (const auto& [q, docs] : dataset.docs_of()) {
    for (const auto& j : docs) {
      out << q << '\t' << j.doc << '\t'
          << (j.label == Label::kPositive ? '1' : '0') << '\n';
    }
  }
}

void WritePairsFile(const std::filesystem::path& path, const Dataset& dataset) {
  std::ostringstream out;
  WritePairs(out, dataset);
  WriteTextFile(path, out.str());
}

std::shared_ptr<FeatureTable> ReadFeatures(std::istream& in) {
  std::shared_ptr<FeatureTable> table;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (SkipLine(line)) continue;
    const auto fields = SplitTabs(line);
    if (fields.size() < 2) {
      throw ValidationError("feature line " + std::to_string(line_no) +
                            ": expected an id and at least one value");
    }
    values.clear();
    for (std::size_t i = 1; i < fields.size(); ++i) {
      values.push_back(ParseDouble(fields[i], line_no));
    }
    if (!table) table = std::make_shared<FeatureTable>(values.size());
    table->Add(fields[0], values);
  }
  if (!table) throw ValidationError("feature file is empty");
  return table;
}

std::shared_ptr<FeatureTable> ReadFeaturesFile(
    const std::filesystem::path& path) {
  auto in = OpenInput(path);
  return ReadFeatures(in);
}

void WriteFeatures(std::ostream& out, const FeatureTable& table) {
  for (const auto& id : table.ids()) {
    out << id;
    for (double v : table.Get(id)) out << '\t' << FormatDouble(v);
    out << '\n';
  }
}

void WriteFeaturesFile(const std::filesystem::path& path,
                       const FeatureTable& table) {
  std::ostringstream out;
  WriteFeatures(out, table);
  WriteTextFile(path, out.str());
}

Dataset LoadDataset(const std::filesystem::path& pairs,
                    const std::filesystem::path& query_features,
                    const std::filesystem::path& doc_features) {
  return Dataset(ReadPairsFile(pairs), ReadFeaturesFile(query_features),
                 ReadFeaturesFile(doc_features));
}

std::string ForgetSpecToJson(const ForgetSpec& spec) {
  nlohmann::ordered_json j;
  j["forget_queries"] = spec.forget_queries;
  j["forget_docs"] = spec.forget_docs;
  return j.dump(2) + "\n";
}

ForgetSpec ForgetSpecFromJson(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) {
      throw ValidationError("malformed forget spec: expected a JSON object");
    }
    ForgetSpec spec;
    if (j.contains("forget_queries")) {
      for (const auto& q : j.at("forget_queries")) {
        spec.forget_queries.insert(q.get<std::string>());
      }
    }
    if (j.contains("forget_docs")) {
      for (const auto& d : j.at("forget_docs")) {
        spec.forget_docs.insert(d.get<std::string>());
      }
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed forget spec: ") + e.what());
  }
}

std::string SubstitutesToJson(const SubstituteMap& subs) {
  nlohmann::ordered_json inner = nlohmann::ordered_json::object();
  for (const auto& [key, sub] : subs.subs) {
    inner[key.first + "|" + key.second] = sub;
  }
  nlohmann::ordered_json j;
  j["substitutes"] = inner;
  return j.dump(2) + "\n";
}

SubstituteMap SubstitutesFromJson(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SubstituteMap subs;
    for (const auto& [key, value] : j.at("substitutes").items()) {
      const std::size_t bar = key.find('|');
      if (bar == std::string::npos) {
        throw ValidationError("substitute key '" + key +
                              "' is not of the form qid|did");
      }
      subs.subs[{key.substr(0, bar), key.substr(bar + 1)}] =
          value.get<std::string>();
    }
    return subs;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed substitutes: ") + e.what());
  }
}

std::string ReadTextFile(const std::filesystem::path& path) {
  auto in = OpenInput(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace unrank
