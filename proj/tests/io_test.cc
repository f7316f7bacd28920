#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "test_util.h"
#include "unrank/datagen.h"
#include "unrank/error.h"
#include "unrank/io.h"

namespace unrank {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("unrank_io_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(IoTest, DatasetRoundTripPreservesPairsAndFeatures) {
  GenConfig cfg;
  cfg.n_queries = 8;
  cfg.docs_per_query = 6;
  cfg.neg_ratio = 5;
  cfg.d_feat = 3;
  const Dataset ds = Generate(cfg).train;
  WritePairsFile(dir_ / "pairs.tsv", ds);
  WriteFeaturesFile(dir_ / "q.tsv", *ds.query_features());
  WriteFeaturesFile(dir_ / "d.tsv", *ds.doc_features());
  const Dataset back =
      LoadDataset(dir_ / "pairs.tsv", dir_ / "q.tsv", dir_ / "d.tsv");
  EXPECT_EQ(back.Pairs(), ds.Pairs());
  for (const auto& q : ds.queries()) {
    const auto a = ds.QueryFeature(q), b = back.QueryFeature(q);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }
  for (const auto& d : ds.universe()) {
    const auto a = ds.DocFeature(d), b = back.DocFeature(d);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }
}

TEST(PairsFormatTest, CommentsAndBadLabels) {
  std::istringstream good("# header\nq1\td1\t1\nq1\td2\t0\n\n");
  const PairsTable t = ReadPairs(good);
  ASSERT_EQ(t.at("q1").size(), 2u);
  EXPECT_EQ(t.at("q1")[1].label, Label::kNegative);
  std::istringstream bad("q1\td1\t2\n");
  EXPECT_THROW(ReadPairs(bad), ValidationError);
  std::istringstream short_line("q1\td1\n");
  EXPECT_THROW(ReadPairs(short_line), ValidationError);
}

TEST(FeaturesFormatTest, RejectsRaggedRows) {
  std::istringstream in("a\t1\t2\nb\t1\n");
  EXPECT_THROW(ReadFeatures(in), ValidationError);
}

TEST(FormatDoubleTest, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678, 0.0}) {
    EXPECT_EQ(std::stod(FormatDouble(v)), v);
  }
  EXPECT_EQ(FormatDouble(0.25), "0.25");
}

TEST(ForgetSpecJsonTest, RoundTrip) {
  const ForgetSpec spec{{"q2", "q1"}, {"d9"}};
  EXPECT_EQ(ForgetSpecFromJson(ForgetSpecToJson(spec)), spec);
  EXPECT_THROW(ForgetSpecFromJson("[1,2]"), ValidationError);
}

TEST(SubstitutesJsonTest, RoundTripWithSeparatorInDocId) {
  SubstituteMap subs;
  subs.subs[{"q1", "d|1"}] = "d7";
  subs.subs[{"q2", "d3"}] = "d8";
  EXPECT_EQ(SubstitutesFromJson(SubstitutesToJson(subs)), subs);
}

TEST_F(IoTest, WriteTextFileCreatesParents) {
  const fs::path p = dir_ / "a" / "b" / "c.txt";
  WriteTextFile(p, "hello\n");
  EXPECT_EQ(ReadTextFile(p), "hello\n");
  EXPECT_THROW(ReadTextFile(dir_ / "missing"), ValidationError);
}

}  // namespace
}  // namespace unrank
