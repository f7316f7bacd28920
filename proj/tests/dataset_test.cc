#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "test_util.h"
#include "unrank/error.h"

namespace unrank {
namespace {

using testing::MakeDataset;

Dataset SmallCorpus() {
  return MakeDataset({{"q1", {{"d1", 1}, {"d2", 0}, {"d4", 0}}},
                      {"q2", {{"d3", 1}, {"d1", 0}, {"d2", 0}}},
                      {"q3", {{"d5", 1}, {"d6", 1}, {"d2", 0}, {"d7", 0}}}});
}

TEST(DatasetTest, RejectsQueryWithoutPositive) {
  EXPECT_THROW(MakeDataset({{"q", {{"a", 0}, {"b", 0}}}}), ValidationError);
}

TEST(DatasetTest, RejectsDuplicatePair) {
  EXPECT_THROW(MakeDataset({{"q", {{"a", 1}, {"a", 0}}}}), ValidationError);
}

TEST(DatasetTest, UniverseIsSortedUnion) {
  const Dataset ds = SmallCorpus();
  EXPECT_EQ(ds.universe(),
            (std::vector<DocId>{"d1", "d2", "d3", "d4", "d5", "d6", "d7"}));
  EXPECT_EQ(ds.num_pairs(), 10u);
  EXPECT_EQ(ds.num_positive_pairs(), 4u);
}

TEST(ForgetSetTest, QueryRemovalSelectsPositivesOnly) {
  const Dataset ds = SmallCorpus();
  const ForgetSet f = BuildForgetSet(ds, {{"q1"}, {}});
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f.pairs()[0].doc, "d1");
  EXPECT_TRUE(f.pairs()[0].via_query);
  EXPECT_FALSE(f.pairs()[0].via_doc);
}

TEST(ForgetSetTest, DocRemovalSelectsPositivePairsOfThatDoc) {
  const Dataset ds = SmallCorpus();
  const ForgetSet f = BuildForgetSet(ds, {{}, {"d3"}});
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f.pairs()[0].query, "q2");
}

TEST(ForgetSetTest, NegativeDocRemovalIsOptIn) {
  const Dataset ds = SmallCorpus();
  // d1 is positive for q1 and negative for q2.
  EXPECT_EQ(BuildForgetSet(ds, {{}, {"d1"}}).size(), 1u);
  const ForgetSet literal =
      BuildForgetSet(ds, {{}, {"d1"}}, {.include_negative_doc_removal = true});
  EXPECT_EQ(literal.size(), 2u);
  EXPECT_TRUE(literal.Contains("q2", "d1"));
}

TEST(ForgetSetTest, OverlappingRemovalCountsPairOnce) {
  const Dataset ds = SmallCorpus();
  const ForgetSet f = BuildForgetSet(ds, {{"q1"}, {"d1"}});
  // Set-union oracle over the enumerated pairs.
  std::set<std::pair<QueryId, DocId>> expected;
  for (const auto& p : ds.Pairs()) {
    if (p.label != Label::kPositive) continue;
    if (p.query == "q1" || p.doc == "d1") expected.insert({p.query, p.doc});
  }
  ASSERT_EQ(f.size(), expected.size());
  ASSERT_EQ(f.size(), 1u);
  EXPECT_TRUE(f.pairs()[0].via_query && f.pairs()[0].via_doc);
}

TEST(ForgetSetTest, UnknownIdsAreNamed) {
  const Dataset ds = SmallCorpus();
  try {
    BuildForgetSet(ds, {{"nope"}, {}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
  }
  EXPECT_THROW(BuildForgetSet(ds, {{}, {"d99"}}), ValidationError);
}

TEST(ForgetSetTest, BuildIsOrderIndependentAndIdempotent) {
  const Dataset ds = SmallCorpus();
  const ForgetSet a = BuildForgetSet(ds, {{"q3", "q1"}, {"d3"}});
  const ForgetSet b = BuildForgetSet(ds, {{"q1", "q3"}, {"d3"}});
  EXPECT_EQ(a.pairs(), b.pairs());
  EXPECT_EQ(a.size(), 4u);
}

TEST(PartitionTest, SizesAddUp) {
  const Dataset ds = SmallCorpus();
  const ForgetSet f = BuildForgetSet(ds, {{"q3"}, {"d1"}});
  const Partition p = PartitionDataset(ds, f);
  EXPECT_EQ(p.forget.size() + p.retain.size(), ds.num_pairs());
  for (const auto& r : p.retain) EXPECT_FALSE(f.Contains(r.query, r.doc));
  const Partition none = PartitionDataset(ds, ForgetSet{});
  EXPECT_EQ(none.retain, ds.Pairs());
}

TEST(PartitionTest, FullQueryRemovalLeavesOnlyNegatives) {
  const Dataset ds = SmallCorpus();
  const ForgetSet f = BuildForgetSet(ds, {{"q1", "q2", "q3"}, {}});
  const Partition p = PartitionDataset(ds, f);
  ASSERT_FALSE(p.retain.empty());
  for (const auto& r : p.retain) EXPECT_EQ(r.label, Label::kNegative);
}

TEST(SubstituteTest, ValidationRulesHold) {
  const Dataset ds = SmallCorpus();
  const ForgetSet f = BuildForgetSet(ds, {{"q1"}, {}});
  EXPECT_THROW(ValidateSubstitutes(ds, f, {}), ValidationError);
  // Substitute may not be the forgotten doc itself or a positive of q.
  EXPECT_THROW(ValidateSubstitutes(ds, f, {{{{"q1", "d1"}, "d1"}}}),
               ValidationError);
  EXPECT_NO_THROW(ValidateSubstitutes(ds, f, {{{{"q1", "d1"}, "d6"}}}));
}

TEST(SubstituteTest, RandomAssignmentRespectsExclusions) {
  const Dataset ds = SmallCorpus();
  const ForgetSet f = BuildForgetSet(ds, {{"q1", "q2", "q3"}, {}});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SubstituteMap subs = AssignRandomSubstitutes(ds, f, seed);
    ASSERT_EQ(subs.subs.size(), f.size());
    EXPECT_NO_THROW(ValidateSubstitutes(ds, f, subs));
    EXPECT_EQ(subs, AssignRandomSubstitutes(ds, f, seed));
  }
}

TEST(CorrectedDatasetTest, DirectMapping) {
  const Dataset ds = SmallCorpus();
  const ForgetSet f = BuildForgetSet(ds, {{"q1"}, {}});
  const CorrectedDataset c = ApplySubstitutes(ds, f, {{{{"q1", "d1"}, "d7"}}});
  ASSERT_EQ(c.substitute_pairs().size(), 1u);
  EXPECT_EQ(c.substitute_pairs()[0],
            (Pair{"q1", "d7", Label::kPositive}));
  EXPECT_EQ(c.star_pairs().size(), ds.num_pairs());
  EXPECT_EQ(c.dataset().LabelOf("q1", "d7"), Label::kPositive);
  EXPECT_FALSE(c.dataset().LabelOf("q1", "d1").has_value());
}

TEST(CorrectedDatasetTest, SubstituteThatIsAnExistingNegativeMerges) {
  const Dataset ds = SmallCorpus();
  const ForgetSet f = BuildForgetSet(ds, {{"q1"}, {}});
  const CorrectedDataset c = ApplySubstitutes(ds, f, {{{{"q1", "d1"}, "d2"}}});
  // Set-algebra oracle: (D_q \ D_q^f) ∪ {r_q(d)}.
  std::set<DocId> expected = {"d2", "d4"};
  std::vector<DocId> got;
  for (const auto& j : c.DocsStarOf("q1")) got.push_back(j.doc);
  EXPECT_EQ(std::set<DocId>(got.begin(), got.end()), expected);
  EXPECT_EQ(got.size(), expected.size());
  EXPECT_EQ(c.dataset().LabelOf("q1", "d2"), Label::kPositive);
  // S* as a multiset keeps |S*| = |S|.
  EXPECT_EQ(c.star_pairs().size(), ds.num_pairs());
}

TEST(CorrectedDatasetTest, ForgottenDocsLeaveEveryStarList) {
  const Dataset ds = SmallCorpus();
  const ForgetSet f = BuildForgetSet(ds, {{"q3"}, {"d1", "d3"}});
  const SubstituteMap subs = AssignRandomSubstitutes(ds, f, 11);
  const CorrectedDataset c = ApplySubstitutes(ds, f, subs);
  for (const auto& q : ds.queries()) {
    for (const auto& j : c.DocsStarOf(q)) {
      EXPECT_FALSE(f.Contains(q, j.doc));
    }
  }
}

TEST(RetainDatasetTest, DropsForgottenPairsAndEmptyQueries) {
  const Dataset ds = SmallCorpus();
  const ForgetSet f = BuildForgetSet(ds, {{"q1"}, {"d5"}});
  const Dataset r = RetainDataset(ds, f);
  EXPECT_EQ(r.queries(), (std::vector<QueryId>{"q2", "q3"}));
  EXPECT_EQ(r.Positives("q3"), (std::vector<DocId>{"d6"}));
}

}  // namespace
}  // namespace unrank
