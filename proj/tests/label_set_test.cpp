#include "shiftlab/label_set.hpp"

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shiftlab/prediction.hpp"

using namespace shiftlab;

namespace {

LabelSet make_set(const std::string& id, int32_t n, int32_t first = 0) {
  std::vector<LabelSet::Class> classes;
  for (int32_t i = 0; i < n; ++i) classes.push_back({first + i, "c" + std::to_string(first + i)});
  return LabelSet(id, std::move(classes));
}

}  // namespace

TEST(LabelSet, RejectsDuplicateIds) {
  EXPECT_THROW(LabelSet("x", {{1, "a"}, {1, "b"}}), std::invalid_argument);
}

TEST(Subset, KeepsParentOrderAndRecordsParent) {
  LabelSet parent = make_set("in1000", 1000);
  std::vector<int32_t> dogs;
  for (int32_t i = 151; i < 251; ++i) dogs.push_back(i);
  LabelSet sub = subset(parent, dogs, "in100-dogs");
  EXPECT_EQ(sub.size(), 100u);
  EXPECT_EQ(sub.parent_id(), "in1000");
  EXPECT_EQ(sub.at(0).id, 151);
  EXPECT_EQ(sub.at(99).id, 250);
}

TEST(Subset, IdentityOnAllIds) {
  LabelSet parent = make_set("p", 10);
  LabelSet sub = subset(parent, parent.ids());
  ASSERT_EQ(sub.size(), parent.size());
  for (size_t i = 0; i < sub.size(); ++i) EXPECT_EQ(sub.at(i).id, parent.at(i).id);
}

TEST(Subset, UnknownIdIsFatalWithOffendingId) {
  LabelSet parent = make_set("p", 5);
  try {
    std::vector<int32_t> bad{2, 17};
    subset(parent, bad);
    FAIL() << "expected exception";
  } catch (const std::invalid_argument& ex) {
    EXPECT_NE(std::string(ex.what()).find("17"), std::string::npos);
  }
}

TEST(Subset, ComposedSubsetsEqualIntersection) {
  std::mt19937_64 rng(3);
  LabelSet parent = make_set("p", 200);
  for (int iter = 0; iter < 50; ++iter) {
    std::set<int32_t> a, b;
    for (int i = 0; i < 120; ++i) a.insert(static_cast<int32_t>(rng() % 200));
    for (int i = 0; i < 120; ++i) b.insert(static_cast<int32_t>(rng() % 200));
    std::vector<int32_t> av(a.begin(), a.end());
    LabelSet sub_a = subset(parent, av);
    // subset of a subset: ids must come from the inner set
    std::vector<int32_t> both;
    for (int32_t id : b)
      if (a.count(id)) both.push_back(id);
    LabelSet nested = subset(sub_a, both);
    LabelSet direct = subset(parent, both);
    ASSERT_EQ(nested.size(), direct.size());
    for (size_t i = 0; i < nested.size(); ++i) EXPECT_EQ(nested.at(i).id, direct.at(i).id);
  }
}

TEST(Partition, TenDisjointHundredsCoverThousand) {
  LabelSet parent = make_set("in1000", 1000);
  LabelSetPartition p = partition_into_k(parent, 10, 42);
  ASSERT_EQ(p.parts.size(), 10u);
  std::set<int32_t> seen;
  for (const LabelSet& part : p.parts) {
    EXPECT_EQ(part.size(), 100u);
    EXPECT_EQ(part.parent_id(), "in1000");
    for (const auto& c : part.classes()) EXPECT_TRUE(seen.insert(c.id).second);
  }
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(Partition, KOneIsParent) {
  LabelSet parent = make_set("p", 17);
  LabelSetPartition p = partition_into_k(parent, 1, 0);
  ASSERT_EQ(p.parts.size(), 1u);
  EXPECT_EQ(p.parts[0].ids(), parent.ids());
}

TEST(Partition, UnevenSizesDifferByAtMostOne) {
  LabelSet parent = make_set("p", 10);
  LabelSetPartition p = partition_into_k(parent, 3, 7);
  std::multiset<size_t> sizes;
  std::set<int32_t> seen;
  for (const LabelSet& part : p.parts) {
    sizes.insert(part.size());
    for (const auto& c : part.classes()) EXPECT_TRUE(seen.insert(c.id).second);
  }
  EXPECT_EQ(sizes, (std::multiset<size_t>{3, 3, 4}));
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Partition, DeterministicUnderSeedAndKTooLargeFatal) {
  LabelSet parent = make_set("p", 30);
  LabelSetPartition a = partition_into_k(parent, 4, 9);
  LabelSetPartition b = partition_into_k(parent, 4, 9);
  for (size_t i = 0; i < a.parts.size(); ++i) EXPECT_EQ(a.parts[i].ids(), b.parts[i].ids());
  LabelSetPartition c = partition_into_k(parent, 4, 10);
  bool any_diff = false;
  for (size_t i = 0; i < a.parts.size(); ++i) any_diff |= a.parts[i].ids() != c.parts[i].ids();
  EXPECT_TRUE(any_diff);
  EXPECT_THROW(partition_into_k(parent, 31, 0), std::invalid_argument);
}

TEST(SharedClasses, DisjointEmptyWithWarning) {
  LabelSet ls = make_set("a", 10);
  std::vector<int32_t> universe{100, 101};
  SharedClassMap m = shared_classes(ls, universe, "eval");
  EXPECT_TRUE(m.shared.empty());
  EXPECT_TRUE(m.empty_warning);
}

TEST(SharedClasses, IdenticalGivesFullSet) {
  LabelSet ls = make_set("a", 10);
  SharedClassMap m = shared_classes(ls, ls.ids());
  EXPECT_EQ(m.shared, ls.ids());
  EXPECT_FALSE(m.empty_warning);
}

TEST(SharedClasses, RandomIntersectionMatchesSetOracle) {
  std::mt19937_64 rng(31);
  for (int iter = 0; iter < 100; ++iter) {
    LabelSet ls = make_set("a", 100);
    std::set<int32_t> universe;
    for (int i = 0; i < 200; ++i) universe.insert(static_cast<int32_t>(rng() % 300));
    std::vector<int32_t> uv(universe.begin(), universe.end());
    SharedClassMap m = shared_classes(ls, uv);
    std::vector<int32_t> expected;
    for (int32_t id : ls.ids())
      if (universe.count(id)) expected.push_back(id);
    EXPECT_EQ(m.shared, expected);
  }
}

TEST(Remap, DenseRestrictionForcedExample) {
  LabelSet parent = make_set("p", 4);
  PredictionRecord pred;
  pred.sample_id = "s";
  pred.kind = PredictionKind::dense;
  pred.dense = {0.1, 0.5, 0.3, 0.1};
  std::vector<int32_t> target_ids{2, 3};
  LabelSet target = subset(parent, target_ids);
  PredictionRecord out = remap_prediction(pred, parent, target);
  EXPECT_EQ(out.kind, PredictionKind::argmax);
  EXPECT_EQ(out.argmax_class, 2);
}

TEST(Remap, FullArgmaxInTargetIsPreserved) {
  LabelSet parent = make_set("p", 6);
  PredictionRecord pred;
  pred.sample_id = "s";
  pred.kind = PredictionKind::dense;
  pred.dense = {0.0, 0.9, 0.1, 0.0, 0.0, 0.0};
  std::vector<int32_t> target_ids{1, 4, 5};
  PredictionRecord out = remap_prediction(pred, parent, subset(parent, target_ids));
  EXPECT_EQ(out.argmax_class, 1);
}

TEST(Remap, TopKTakesBestRetainedOrAbstains) {
  LabelSet parent = make_set("p", 10);
  PredictionRecord pred;
  pred.sample_id = "s";
  pred.kind = PredictionKind::topk;
  pred.topk = {{4, 0.6}, {1, 0.3}, {9, 0.1}};
  std::vector<int32_t> has{1, 9};
  EXPECT_EQ(remap_prediction(pred, parent, subset(parent, has)).argmax_class, 1);
  std::vector<int32_t> none{0, 2, 3};
  PredictionRecord abstained = remap_prediction(pred, parent, subset(parent, none));
  EXPECT_EQ(abstained.kind, PredictionKind::abstain);
}

TEST(Remap, ArgmaxOnlyInputIsUnsupported) {
  LabelSet parent = make_set("p", 4);
  PredictionRecord pred;
  pred.sample_id = "s";
  pred.kind = PredictionKind::argmax;
  pred.argmax_class = 1;
  std::vector<int32_t> target_ids{1, 2};
  EXPECT_THROW(remap_prediction(pred, parent, subset(parent, target_ids)), RemapError);
}

TEST(Remap, FuzzEqualsMaskedArgmaxOracle) {
  std::mt19937_64 rng(41);
  LabelSet parent = make_set("p", 20);
  for (int i = 0; i < 10000; ++i) {
    PredictionRecord pred;
    pred.sample_id = "s";
    pred.kind = PredictionKind::dense;
    std::vector<std::pair<int32_t, double>> by_class;
    for (int32_t c = 0; c < 20; ++c) {
      double v = (rng() % 1000) / 1000.0;
      pred.dense.push_back(v);
      by_class.emplace_back(c, v);
    }
    std::set<int32_t> allowed;
    while (allowed.size() < 5) allowed.insert(static_cast<int32_t>(rng() % 20));
    std::vector<int32_t> av(allowed.begin(), allowed.end());
    PredictionRecord out = remap_prediction(pred, parent, subset(parent, av));
    EXPECT_EQ(out.argmax_class, oracle::masked_argmax(by_class, allowed));
  }
}

TEST(Remap, ArgmaxPreservationImpliesMonotoneCorrectness) {
  // For samples whose gt lies in the subset, per-sample correctness never
  // degrades when competitors are removed.
  std::mt19937_64 rng(43);
  LabelSet parent = make_set("p", 15);
  for (int i = 0; i < 5000; ++i) {
    PredictionRecord pred;
    pred.sample_id = "s";
    pred.kind = PredictionKind::dense;
    for (int32_t c = 0; c < 15; ++c) pred.dense.push_back((rng() % 100) / 100.0);
    std::set<int32_t> sub;
    while (sub.size() < 6) sub.insert(static_cast<int32_t>(rng() % 15));
    int32_t gt = *std::next(sub.begin(), static_cast<long>(rng() % sub.size()));
    std::vector<int32_t> sv(sub.begin(), sub.end());
    LabelSet target = subset(parent, sv);

    int32_t full = remap_prediction(pred, parent, subset(parent, parent.ids())).argmax_class;
    int32_t restricted = remap_prediction(pred, parent, target).argmax_class;
    if (full == gt) EXPECT_EQ(restricted, gt);       // argmax preservation
    if (restricted != gt) EXPECT_NE(full, gt);       // contrapositive
  }
}
