#include "dcan/pair_graph.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace dcan;
using dcan::test::random_matrix;

TEST(Pooling, StacksViewXThenViewY) {
  const Matrix x = Matrix::Constant(2, 3, 1.0);
  const Matrix y = Matrix::Constant(2, 3, 2.0);
  const Matrix p = pooled_rows(x, y);
  EXPECT_EQ(p.rows(), 4);
  EXPECT_EQ(p(1, 0), 1.0);
  EXPECT_EQ(p(2, 0), 2.0);
  EXPECT_EQ(pooled_labels({4, 5}), (Labels{4, 5, 4, 5}));
}

TEST(SamePairs, CountIsSumOfClassChooseTwo) {
  const Labels labels{0, 1, 0, 2, 1, 0, 0, 1, 0, 1};
  const auto pairs = build_same_pairs(labels);
  // Class sizes 5, 4, 1.
  EXPECT_EQ(pairs.size(), 10u + 6u + 0u);
  for (const auto& [i, j] : pairs) {
    EXPECT_LT(i, j);
    EXPECT_EQ(labels[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(j)]);
  }
  EXPECT_THROW(build_same_pairs({3}), std::invalid_argument);
}

TEST(DiffPairs, OneDimensionalHandExample) {
  // Points 0, 1, 2, 10 with labels a, b, a, b and k = 1.
  Matrix f(4, 1);
  f << 0.0, 1.0, 2.0, 10.0;
  const auto r = build_diff_pairs(f, {0, 1, 0, 1}, 1);
  // 0 -> 1, 1 -> 0 (tie with 2, lower index wins), 2 -> 1, 3 -> 2.
  EXPECT_EQ(r.pairs, (std::vector<IndexPair>{{0, 1}, {1, 2}, {2, 3}}));
  EXPECT_EQ(r.effective_k, 1);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(DiffPairs, KClampedWithWarning) {
  const Matrix f = random_matrix(6, 2, 1);
  const auto r = build_diff_pairs(f, {0, 0, 0, 0, 0, 1}, 3);
  EXPECT_EQ(r.effective_k, 1);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("clamped to 1"), std::string::npos);
  // Every sample of class 0 pairs with the lone sample 5; sample 5 takes 3.
  EXPECT_EQ(r.pairs.size(), 5u);
}

TEST(DiffPairs, NoDuplicatesAndOnlyForeignLabels) {
  const Matrix f = random_matrix(30, 3, 2);
  Labels labels(30);
  for (int i = 0; i < 30; ++i) labels[static_cast<std::size_t>(i)] = i % 4;
  const auto r = build_diff_pairs(f, labels, 4);
  const std::set<IndexPair> unique(r.pairs.begin(), r.pairs.end());
  EXPECT_EQ(unique.size(), r.pairs.size());
  for (const auto& [i, j] : r.pairs) {
    EXPECT_LT(i, j);
    EXPECT_NE(labels[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(j)]);
  }
  // Each sample contributes k edges; union has between 30*4/2 and 30*4.
  EXPECT_GE(r.pairs.size(), 60u);
  EXPECT_LE(r.pairs.size(), 120u);
}

TEST(DiffPairs, Errors) {
  const Matrix f = random_matrix(4, 2, 3);
  EXPECT_THROW(build_diff_pairs(f, {0, 0, 0, 0}, 1), DegenerateDataError);
  EXPECT_THROW(build_diff_pairs(f, {0, 1, 0}, 1), DimensionError);
  EXPECT_THROW(build_diff_pairs(f, {0, 1, 0, 1}, 0), std::invalid_argument);
}

TEST(PairSets, RequireSameClassPairs) {
  const Matrix f = random_matrix(4, 2, 4);
  EXPECT_THROW(build_pair_sets(f, {0, 1, 2, 3}, 1), DegenerateDataError);
  const PairSets s = build_pair_sets(f, {0, 1, 0, 1}, 1);
  EXPECT_EQ(s.n1(), 2u);
  EXPECT_EQ(s.k, 1);
}

TEST(MarginTerms, HandComputedValues) {
  Matrix h(3, 2);
  h << 0, 0, 3, 4, 0, 1;
  PairSets s;
  s.same_pairs = {{0, 1}};
  s.diff_pairs = {{0, 2}, {1, 2}};
  const auto m = margin_terms(h, s);
  EXPECT_DOUBLE_EQ(m.g1, 25.0 / 2.0);
  EXPECT_DOUBLE_EQ(m.g2, (1.0 + 18.0) / 4.0);
  s.diff_pairs = {{0, 3}};
  EXPECT_THROW(margin_terms(h, s), DimensionError);
  s.diff_pairs.clear();
  EXPECT_THROW(margin_terms(h, s), DegenerateDataError);
}

TEST(PairsCsv, OneRowPerPair) {
  PairSets s;
  s.same_pairs = {{0, 2}};
  s.diff_pairs = {{0, 1}, {1, 2}};
  std::ostringstream out;
  write_pairs_csv(out, s);
  EXPECT_EQ(out.str(), "i,j,kind\n0,2,same\n0,1,diff\n1,2,diff\n");
}
