#include "dcan/evaluation.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace dcan;
using dcan::test::random_matrix;

TEST(Metric, Parse) {
  EXPECT_EQ(parse_metric("cosine"), Metric::cosine);
  EXPECT_EQ(parse_metric("euclidean"), Metric::euclidean);
  EXPECT_THROW(parse_metric("manhattan"), ConfigError);
}

TEST(Nearest, TiesGoToLowerIndexAndZeroProbeMisses) {
  Matrix g(3, 2);
  g << 1, 0, 0, 1, 1, 0;
  EXPECT_EQ(nearest_gallery_row(g, RowVector::Unit(2, 0), Metric::euclidean), 0);
  EXPECT_EQ(nearest_gallery_row(g, RowVector::Unit(2, 0), Metric::cosine), 0);
  EXPECT_EQ(nearest_gallery_row(g, RowVector::Zero(2), Metric::cosine), -1);
  // Cosine ignores magnitude; euclidean does not.
  Matrix h(2, 2);
  h << 10, 0, 0.6, 0.8;
  const RowVector p = (RowVector(2) << 1, 0.1).finished();
  EXPECT_EQ(nearest_gallery_row(h, p, Metric::cosine), 0);
  EXPECT_EQ(nearest_gallery_row(h, p, Metric::euclidean), 1);
}

TEST(Rank1, PerfectAndHandCounted) {
  Matrix g(3, 2);
  g << 1, 0, 0, 1, -1, 0;
  const Labels gl{0, 1, 2};
  EXPECT_DOUBLE_EQ(rank1(g, gl, g, gl, Metric::euclidean), 1.0);
  Matrix p(2, 2);
  p << 0.9, 0.1, 0.1, 0.9;
  EXPECT_DOUBLE_EQ(rank1(g, gl, p, {0, 2}, Metric::cosine), 0.5);
  EXPECT_THROW(rank1(g, gl, Matrix::Zero(1, 3), {0}, Metric::cosine), DimensionError);
  EXPECT_THROW(rank1(g, {0}, p, {0, 2}, Metric::cosine), DimensionError);
}

TEST(Rank1, InvariantToGalleryPermutation) {
  const Matrix g = random_matrix(20, 4, 1);
  const Matrix p = random_matrix(15, 4, 2);
  Labels gl(20), pl(15);
  for (int i = 0; i < 20; ++i) gl[static_cast<std::size_t>(i)] = i % 5;
  for (int i = 0; i < 15; ++i) pl[static_cast<std::size_t>(i)] = i % 5;
  std::vector<Index> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix gp(20, 4);
  Labels glp(20);
  for (Index i = 0; i < 20; ++i) {
    gp.row(i) = g.row(perm[static_cast<std::size_t>(i)]);
    glp[static_cast<std::size_t>(i)] = gl[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  for (Metric m : {Metric::cosine, Metric::euclidean}) {
    EXPECT_DOUBLE_EQ(rank1(g, gl, p, pl, m), rank1(gp, glp, p, pl, m));
  }
}

TEST(Rank1, CosineInvariantToPositiveProbeScaling) {
  const Matrix g = random_matrix(20, 4, 4);
  const Matrix p = random_matrix(30, 4, 5);
  Labels gl(20), pl(30);
  for (int i = 0; i < 20; ++i) gl[static_cast<std::size_t>(i)] = i % 4;
  for (int i = 0; i < 30; ++i) pl[static_cast<std::size_t>(i)] = i % 4;
  Matrix scaled = p;
  for (Index i = 0; i < 30; ++i) scaled.row(i) *= 0.1 + static_cast<double>(i);
  EXPECT_DOUBLE_EQ(rank1(g, gl, p, pl, Metric::cosine), rank1(g, gl, scaled, pl, Metric::cosine));
}

TEST(Rank1, ShuffledLabelsSitAtChance) {
  // c = 10 balanced classes, n = 2000 probes; chance 0.1 with 3-sigma binomial band.
  const Index n = 2000;
  const int c = 10;
  const Matrix g = random_matrix(n, 8, 6);
  const Matrix p = random_matrix(n, 8, 7);
  Labels gl(static_cast<std::size_t>(n)), pl(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    gl[static_cast<std::size_t>(i)] = static_cast<int>(i % c);
    pl[static_cast<std::size_t>(i)] = static_cast<int>(i % c);
  }
  std::mt19937_64 rng(8);
  std::shuffle(pl.begin(), pl.end(), rng);
  const double acc = rank1(g, gl, p, pl, Metric::cosine);
  const double band = 3.0 * std::sqrt(0.1 * 0.9 / static_cast<double>(n));
  EXPECT_NEAR(acc, 0.1, band);
}

TEST(CrossViewEval, IdentityViewsZeroNoiseArePerfect) {
  SyntheticParams sp;
  sp.noise_sigma = 0.0;
  sp.identity_views = true;
  const ViewDataset ds = generate_synthetic(sp);
  const ViewDataset test = ds.subset(Split::test);
  const EvalReport r = cross_view_eval(test.view_x, test.view_y, test.labels, Metric::cosine);
  EXPECT_DOUBLE_EQ(r.mean_accuracy, 1.0);
  int total = 0;
  for (const auto& [cls, hits] : r.per_class_hits) total += hits;
  EXPECT_EQ(total, 2 * test.size());
}

TEST(CrossViewEval, ReportFieldsRecombine) {
  const Matrix x = random_matrix(12, 3, 9);
  const Matrix y = x + random_matrix(12, 3, 10, 0.5);
  Labels l(12);
  for (int i = 0; i < 12; ++i) l[static_cast<std::size_t>(i)] = i % 4;
  const EvalReport r = cross_view_eval(x, y, l, Metric::euclidean);
  EXPECT_DOUBLE_EQ(r.mean_accuracy, 0.5 * (r.accuracy_xy + r.accuracy_yx));
  EXPECT_DOUBLE_EQ(r.accuracy_xy, rank1(x, l, y, l, Metric::euclidean));
  int hits = 0;
  for (const auto& [cls, h] : r.per_class_hits) hits += h;
  EXPECT_NEAR(static_cast<double>(hits), 12.0 * (r.accuracy_xy + r.accuracy_yx), 1e-9);
  std::ostringstream out;
  write_eval_report(out, r);
  EXPECT_EQ(out.str().rfind("direction,accuracy\ngallery_x_probe_y,", 0), 0u);
}

TEST(GapMetric, HandComputed) {
  // Two classes on a line: x = {0, 10}, y = {1, 10}.
  Matrix x(2, 1), y(2, 1);
  x << 0, 10;
  y << 1, 10;
  // Intra: |0-1| = 1, |10-10| = 0 -> 0.5. Inter: |0-10| = 10, |10-1| = 9 -> 9.5.
  EXPECT_DOUBLE_EQ(gap_metric(x, y, {0, 1}), 0.5 / 9.5);
  EXPECT_THROW(gap_metric(x, y, {0, 0}), DegenerateDataError);
  EXPECT_THROW(gap_metric(x, Matrix::Zero(3, 1), {0, 1}), DimensionError);
}

TEST(NeighborPreservation, IdentityAndScaling) {
  const Matrix m = random_matrix(25, 4, 11);
  for (double v : neighbor_preservation(m, m, 5)) EXPECT_DOUBLE_EQ(v, 1.0);
  for (double v : neighbor_preservation(m, 2.0 * m, 5)) EXPECT_DOUBLE_EQ(v, 1.0);
  EXPECT_THROW(neighbor_preservation(m, m, 25), std::invalid_argument);
  EXPECT_THROW(neighbor_preservation(m, m, 0), std::invalid_argument);
  EXPECT_THROW(neighbor_preservation(m, Matrix::Zero(3, 4), 1), DimensionError);
}

TEST(NeighborPreservation, MatchesBruteForceOnRandomProjection) {
  // Clustered data projected to 3-D.
  Matrix data = random_matrix(40, 10, 12, 0.1);
  for (Index i = 0; i < 40; ++i) data.row(i) += random_matrix(1, 10, 100 + static_cast<std::uint64_t>(i % 4));
  const Matrix proj = data * random_matrix(10, 3, 13);
  const Index max_k = 4;
  const auto got = neighbor_preservation(data, proj, max_k);
  auto knn = [](const Matrix& m, Index i, Index k) {
    std::vector<Index> out;
    std::vector<bool> used(static_cast<std::size_t>(m.rows()), false);
    used[static_cast<std::size_t>(i)] = true;
    for (Index t = 0; t < k; ++t) {
      Index best = -1;
      double best_d = 0.0;
      for (Index j = 0; j < m.rows(); ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double d = (m.row(i) - m.row(j)).squaredNorm();
        if (best < 0 || d < best_d) {
          best = j;
          best_d = d;
        }
      }
      used[static_cast<std::size_t>(best)] = true;
      out.push_back(best);
    }
    return out;
  };
  for (Index k = 1; k <= max_k; ++k) {
    int kept = 0;
    for (Index i = 0; i < 40; ++i) {
      const auto a = knn(data, i, k);
      const auto b = knn(proj, i, k);
      bool all = true;
      for (Index v : a) all = all && std::find(b.begin(), b.end(), v) != b.end();
      kept += all;
    }
    EXPECT_DOUBLE_EQ(got[static_cast<std::size_t>(k - 1)], kept / 40.0) << k;
  }
}
