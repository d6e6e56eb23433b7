#include "dcan/objective.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace dcan;
using dcan::test::random_matrix;

namespace {

struct Instance {
  Matrix x;
  Matrix y;
  Labels labels;
  PairSets pairs;
  LayerParams params;
};

Instance make_instance(std::uint64_t seed, Index n = 12, Index d = 7, Index h = 5, int k = 2) {
  Instance inst;
  inst.x = random_matrix(n, d, seed, 0.5);
  inst.y = random_matrix(n, d, seed + 1, 0.5);
  inst.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) inst.labels[static_cast<std::size_t>(i)] = static_cast<int>(i % 3);
  inst.pairs = build_pair_sets(pooled_rows(inst.x, inst.y), pooled_labels(inst.labels), k);
  inst.params = init_params(d, h, 1.0, seed + 2);
  Vector flat = flatten(inst.params) + Vector(random_matrix(inst.params.parameter_count(), 1, seed + 3, 0.2));
  inst.params = unflatten(flat, inst.params);
  return inst;
}

// Straight-line evaluation with explicit loops.
double naive_value(const Instance& inst, const ObjectiveConfig& cfg) {
  const LayerParams& p = inst.params;
  auto code = [&](const Matrix& w, const Vector& b, const RowVector& in) {
    RowVector h(w.rows());
    for (Index u = 0; u < w.rows(); ++u) {
      double z = b(u);
      for (Index j = 0; j < w.cols(); ++j) z += w(u, j) * in(j);
      h(u) = std::tanh(p.gain * z);
    }
    return h;
  };
  auto recon = [&](const Matrix& w, const Vector& b, const Vector& c, const Matrix& data) {
    double total = 0.0;
    for (Index i = 0; i < data.rows(); ++i) {
      const RowVector h = code(w, b, data.row(i));
      for (Index j = 0; j < w.cols(); ++j) {
        double z = c(j);
        for (Index u = 0; u < w.rows(); ++u) z += w(u, j) * h(u);
        const double r = std::tanh(p.gain * z) - data(i, j);
        total += 0.5 * r * r;
      }
    }
    return total;
  };
  std::vector<RowVector> pooled;
  for (Index i = 0; i < inst.x.rows(); ++i) pooled.push_back(code(p.w_x, p.b_x, inst.x.row(i)));
  for (Index i = 0; i < inst.y.rows(); ++i) pooled.push_back(code(p.w_y, p.b_y, inst.y.row(i)));
  auto mean_sq = [&](const std::vector<IndexPair>& ps) {
    double s = 0.0;
    for (const auto& [i, j] : ps) {
      s += (pooled[static_cast<std::size_t>(i)] - pooled[static_cast<std::size_t>(j)]).squaredNorm();
    }
    return s / (2.0 * static_cast<double>(ps.size()));
  };
  const double margin = cfg.use_margin ? mean_sq(inst.pairs.same_pairs) - mean_sq(inst.pairs.diff_pairs) : 0.0;
  return cfg.lambda * (recon(p.w_x, p.b_x, p.c_x, inst.x) + recon(p.w_y, p.b_y, p.c_y, inst.y)) +
         margin + cfg.gamma * 0.5 * (p.w_x.squaredNorm() + p.w_y.squaredNorm());
}

ObjectiveConfig no_corruption(double lambda, double gamma) {
  ObjectiveConfig cfg;
  cfg.lambda = lambda;
  cfg.gamma = gamma;
  cfg.corruption.rate = 0.0;
  return cfg;
}

}  // namespace

TEST(Objective, ValueMatchesNaiveLoopsWithoutCorruption) {
  const Instance inst = make_instance(1);
  for (double lambda : {0.0, 0.2, 1.5}) {
    const ObjectiveConfig cfg = no_corruption(lambda, 1e-3);
    const auto eval = evaluate(inst.params, inst.x, inst.y, inst.pairs, cfg);
    EXPECT_NEAR(eval.value, naive_value(inst, cfg), 1e-12) << lambda;
  }
  ObjectiveConfig off = no_corruption(0.3, 0.0);
  off.use_margin = false;
  EXPECT_NEAR(evaluate(inst.params, inst.x, inst.y, inst.pairs, off).value, naive_value(inst, off),
              1e-12);
}

TEST(Objective, PartsRecombine) {
  const Instance inst = make_instance(2);
  ObjectiveConfig cfg;
  cfg.lambda = 0.7;
  cfg.gamma = 0.01;
  cfg.corruption.draws = 3;
  const auto e = evaluate(inst.params, inst.x, inst.y, inst.pairs, cfg);
  EXPECT_NEAR(e.value,
              0.7 * (e.parts.recon_x + e.parts.recon_y) + e.parts.g1 - e.parts.g2 +
                  0.01 * e.parts.ridge,
              1e-12);
  EXPECT_NEAR(e.parts.ridge,
              0.5 * inst.params.w_x.squaredNorm() + 0.5 * inst.params.w_y.squaredNorm(), 1e-12);
}

TEST(Objective, MarginOnlyEqualsMarginTermsOfCleanCodes) {
  const Instance inst = make_instance(3);
  ObjectiveConfig cfg = no_corruption(0.0, 0.0);
  const auto e = evaluate(inst.params, inst.x, inst.y, inst.pairs, cfg);
  const Matrix pooled = pooled_rows(encode(inst.params, inst.x, View::x),
                                    encode(inst.params, inst.y, View::y));
  const auto m = margin_terms(pooled, inst.pairs);
  EXPECT_NEAR(e.value, m.g1 - m.g2, 1e-12);
  // Decoder biases do not enter the margin.
  const LayerParams g = unflatten(e.gradient, inst.params);
  EXPECT_EQ(g.c_x.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g.c_y.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Objective, ReconstructionOnlyDecouplesViews) {
  Instance inst = make_instance(4);
  ObjectiveConfig cfg;
  cfg.use_margin = false;
  const auto base = evaluate(inst.params, inst.x, inst.y, inst.pairs, cfg);
  EXPECT_EQ(base.parts.g1, 0.0);
  EXPECT_EQ(base.parts.g2, 0.0);
  // Changing view y parameters leaves the view x gradient untouched.
  LayerParams changed = inst.params;
  changed.w_y *= 1.5;
  const auto other = evaluate(changed, inst.x, inst.y, inst.pairs, cfg);
  const LayerParams ga = unflatten(base.gradient, inst.params);
  const LayerParams gb = unflatten(other.gradient, inst.params);
  EXPECT_EQ(ga.w_x, gb.w_x);
  EXPECT_EQ(ga.b_x, gb.b_x);
  EXPECT_NE(ga.w_y, gb.w_y);
}

struct GradCase {
  const char* name;
  double lambda;
  double gamma;
  double gain;
  CorruptionKind kind;
  double rate;
  int draws;
  bool margin;
};

class GradientFiniteDifference : public ::testing::TestWithParam<GradCase> {};

TEST_P(GradientFiniteDifference, CentralDifferencesAgree) {
  const GradCase c = GetParam();
  Instance inst = make_instance(10);
  inst.params.gain = c.gain;
  ObjectiveConfig cfg;
  cfg.lambda = c.lambda;
  cfg.gamma = c.gamma;
  cfg.corruption.kind = c.kind;
  cfg.corruption.rate = c.rate;
  cfg.corruption.draws = c.draws;
  cfg.corruption.seed = 5;
  cfg.use_margin = c.margin;
  const LayerObjective obj(inst.x, inst.y, inst.pairs, cfg);
  const auto report = grad_check(obj, inst.params, 1e-5);
  EXPECT_LT(report.max_rel_err, 1e-7) << c.name << " worst coordinate " << report.worst_coordinate;
}

INSTANTIATE_TEST_SUITE_P(
    Configurations, GradientFiniteDifference,
    ::testing::Values(GradCase{"default", 0.2, 1e-4, 1.0, CorruptionKind::mask_zero, 0.1, 1, true},
                      GradCase{"margin_only", 0.0, 0.0, 1.0, CorruptionKind::mask_zero, 0.1, 1, true},
                      GradCase{"recon_only", 1.0, 0.0, 1.0, CorruptionKind::mask_zero, 0.3, 1, false},
                      GradCase{"gaussian_draws", 0.5, 1e-2, 1.0, CorruptionKind::gaussian, 0.2, 3, true},
                      GradCase{"gain_two", 0.2, 1e-4, 2.0, CorruptionKind::mask_zero, 0.1, 2, true}),
    [](const auto& info) { return std::string(info.param.name); });

TEST(GradCheck, PlantedBugIsDetected) {
  const Instance inst = make_instance(11);
  const LayerObjective obj(inst.x, inst.y, inst.pairs, ObjectiveConfig{});
  const auto clean = grad_check(obj, inst.params, 1e-5);
  EXPECT_LT(clean.max_rel_err, 1e-5);
  const auto bugged = grad_check(obj, inst.params, 1e-5, [](Vector& g) { g(3) += 0.01; });
  EXPECT_GT(bugged.max_rel_err, 1e-5);
  EXPECT_EQ(bugged.worst_coordinate, 3);
  EXPECT_THROW(grad_check(obj, inst.params, 0.0), std::invalid_argument);
}

TEST(Objective, DeterministicGivenCorruptionSeed) {
  const Instance inst = make_instance(12);
  ObjectiveConfig cfg;
  cfg.corruption.seed = 99;
  cfg.corruption.draws = 2;
  const auto a = evaluate(inst.params, inst.x, inst.y, inst.pairs, cfg);
  const auto b = evaluate(inst.params, inst.x, inst.y, inst.pairs, cfg);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.gradient, b.gradient);
  cfg.corruption.seed = 100;
  EXPECT_NE(evaluate(inst.params, inst.x, inst.y, inst.pairs, cfg).value, a.value);
}

TEST(Objective, ViewsGetDistinctCorruptionMasks) {
  const Matrix ones = Matrix::Ones(20, 10);
  PairSets pairs;
  ObjectiveConfig cfg;
  cfg.use_margin = false;
  const LayerObjective obj(ones, ones, pairs, cfg);
  EXPECT_NE(obj.corrupted(View::x).front(), obj.corrupted(View::y).front());
}

TEST(Objective, Errors) {
  const Instance inst = make_instance(13);
  ObjectiveConfig cfg;
  EXPECT_THROW(LayerObjective(inst.x, random_matrix(12, 6, 1), inst.pairs, cfg), DimensionError);
  PairSets bad = inst.pairs;
  bad.same_pairs.push_back({0, 24});
  EXPECT_THROW(LayerObjective(inst.x, inst.y, bad, cfg), DimensionError);
  PairSets empty;
  EXPECT_THROW(LayerObjective(inst.x, inst.y, empty, cfg), DegenerateDataError);
  cfg.lambda = -1.0;
  EXPECT_THROW(LayerObjective(inst.x, inst.y, inst.pairs, cfg), std::invalid_argument);
  const LayerObjective ok(inst.x, inst.y, inst.pairs, ObjectiveConfig{});
  EXPECT_THROW(ok.evaluate(init_params(6, 5, 1.0, 1)), DimensionError);
}
