#ifndef DCAN_OBJECTIVE_HPP
#define DCAN_OBJECTIVE_HPP

#include "dcan/common.hpp"
#include "dcan/coupled_layer.hpp"
#include "dcan/dataset.hpp"
#include "dcan/pair_graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace dcan {

struct ObjectiveConfig {
  double lambda = 0.2;   // reconstruction weight
  double gamma = 1e-4;   // weight decay
  CorruptionSpec corruption;
  /// When false the margin term (g1 - g2) is dropped, leaving a pair of
  /// independent denoising auto-encoders.
  bool use_margin = true;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw std::invalid_argument("objective lambda must be finite and >= 0");
    }
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
      throw std::invalid_argument("objective gamma must be finite and >= 0");
    }
    corruption.validate();
  }
};

struct ObjectiveParts {
  double recon_x = 0.0;
  double recon_y = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
  double ridge = 0.0;
};

struct ObjectiveEvaluation {
  double value = 0.0;
  Vector gradient;  // flatten() order
  ObjectiveParts parts;
};

/// Layer training objective
///   lambda * (recon_x + recon_y) + (g1 - g2) + gamma * ridge
/// with recon_v = mean over corruption draws of sum_i 0.5 ||decode(encode(corrupt(v_i))) - v_i||^2,
/// g1/g2 on the clean-input hidden codes of both views pooled, and
/// ridge = 0.5 ||W_x||^2 + 0.5 ||W_y||^2.
///
/// Corruption draws are sampled once at construction so that repeated
/// evaluations see the same objective.
class LayerObjective {
 public:
  LayerObjective(Matrix x, Matrix y, PairSets pairs, ObjectiveConfig cfg)
      : x_(std::move(x)), y_(std::move(y)), pairs_(std::move(pairs)), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (x_.rows() != y_.rows() || x_.cols() != y_.cols()) {
      throw DimensionError(detail::concat("objective: view shapes differ (", detail::shape(x_),
                                          " vs ", detail::shape(y_), ")"));
    }
    const Index pooled = 2 * x_.rows();
    auto check = [pooled](const std::vector<IndexPair>& ps) {
      for (const auto& [i, j] : ps) {
        if (i < 0 || j < 0 || i >= pooled || j >= pooled || i == j) {
          throw DimensionError(detail::concat("objective: pair (", i, ",", j,
                                              ") invalid for ", pooled, " pooled rows"));
        }
      }
    };
    check(pairs_.same_pairs);
    check(pairs_.diff_pairs);
    if (cfg_.use_margin && (pairs_.same_pairs.empty() || pairs_.diff_pairs.empty())) {
      throw DegenerateDataError("objective: empty pair set");
    }

    CorruptionSpec spec_y = cfg_.corruption;
    spec_y.seed = detail::mix_seed(cfg_.corruption.seed, 0x5EED);
    for (int c = 0; c < cfg_.corruption.draws; ++c) {
      corrupted_x_.push_back(corrupt(x_, cfg_.corruption, c));
      corrupted_y_.push_back(corrupt(y_, spec_y, c));
    }
  }

  const Matrix& x() const { return x_; }
  const Matrix& y() const { return y_; }
  const PairSets& pairs() const { return pairs_; }
  const ObjectiveConfig& config() const { return cfg_; }
  const std::vector<Matrix>& corrupted(View v) const {
    return v == View::x ? corrupted_x_ : corrupted_y_;
  }

  ObjectiveEvaluation evaluate(const LayerParams& p) const {
    p.validate();
    if (p.input_dim() != x_.cols()) {
      throw DimensionError(detail::concat("objective: layer input width ", p.input_dim(),
                                          " but data has ", x_.cols(), " columns"));
    }
    const double a = p.gain;
    const double draws = static_cast<double>(cfg_.corruption.draws);

    Matrix grad_w_x = cfg_.gamma * p.w_x;
    Matrix grad_w_y = cfg_.gamma * p.w_y;
    Vector grad_b_x = Vector::Zero(p.hidden_dim());
    Vector grad_b_y = Vector::Zero(p.hidden_dim());
    Vector grad_c_x = Vector::Zero(p.input_dim());
    Vector grad_c_y = Vector::Zero(p.input_dim());

    ObjectiveParts parts;
    parts.ridge = 0.5 * p.w_x.squaredNorm() + 0.5 * p.w_y.squaredNorm();

    // Reconstruction path: corrupted encode, tied-weight decode, clean target.
    auto reconstruction = [&](View v, const Matrix& clean, const std::vector<Matrix>& noisy,
                              Matrix& gw, Vector& gb, Vector& gc) {
      const Matrix& w = p.weights(v);
      double total = 0.0;
      for (const Matrix& input : noisy) {
        const Matrix hidden = encode(p, input, v);
        const Matrix recon = decode(p, hidden, v);
        const Matrix residual = recon - clean;
        total += 0.5 * residual.squaredNorm();
        if (cfg_.lambda == 0.0) continue;
        const Matrix d_out =
            ((cfg_.lambda / draws) * residual).cwiseProduct(activate_derivative_from_output(recon, a));
        gw.noalias() += hidden.transpose() * d_out;
        gc += d_out.colwise().sum().transpose();
        const Matrix d_hidden =
            (d_out * w.transpose()).cwiseProduct(activate_derivative_from_output(hidden, a));
        gw.noalias() += d_hidden.transpose() * input;
        gb += d_hidden.colwise().sum().transpose();
      }
      return total / draws;
    };
    parts.recon_x = reconstruction(View::x, x_, corrupted_x_, grad_w_x, grad_b_x, grad_c_x);
    parts.recon_y = reconstruction(View::y, y_, corrupted_y_, grad_w_y, grad_b_y, grad_c_y);

    // Margin path on clean inputs.
    if (cfg_.use_margin) {
      const Index n = x_.rows();
      const Matrix hidden_x = encode(p, x_, View::x);
      const Matrix hidden_y = encode(p, y_, View::y);
      const Matrix pooled = pooled_rows(hidden_x, hidden_y);
      const auto terms = margin_terms(pooled, pairs_);
      parts.g1 = terms.g1;
      parts.g2 = terms.g2;

      Matrix d_pooled = Matrix::Zero(pooled.rows(), pooled.cols());
      auto accumulate = [&](const std::vector<IndexPair>& ps, double weight) {
        for (const auto& [i, j] : ps) {
          const RowVector diff = weight * (pooled.row(i) - pooled.row(j));
          d_pooled.row(i) += diff;
          d_pooled.row(j) -= diff;
        }
      };
      accumulate(pairs_.same_pairs, 1.0 / static_cast<double>(pairs_.n1()));
      accumulate(pairs_.diff_pairs, -1.0 / static_cast<double>(pairs_.n2()));

      const Matrix d_x =
          d_pooled.topRows(n).cwiseProduct(activate_derivative_from_output(hidden_x, a));
      const Matrix d_y =
          d_pooled.bottomRows(n).cwiseProduct(activate_derivative_from_output(hidden_y, a));
      grad_w_x.noalias() += d_x.transpose() * x_;
      grad_w_y.noalias() += d_y.transpose() * y_;
      grad_b_x += d_x.colwise().sum().transpose();
      grad_b_y += d_y.colwise().sum().transpose();
    }

    ObjectiveEvaluation eval;
    eval.parts = parts;
    eval.value = cfg_.lambda * (parts.recon_x + parts.recon_y) + (parts.g1 - parts.g2) +
                 cfg_.gamma * parts.ridge;
    LayerParams g = p;
    g.w_x = std::move(grad_w_x);
    g.w_y = std::move(grad_w_y);
    g.b_x = std::move(grad_b_x);
    g.b_y = std::move(grad_b_y);
    g.c_x = std::move(grad_c_x);
    g.c_y = std::move(grad_c_y);
    eval.gradient = flatten(g);
    if (!std::isfinite(eval.value) || !eval.gradient.allFinite()) {
      throw DivergedError("objective: non-finite value or gradient (diverged parameters)");
    }
    return eval;
  }

  /// Value only, on flat parameters shaped like `shape_like`.
  double value(const Vector& flat, const LayerParams& shape_like) const {
    return evaluate(unflatten(flat, shape_like)).value;
  }

 private:
  Matrix x_;
  Matrix y_;
  PairSets pairs_;
  ObjectiveConfig cfg_;
  std::vector<Matrix> corrupted_x_;
  std::vector<Matrix> corrupted_y_;
};

inline ObjectiveEvaluation evaluate(const LayerParams& params, const Matrix& x, const Matrix& y,
                                    const PairSets& pairs, const ObjectiveConfig& cfg) {
  return LayerObjective(x, y, pairs, cfg).evaluate(params);
}

struct GradCheckReport {
  double max_rel_err = 0.0;
  Index worst_coordinate = 0;
  double step = 0.0;
};

/// Lets tests tamper with the analytic gradient before comparison.
using GradientHook = std::function<void(Vector&)>;

/// Central differences on every coordinate;
/// rel_err = |g_a - g_fd| / max(1, |g_a|, |g_fd|).
inline GradCheckReport grad_check(const LayerObjective& objective, const LayerParams& params,
                                  double step, const GradientHook& hook = {}) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be > 0");
  Vector analytic = objective.evaluate(params).gradient;
  if (hook) hook(analytic);
  Vector flat = flatten(params);
  GradCheckReport report;
  report.step = step;
  report.max_rel_err = -1.0;
  for (Index i = 0; i < flat.size(); ++i) {
    const double saved = flat(i);
    flat(i) = saved + step;
    const double up = objective.value(flat, params);
    flat(i) = saved - step;
    const double down = objective.value(flat, params);
    flat(i) = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double err = std::abs(analytic(i) - numeric) /
                       std::max({1.0, std::abs(analytic(i)), std::abs(numeric)});
    if (err > report.max_rel_err) {
      report.max_rel_err = err;
      report.worst_coordinate = i;
    }
  }
  if (report.max_rel_err < 0.0) report.max_rel_err = 0.0;
  return report;
}

inline GradCheckReport grad_check(const LayerParams& params, const Matrix& x, const Matrix& y,
                                  const PairSets& pairs, const ObjectiveConfig& cfg, double step) {
  return grad_check(LayerObjective(x, y, pairs, cfg), params, step);
}

}  // namespace dcan

#endif  // DCAN_OBJECTIVE_HPP
