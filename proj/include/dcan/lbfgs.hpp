#ifndef DCAN_LBFGS_HPP
#define DCAN_LBFGS_HPP

#include "dcan/common.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dcan {

struct LbfgsConfig {
  int memory = 10;
  int max_iters = 400;
  double grad_tol = 1e-5;  // sup-norm
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 25;

  void validate() const {
    if (memory < 1) throw std::invalid_argument("lbfgs memory must be >= 1");
    if (max_iters < 0) throw std::invalid_argument("lbfgs max_iters must be >= 0");
    if (!(grad_tol >= 0.0)) throw std::invalid_argument("lbfgs grad_tol must be >= 0");
    if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) {
      throw std::invalid_argument("lbfgs requires 0 < c1 < c2 < 1");
    }
    if (max_line_search < 1) throw std::invalid_argument("lbfgs max_line_search must be >= 1");
  }
};

enum class OptimStatus { converged, max_iters, line_search_failed };

inline const char* to_string(OptimStatus s) {
  switch (s) {
    case OptimStatus::converged: return "converged";
    case OptimStatus::max_iters: return "max_iters";
    case OptimStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

struct OptimResult {
  Vector solution;
  double final_value = 0.0;
  double final_grad_norm = 0.0;  // sup-norm
  int iterations = 0;
  OptimStatus status = OptimStatus::max_iters;
};

/// One accepted step. Iteration 0 records the starting point with step 0.
struct IterationRecord {
  int iter = 0;
  double value = 0.0;
  double grad_norm = 0.0;
  double step_length = 0.0;
  double directional_derivative = 0.0;  // g^T d at the start of the step
  double previous_value = 0.0;
  double alpha = 0.0;  // accepted line-search multiplier
};

/// f(x, grad) returns the value and writes the gradient.
using Objective = std::function<double(const Vector&, Vector&)>;
using IterationCallback = std::function<void(const IterationRecord&)>;

inline void write_trace_header(std::ostream& out) { out << "iter,f,grad_norm,step_len\n"; }

inline void write_trace_row(std::ostream& out, const IterationRecord& r) {
  out << r.iter << ',' << detail::format_double(r.value) << ','
      << detail::format_double(r.grad_norm) << ',' << detail::format_double(r.step_length) << '\n';
}

namespace detail {

/// Minimizer of the cubic interpolating (a, fa, ga) and (b, fb, gb), or NaN.
inline double cubic_minimizer(double a, double fa, double ga, double b, double fb, double gb) {
  const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - ga * gb;
  if (!(disc >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double denom = gb - ga + 2.0 * d2;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return b - (b - a) * (gb + d2 - d1) / denom;
}

struct LinePoint {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;  // derivative along the search direction
};

struct LineSearchOutcome {
  bool ok = false;
  double alpha = 0.0;
  double value = 0.0;
  Vector x;
  Vector grad;
};

/// Strong-Wolfe line search: bracketing phase followed by a cubic-interpolation
/// zoom. Every objective evaluation counts toward `max_trials`.
inline LineSearchOutcome strong_wolfe_search(const Objective& f, const Vector& x,
                                             double value0, const Vector& dir, double slope0,
                                             double alpha_init, const LbfgsConfig& cfg) {
  LineSearchOutcome out;
  int trials = 0;
  Vector trial_grad(x.size());

  auto probe = [&](double alpha, LinePoint& pt, Vector& xt) -> bool {
    ++trials;
    xt = x + alpha * dir;
    pt.alpha = alpha;
    pt.value = f(xt, trial_grad);
    if (!std::isfinite(pt.value) || !trial_grad.allFinite()) return false;
    pt.slope = trial_grad.dot(dir);
    return true;
  };
  auto accept = [&](const LinePoint& pt, const Vector& xt) {
    out.ok = true;
    out.alpha = pt.alpha;
    out.value = pt.value;
    out.x = xt;
    out.grad = trial_grad;
  };
  auto armijo = [&](const LinePoint& pt) {
    return pt.value <= value0 + cfg.c1 * pt.alpha * slope0;
  };
  auto curvature = [&](const LinePoint& pt) { return std::abs(pt.slope) <= -cfg.c2 * slope0; };

  auto zoom = [&](LinePoint lo, LinePoint hi) {
    Vector xt;
    while (trials < cfg.max_line_search) {
      const double left = std::min(lo.alpha, hi.alpha);
      const double right = std::max(lo.alpha, hi.alpha);
      const double width = right - left;
      if (width <= std::numeric_limits<double>::epsilon() * std::max(1.0, right)) return;
      double alpha = cubic_minimizer(lo.alpha, lo.value, lo.slope, hi.alpha, hi.value, hi.slope);
      if (!std::isfinite(alpha) || alpha < left + 0.1 * width || alpha > right - 0.1 * width) {
        alpha = 0.5 * (left + right);
      }
      LinePoint pt;
      if (!probe(alpha, pt, xt)) return;
      if (!armijo(pt) || pt.value >= lo.value) {
        hi = pt;
      } else {
        if (curvature(pt)) {
          accept(pt, xt);
          return;
        }
        if (pt.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = pt;
      }
    }
  };

  LinePoint prev{0.0, value0, slope0};
  double alpha = alpha_init;
  Vector xt;
  for (int i = 0; trials < cfg.max_line_search; ++i) {
    LinePoint pt;
    if (!probe(alpha, pt, xt)) return out;
    if (!armijo(pt) || (i > 0 && pt.value >= prev.value)) {
      zoom(prev, pt);
      return out;
    }
    if (curvature(pt)) {
      accept(pt, xt);
      return out;
    }
    if (pt.slope >= 0.0) {
      zoom(pt, prev);
      return out;
    }
    prev = pt;
    alpha *= 2.0;
  }
  return out;
}

}  // namespace detail

/// Limited-memory BFGS with a strong-Wolfe line search. Accepted iterates are
/// monotonically non-increasing in value. Curvature pairs with
/// s^T y <= 1e-10 ||s|| ||y|| are skipped.
inline OptimResult minimize(const Objective& f, const Vector& x0, const LbfgsConfig& cfg,
                            const IterationCallback& on_iteration = {}) {
  cfg.validate();
  OptimResult result;
  Vector x = x0;
  Vector grad(x.size());
  double value = f(x, grad);
  if (!std::isfinite(value) || !grad.allFinite()) {
    throw DivergedError("lbfgs: objective is not finite at the starting point");
  }
  auto sup_norm = [](const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; };

  std::deque<Vector> s_hist;
  std::deque<Vector> y_hist;
  std::deque<double> rho_hist;
  double h0_scale = 1.0;

  if (on_iteration) on_iteration({0, value, sup_norm(grad), 0.0, 0.0, value, 0.0});

  result.status = OptimStatus::max_iters;
  int iter = 0;
  while (true) {
    const double gnorm = sup_norm(grad);
    if (gnorm <= cfg.grad_tol) {
      result.status = OptimStatus::converged;
      break;
    }
    if (iter >= cfg.max_iters) {
      result.status = OptimStatus::max_iters;
      break;
    }

    // Two-loop recursion.
    Vector dir = -grad;
    const auto m = s_hist.size();
    std::vector<double> alphas(m);
    for (std::size_t k = m; k-- > 0;) {
      alphas[k] = rho_hist[k] * s_hist[k].dot(dir);
      dir -= alphas[k] * y_hist[k];
    }
    dir *= h0_scale;
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(dir);
      dir += (alphas[k] - beta) * s_hist[k];
    }
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      // Lost descent; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      h0_scale = 1.0;
      dir = -grad;
      slope = grad.dot(dir);
    }
    const double alpha0 = m == 0 ? std::min(1.0, 1.0 / dir.norm()) : 1.0;
    auto ls = detail::strong_wolfe_search(f, x, value, dir, slope, alpha0, cfg);
    if (!ls.ok) {
      result.status = OptimStatus::line_search_failed;
      break;
    }

    Vector s = ls.x - x;
    Vector yv = ls.grad - grad;
    const double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      if (static_cast<int>(s_hist.size()) == cfg.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      h0_scale = sy / yv.squaredNorm();
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
    }
    const double previous = value;
    x = std::move(ls.x);
    grad = std::move(ls.grad);
    value = ls.value;
    ++iter;
    if (on_iteration) {
      on_iteration(
          {iter, value, sup_norm(grad), ls.alpha * dir.norm(), slope, previous, ls.alpha});
    }
  }

  result.solution = std::move(x);
  result.final_value = value;
  result.final_grad_norm = sup_norm(grad);
  result.iterations = iter;
  return result;
}

}  // namespace dcan

#endif  // DCAN_LBFGS_HPP
