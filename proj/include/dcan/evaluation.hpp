#ifndef DCAN_EVALUATION_HPP
#define DCAN_EVALUATION_HPP

#include "dcan/common.hpp"
#include "dcan/dataset.hpp"
#include "dcan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace dcan {

enum class Metric { cosine, euclidean };

inline const char* to_string(Metric m) { return m == Metric::cosine ? "cosine" : "euclidean"; }

inline Metric parse_metric(const std::string& s) {
  if (s == "cosine") return Metric::cosine;
  if (s == "euclidean") return Metric::euclidean;
  throw ConfigError(detail::concat("unknown metric '", s, "' (expected cosine or euclidean)"));
}

/// Index of the gallery row nearest to `probe`; lower index wins ties.
/// Returns -1 when no gallery row can match (zero probe under cosine).
inline Index nearest_gallery_row(const Matrix& gallery, const RowVector& probe, Metric metric) {
  Index best = -1;
  if (metric == Metric::euclidean) {
    double best_d = std::numeric_limits<double>::infinity();
    for (Index g = 0; g < gallery.rows(); ++g) {
      const double d = (gallery.row(g) - probe).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = g;
      }
    }
    return best;
  }
  const double pn = probe.norm();
  if (!(pn > 0.0)) return -1;
  double best_s = -std::numeric_limits<double>::infinity();
  for (Index g = 0; g < gallery.rows(); ++g) {
    const double gn = gallery.row(g).norm();
    if (!(gn > 0.0)) continue;
    const double s = gallery.row(g).dot(probe) / (gn * pn);
    if (s > best_s) {
      best_s = s;
      best = g;
    }
  }
  return best;
}

/// Fraction of probes whose nearest gallery row carries the probe's label.
inline double rank1(const Matrix& gallery, const Labels& gallery_labels, const Matrix& probe,
                    const Labels& probe_labels, Metric metric,
                    std::map<int, int>* per_class_hits = nullptr) {
  if (gallery.rows() == 0) throw std::invalid_argument("rank1: empty gallery");
  if (probe.rows() == 0) throw std::invalid_argument("rank1: empty probe set");
  if (gallery.cols() != probe.cols()) {
    throw DimensionError(detail::concat("rank1: gallery width ", gallery.cols(),
                                        " differs from probe width ", probe.cols()));
  }
  if (static_cast<Index>(gallery_labels.size()) != gallery.rows() ||
      static_cast<Index>(probe_labels.size()) != probe.rows()) {
    throw DimensionError("rank1: label count does not match rows");
  }
  std::size_t hits = 0;
  for (Index p = 0; p < probe.rows(); ++p) {
    const Index g = nearest_gallery_row(gallery, probe.row(p), metric);
    const int truth = probe_labels[static_cast<std::size_t>(p)];
    if (g >= 0 && gallery_labels[static_cast<std::size_t>(g)] == truth) {
      ++hits;
      if (per_class_hits) ++(*per_class_hits)[truth];
    }
  }
  return static_cast<double>(hits) / static_cast<double>(probe.rows());
}

struct EvalReport {
  double accuracy_xy = 0.0;  // gallery view x, probe view y
  double accuracy_yx = 0.0;  // gallery view y, probe view x
  double mean_accuracy = 0.0;
  std::map<int, int> per_class_hits;  // summed over both directions
};

/// Both gallery/probe directions on already-embedded test features.
inline EvalReport cross_view_eval(const Matrix& embedded_x, const Matrix& embedded_y,
                                  const Labels& labels, Metric metric) {
  EvalReport report;
  report.accuracy_xy =
      rank1(embedded_x, labels, embedded_y, labels, metric, &report.per_class_hits);
  report.accuracy_yx =
      rank1(embedded_y, labels, embedded_x, labels, metric, &report.per_class_hits);
  report.mean_accuracy = 0.5 * (report.accuracy_xy + report.accuracy_yx);
  return report;
}

/// Embeds the test split of both views with the model and scores rank-1 in
/// both directions.
inline EvalReport cross_view_eval(const NetworkModel& model, const ViewDataset& data,
                                  Metric metric = Metric::cosine) {
  const ViewDataset test = data.subset(Split::test);
  if (test.size() == 0) throw DegenerateDataError("cross_view_eval: empty test split");
  return cross_view_eval(embed(model, test.view_x, View::x), embed(model, test.view_y, View::y),
                         test.labels, metric);
}

inline void write_eval_report(std::ostream& out, const EvalReport& r) {
  out << "direction,accuracy\n";
  out << "gallery_x_probe_y," << detail::format_double(r.accuracy_xy) << '\n';
  out << "gallery_y_probe_x," << detail::format_double(r.accuracy_yx) << '\n';
  out << "mean," << detail::format_double(r.mean_accuracy) << '\n';
}

/// Mean Euclidean distance between same-class cross-view pairs divided by the
/// mean over different-class cross-view pairs. Lower means better aligned views.
inline double gap_metric(const Matrix& embedded_x, const Matrix& embedded_y,
                         const Labels& labels) {
  if (embedded_x.rows() != embedded_y.rows() ||
      static_cast<Index>(labels.size()) != embedded_x.rows()) {
    throw DimensionError("gap_metric: row counts differ");
  }
  double intra = 0.0;
  double inter = 0.0;
  std::size_t n_intra = 0;
  std::size_t n_inter = 0;
  for (Index i = 0; i < embedded_x.rows(); ++i) {
    for (Index j = 0; j < embedded_y.rows(); ++j) {
      const double d = (embedded_x.row(i) - embedded_y.row(j)).norm();
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  }
  if (n_intra == 0 || n_inter == 0 || !(inter > 0.0)) {
    throw DegenerateDataError("gap_metric: needs >= 2 classes with separated samples");
  }
  return (intra / static_cast<double>(n_intra)) / (inter / static_cast<double>(n_inter));
}

namespace detail {

/// Indices of the k nearest rows to row i (excluding i), ascending by
/// distance, lower index first on ties.
inline std::vector<Index> knn_rows(const Matrix& m, Index i, Index k) {
  std::vector<std::pair<double, Index>> dist;
  dist.reserve(static_cast<std::size_t>(m.rows()));
  for (Index j = 0; j < m.rows(); ++j) {
    if (j != i) dist.emplace_back((m.row(i) - m.row(j)).squaredNorm(), j);
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  std::vector<Index> out(static_cast<std::size_t>(k));
  for (Index t = 0; t < k; ++t) out[static_cast<std::size_t>(t)] = dist[static_cast<std::size_t>(t)].second;
  return out;
}

}  // namespace detail

/// Entry k-1 is the fraction of samples whose k nearest neighbours in the
/// original space all remain among its k nearest neighbours after embedding.
inline std::vector<double> neighbor_preservation(const Matrix& original, const Matrix& embedded,
                                                 Index max_k) {
  const Index n = original.rows();
  if (embedded.rows() != n) throw DimensionError("neighbor_preservation: row counts differ");
  if (max_k < 1 || max_k >= n) {
    throw std::invalid_argument(detail::concat("neighbor_preservation: max_k=", max_k,
                                               " outside [1, ", n - 1, "]"));
  }
  std::vector<double> out(static_cast<std::size_t>(max_k), 0.0);
  for (Index i = 0; i < n; ++i) {
    const auto before = detail::knn_rows(original, i, max_k);
    const auto after = detail::knn_rows(embedded, i, max_k);
    for (Index k = 1; k <= max_k; ++k) {
      std::vector<Index> a(before.begin(), before.begin() + k);
      std::vector<Index> b(after.begin(), after.begin() + k);
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      if (std::includes(b.begin(), b.end(), a.begin(), a.end())) {
        out[static_cast<std::size_t>(k - 1)] += 1.0;
      }
    }
  }
  for (auto& v : out) v /= static_cast<double>(n);
  return out;
}

}  // namespace dcan

#endif  // DCAN_EVALUATION_HPP
