#ifndef DCAN_PAIR_GRAPH_HPP
#define DCAN_PAIR_GRAPH_HPP

#include "dcan/common.hpp"

#include <algorithm>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dcan {

/// Unordered index pair into the pooled sample list, stored with first < second.
using IndexPair = std::pair<Index, Index>;

/// Same-class pairs S and kNN different-class pairs D over the pooled samples
/// (rows of view x followed by rows of view y).
struct PairSets {
  std::vector<IndexPair> same_pairs;
  std::vector<IndexPair> diff_pairs;
  int k = 0;
  std::vector<std::string> warnings;

  std::size_t n1() const { return same_pairs.size(); }
  std::size_t n2() const { return diff_pairs.size(); }
};

/// Labels of view x rows followed by the same labels for view y rows.
inline Labels pooled_labels(const Labels& labels) {
  Labels out = labels;
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

inline Matrix pooled_rows(const Matrix& x, const Matrix& y) {
  Matrix out(x.rows() + y.rows(), x.cols());
  out << x, y;
  return out;
}

/// Every unordered pair of pooled samples that shares a label.
inline std::vector<IndexPair> build_same_pairs(const Labels& labels) {
  if (labels.size() < 2) throw std::invalid_argument("build_same_pairs needs >= 2 samples");
  std::vector<IndexPair> pairs;
  const auto n = static_cast<Index>(labels.size());
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
        pairs.emplace_back(i, j);
      }
    }
  }
  return pairs;
}

struct DiffPairsResult {
  std::vector<IndexPair> pairs;
  int effective_k = 0;
  std::vector<std::string> warnings;
};

/// Union over samples i of (i, j) for the k Euclidean-nearest j with a
/// different label. Ties go to the lower index. If some sample has fewer than
/// k foreign-label samples, k is clamped for it and a warning is recorded.
inline DiffPairsResult build_diff_pairs(const Matrix& features, const Labels& labels, int k) {
  const Index n = features.rows();
  if (static_cast<Index>(labels.size()) != n) {
    throw DimensionError(detail::concat("build_diff_pairs: ", labels.size(), " labels for ", n,
                                        " rows"));
  }
  if (k < 1) throw std::invalid_argument("build_diff_pairs: k must be >= 1");
  {
    auto sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty() || sorted.front() == sorted.back()) {
      throw DegenerateDataError("build_diff_pairs: need at least 2 classes");
    }
  }

  DiffPairsResult result;
  result.effective_k = k;
  std::vector<std::pair<double, Index>> candidates;
  candidates.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    candidates.clear();
    const int li = labels[static_cast<std::size_t>(i)];
    for (Index j = 0; j < n; ++j) {
      if (labels[static_cast<std::size_t>(j)] == li) continue;
      candidates.emplace_back((features.row(i) - features.row(j)).squaredNorm(), j);
    }
    auto take = static_cast<std::size_t>(k);
    if (candidates.size() < take) {
      take = candidates.size();
      result.effective_k = std::min(result.effective_k, static_cast<int>(take));
    }
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                      candidates.end());
    for (std::size_t t = 0; t < take; ++t) {
      const Index j = candidates[t].second;
      result.pairs.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  if (result.effective_k < k) {
    result.warnings.push_back(detail::concat("k=", k, " exceeds available different-label samples;",
                                             " clamped to ", result.effective_k));
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  result.pairs.erase(std::unique(result.pairs.begin(), result.pairs.end()), result.pairs.end());
  return result;
}

/// Builds S and D for pooled features (2n rows) with matching pooled labels.
inline PairSets build_pair_sets(const Matrix& pooled_features, const Labels& pooled,
                                int k) {
  PairSets sets;
  sets.same_pairs = build_same_pairs(pooled);
  auto diff = build_diff_pairs(pooled_features, pooled, k);
  sets.diff_pairs = std::move(diff.pairs);
  sets.k = diff.effective_k;
  sets.warnings = std::move(diff.warnings);
  if (sets.same_pairs.empty()) {
    throw DegenerateDataError("pair sets: no same-class pairs");
  }
  return sets;
}

struct MarginTerms {
  double g1 = 0.0;  // intra-class compactness
  double g2 = 0.0;  // kNN inter-class separation
};

inline double mean_pair_distance(const Matrix& hidden, const std::vector<IndexPair>& pairs) {
  double sum = 0.0;
  for (const auto& [i, j] : pairs) sum += (hidden.row(i) - hidden.row(j)).squaredNorm();
  return sum / (2.0 * static_cast<double>(pairs.size()));
}

/// g1 = sum_S ||h_i - h_j||^2 / (2 n1), g2 = sum_D ||h_i - h_j||^2 / (2 n2).
inline MarginTerms margin_terms(const Matrix& hidden, const PairSets& pairs) {
  if (pairs.same_pairs.empty() || pairs.diff_pairs.empty()) {
    throw DegenerateDataError("margin_terms: empty pair set");
  }
  const Index n = hidden.rows();
  auto check = [n](const std::vector<IndexPair>& ps) {
    for (const auto& [i, j] : ps) {
      if (i < 0 || j < 0 || i >= n || j >= n) {
        throw DimensionError(detail::concat("pair (", i, ",", j, ") outside ", n, " rows"));
      }
    }
  };
  check(pairs.same_pairs);
  check(pairs.diff_pairs);
  return {mean_pair_distance(hidden, pairs.same_pairs),
          mean_pair_distance(hidden, pairs.diff_pairs)};
}

/// Debug dump: `i,j,kind` with kind in {same, diff}.
inline void write_pairs_csv(std::ostream& out, const PairSets& pairs) {
  out << "i,j,kind\n";
  for (const auto& [i, j] : pairs.same_pairs) out << i << ',' << j << ",same\n";
  for (const auto& [i, j] : pairs.diff_pairs) out << i << ',' << j << ",diff\n";
}

}  // namespace dcan

#endif  // DCAN_PAIR_GRAPH_HPP
