#ifndef DCAN_DATASET_HPP
#define DCAN_DATASET_HPP

#include "dcan/common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace dcan {

enum class Split : std::uint8_t { train, test };

inline const char* to_string(Split s) { return s == Split::train ? "train" : "test"; }

/// Paired two-view samples. Row i of view_x and row i of view_y show the same
/// subject and carry labels[i].
struct ViewDataset {
  Matrix view_x;
  Matrix view_y;
  Labels labels;
  std::vector<Split> split;

  Index size() const { return view_x.rows(); }
  Index dim() const { return view_x.cols(); }

  void validate() const {
    if (view_x.rows() != view_y.rows() || view_x.cols() != view_y.cols()) {
      throw DataError(detail::concat("view shape mismatch: view_x is ", detail::shape(view_x),
                                     ", view_y is ", detail::shape(view_y)));
    }
    if (static_cast<Index>(labels.size()) != view_x.rows()) {
      throw DataError(detail::concat("label count ", labels.size(), " does not match row count ",
                                     view_x.rows()));
    }
    if (static_cast<Index>(split.size()) != view_x.rows()) {
      throw DataError(detail::concat("split count ", split.size(), " does not match row count ",
                                     view_x.rows()));
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0) {
        throw DataError(detail::concat("negative class id ", labels[i], " at row ", i));
      }
    }
    check_finite(view_x, "view_x");
    check_finite(view_y, "view_y");
  }

  /// Rows carrying the given split tag, in original order.
  std::vector<Index> indices(Split s) const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < split.size(); ++i) {
      if (split[i] == s) out.push_back(static_cast<Index>(i));
    }
    return out;
  }

  ViewDataset subset(Split s) const {
    const auto idx = indices(s);
    ViewDataset out;
    out.view_x.resize(static_cast<Index>(idx.size()), dim());
    out.view_y.resize(static_cast<Index>(idx.size()), dim());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.view_x.row(static_cast<Index>(r)) = view_x.row(idx[r]);
      out.view_y.row(static_cast<Index>(r)) = view_y.row(idx[r]);
      out.labels.push_back(labels[static_cast<std::size_t>(idx[r])]);
      out.split.push_back(s);
    }
    return out;
  }

  std::set<int> classes(Split s) const {
    std::set<int> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (split[i] == s) out.insert(labels[i]);
    }
    return out;
  }

 private:
  static void check_finite(const Matrix& m, const char* name) {
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) {
        if (!std::isfinite(m(r, c))) {
          throw DataError(detail::concat("non-finite entry in ", name, " at (row ", r, ", col ", c,
                                         ")"));
        }
      }
    }
  }
};

enum class CorruptionKind { mask_zero, gaussian };

/// Corruption process for the denoising reconstruction term. For mask_zero,
/// rate is the per-entry drop probability; for gaussian it is the noise sigma.
struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::mask_zero;
  double rate = 0.1;
  int draws = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (draws < 1) throw std::invalid_argument("corruption draws must be >= 1");
    if (!std::isfinite(rate)) throw std::invalid_argument("corruption rate must be finite");
    if (kind == CorruptionKind::mask_zero && (rate < 0.0 || rate > 1.0)) {
      throw std::invalid_argument(detail::concat("mask rate ", rate, " outside [0,1]"));
    }
    if (kind == CorruptionKind::gaussian && rate < 0.0) {
      throw std::invalid_argument(detail::concat("gaussian sigma ", rate, " is negative"));
    }
  }
};

/// Deterministic corrupted copy of m for one draw of the corruption process.
/// Entries are visited in row-major order from a stream seeded by
/// (spec.seed, draw_index).
inline Matrix corrupt(const Matrix& m, const CorruptionSpec& spec, int draw_index) {
  spec.validate();
  if (draw_index < 0 || draw_index >= spec.draws) {
    throw std::invalid_argument(
        detail::concat("draw_index ", draw_index, " outside [0, ", spec.draws, ")"));
  }
  Matrix out = m;
  std::mt19937_64 rng(detail::mix_seed(spec.seed, static_cast<std::uint64_t>(draw_index)));
  if (spec.kind == CorruptionKind::mask_zero) {
    if (spec.rate <= 0.0) return out;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Index r = 0; r < out.rows(); ++r) {
      for (Index c = 0; c < out.cols(); ++c) {
        if (u(rng) < spec.rate) out(r, c) = 0.0;
      }
    }
  } else {
    if (spec.rate <= 0.0) return out;
    std::normal_distribution<double> n(0.0, spec.rate);
    for (Index r = 0; r < out.rows(); ++r) {
      for (Index c = 0; c < out.cols(); ++c) out(r, c) += n(rng);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV I/O

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(concat("cannot open '", path, "'"));
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(concat("cannot write '", path, "'"));
  return out;
}

}  // namespace detail

/// Reads a headerless CSV of reals, one sample per row.
inline Matrix read_csv_matrix(const std::string& path) {
  auto in = detail::open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    const auto row = line_no++;
    auto body = detail::trim(line);
    if (body.empty()) continue;
    std::vector<double> values;
    std::size_t col = 0;
    while (true) {
      const auto comma = body.find(',');
      const auto field = detail::trim(body.substr(0, comma));
      double v = 0.0;
      const auto* first = field.data();
      const auto* last = field.data() + field.size();
      if (!field.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (field.empty() || ec != std::errc() || ptr != last) {
        throw DataError(detail::concat(path, ": unparseable value '", field, "' at (row ", row,
                                       ", col ", col, ")"));
      }
      if (std::isnan(v)) {
        throw DataError(detail::concat(path, ": NaN entry at (row ", row, ", col ", col, ")"));
      }
      if (std::isinf(v)) {
        throw DataError(detail::concat(path, ": Inf entry at (row ", row, ", col ", col, ")"));
      }
      values.push_back(v);
      ++col;
      if (comma == std::string_view::npos) break;
      body.remove_prefix(comma + 1);
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw DataError(detail::concat(path, ": row ", row, " has ", values.size(),
                                     " columns, expected ", rows.front().size()));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DataError(detail::concat(path, ": no rows"));
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  return m;
}

inline void write_csv_matrix(std::ostream& out, const Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << detail::format_double(m(r, c));
    }
    out << '\n';
  }
}

inline void write_csv_matrix(const std::string& path, const Matrix& m) {
  auto out = detail::open_output(path);
  write_csv_matrix(out, m);
}

/// One non-negative integer class id per line.
inline Labels read_labels(const std::string& path) {
  auto in = detail::open_input(path);
  Labels labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    const auto row = line_no++;
    const auto field = detail::trim(line);
    if (field.empty()) continue;
    int v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || v < 0) {
      throw DataError(detail::concat(path, ": non-integer or negative label '", field,
                                     "' at row ", row));
    }
    labels.push_back(v);
  }
  return labels;
}

inline void write_labels(const std::string& path, const Labels& labels) {
  auto out = detail::open_output(path);
  for (int l : labels) out << l << '\n';
}

/// One tag per line: "train" or "test".
inline std::vector<Split> read_split(const std::string& path) {
  auto in = detail::open_input(path);
  std::vector<Split> split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    const auto row = line_no++;
    const auto field = detail::trim(line);
    if (field.empty()) continue;
    if (field == "train") {
      split.push_back(Split::train);
    } else if (field == "test") {
      split.push_back(Split::test);
    } else {
      throw DataError(detail::concat(path, ": unknown split tag '", field, "' at row ", row));
    }
  }
  return split;
}

inline void write_split(const std::string& path, const std::vector<Split>& split) {
  auto out = detail::open_output(path);
  for (auto s : split) out << to_string(s) << '\n';
}

/// Loads both views and labels; every row is tagged train.
inline ViewDataset load_dataset(const std::string& path_x, const std::string& path_y,
                                const std::string& path_labels) {
  ViewDataset ds;
  ds.view_x = read_csv_matrix(path_x);
  ds.view_y = read_csv_matrix(path_y);
  ds.labels = read_labels(path_labels);
  ds.split.assign(ds.labels.size(), Split::train);
  ds.validate();
  return ds;
}

inline ViewDataset load_dataset(const std::string& path_x, const std::string& path_y,
                                const std::string& path_labels, const std::string& path_split) {
  ViewDataset ds = load_dataset(path_x, path_y, path_labels);
  ds.split = read_split(path_split);
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------
// Synthetic two-view generator

struct SyntheticParams {
  int classes = 20;
  int per_class = 10;
  int ambient_dim = 50;
  std::uint64_t seed = 7;
  double noise_sigma = 0.05;
  /// RMS pre-activation of the view-2 tanh warp; larger values saturate more.
  double warp_gain = 1.5;
  /// Dimension of the subspace holding the class-center sphere; 0 means
  /// ambient_dim.
  int latent_dim = 6;
  /// View 2 copies the latent sample (no rotation, no warp). With zero noise
  /// both views coincide.
  bool identity_views = false;
  /// Std of per-sample jitter added to the latent coordinates before either
  /// view is formed, so samples vary along the class manifold.
  double latent_sigma = 0.0;
};

namespace detail {

inline Matrix random_orthogonal(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(d, d);
  for (Index c = 0; c < d; ++c) {
    for (Index r = 0; r < d; ++r) g(r, c) = n(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Fix the sign ambiguity so Q is Haar-distributed and reproducible.
  const Matrix rr = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index c = 0; c < d; ++c) {
    if (rr(c, c) < 0) q.col(c) = -q.col(c);
  }
  return q;
}

}  // namespace detail

/// Draws class centers on the unit sphere. View 1 is the latent sample plus
/// jitter; view 2 is a fixed random rotation of the latent sample passed
/// through an element-wise tanh warp, plus jitter. The first half of the class
/// ids form the train split, the rest the test split.
inline ViewDataset generate_synthetic(const SyntheticParams& p) {
  if (p.classes < 2) throw std::invalid_argument("synthetic classes must be >= 2");
  if (p.per_class < 2) throw std::invalid_argument("synthetic per_class must be >= 2");
  if (p.ambient_dim < 4) throw std::invalid_argument("synthetic ambient_dim must be >= 4");
  if (!(p.noise_sigma >= 0.0) || !std::isfinite(p.noise_sigma)) {
    throw std::invalid_argument("synthetic noise_sigma must be finite and >= 0");
  }
  if (p.latent_dim < 0 || p.latent_dim > p.ambient_dim || p.latent_dim == 1) {
    throw std::invalid_argument("synthetic latent_dim must be 0 or in [2, ambient_dim]");
  }
  if (!(p.latent_sigma >= 0.0) || !std::isfinite(p.latent_sigma)) {
    throw std::invalid_argument("synthetic latent_sigma must be finite and >= 0");
  }
  if (!(p.warp_gain > 0.0) || !std::isfinite(p.warp_gain)) {
    throw std::invalid_argument("synthetic warp_gain must be positive");
  }
  const Index d = p.ambient_dim;
  const Index n = static_cast<Index>(p.classes) * p.per_class;
  std::mt19937_64 rng(detail::mix_seed(p.seed));
  std::normal_distribution<double> normal(0.0, 1.0);

  const Matrix rotation = detail::random_orthogonal(d, rng);
  const Index latent_width = p.latent_dim == 0 ? d : p.latent_dim;
  Matrix centers = Matrix::Zero(p.classes, d);
  for (Index k = 0; k < centers.rows(); ++k) {
    for (Index c = 0; c < latent_width; ++c) centers(k, c) = normal(rng);
    centers.row(k).normalize();
  }

  auto jitter = [&](Index cols) {
    RowVector v(cols);
    for (Index c = 0; c < cols; ++c) v(c) = p.noise_sigma * normal(rng);
    return v;
  };

  const double warp_scale = p.warp_gain * std::sqrt(static_cast<double>(d));
  ViewDataset ds;
  ds.view_x.resize(n, d);
  ds.view_y.resize(n, d);
  ds.labels.resize(static_cast<std::size_t>(n));
  ds.split.resize(static_cast<std::size_t>(n));
  const int train_classes = p.classes / 2;
  for (Index i = 0; i < n; ++i) {
    const int k = static_cast<int>(i / p.per_class);
    RowVector latent = centers.row(k);
    if (p.latent_sigma > 0.0) {
      for (Index c = 0; c < latent_width; ++c) latent(c) += p.latent_sigma * normal(rng);
    }
    ds.view_x.row(i) = latent + jitter(d);
    if (p.identity_views) {
      ds.view_y.row(i) = latent + jitter(d);
    } else {
      const RowVector warped = (warp_scale * (latent * rotation.transpose())).array().tanh();
      ds.view_y.row(i) = warped + jitter(d);
    }
    ds.labels[static_cast<std::size_t>(i)] = k;
    ds.split[static_cast<std::size_t>(i)] = k < train_classes ? Split::train : Split::test;
  }
  return ds;
}

}  // namespace dcan

#endif  // DCAN_DATASET_HPP
