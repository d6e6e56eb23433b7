#ifndef DCAN_PCA_HPP
#define DCAN_PCA_HPP

#include "dcan/common.hpp"
#include "dcan/dataset.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace dcan {

/// Projection onto the leading principal subspace followed by a global scale
/// that maps the training projections into [-0.9, 0.9].
struct PcaModel {
  RowVector mean;
  Matrix components;          // d x r, orthonormal columns
  Vector explained_variance;  // r, non-increasing
  double scale = 1.0;

  Index input_dim() const { return components.rows(); }
  Index output_dim() const { return components.cols(); }
};

inline constexpr double kPcaRange = 0.9;

/// Fits the top-r principal subspace through a thin SVD of the centered data.
/// Each component is signed so that its largest-magnitude entry is positive.
inline PcaModel fit_pca(const Matrix& data, Index r) {
  const Index n = data.rows();
  const Index d = data.cols();
  if (n < 2) throw std::invalid_argument("fit_pca needs at least 2 rows");
  if (r < 1 || r > std::min(n - 1, d)) {
    throw std::invalid_argument(detail::concat("pca dimension ", r, " outside [1, min(n-1, d)=",
                                               std::min(n - 1, d), "]"));
  }
  if (!data.allFinite()) throw DataError("fit_pca: non-finite input");

  PcaModel model;
  model.mean = data.colwise().mean();
  const Matrix centered = data.rowwise() - model.mean;
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  model.components = svd.matrixV().leftCols(r);
  for (Index c = 0; c < r; ++c) {
    Index arg = 0;
    model.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (model.components(arg, c) < 0) model.components.col(c) *= -1.0;
  }
  model.explained_variance =
      svd.singularValues().head(r).array().square() / static_cast<double>(n - 1);

  const double max_abs = (centered * model.components).cwiseAbs().maxCoeff();
  if (!(max_abs > 0.0)) {
    throw DegenerateDataError("fit_pca: zero-variance data, projection scale would be 0");
  }
  model.scale = max_abs / kPcaRange;
  return model;
}

inline Matrix transform(const PcaModel& model, const Matrix& data) {
  if (data.cols() != model.input_dim()) {
    throw DimensionError(detail::concat("pca transform: input has ", data.cols(),
                                        " columns, model expects ", model.input_dim()));
  }
  return ((data.rowwise() - model.mean) * model.components) / model.scale;
}

/// Maps reduced coordinates back to the input space.
inline Matrix inverse_transform(const PcaModel& model, const Matrix& reduced) {
  if (reduced.cols() != model.output_dim()) {
    throw DimensionError(detail::concat("pca inverse: input has ", reduced.cols(),
                                        " columns, model has ", model.output_dim()));
  }
  return ((reduced * model.scale) * model.components.transpose()).rowwise() + model.mean;
}

/// Writes `pc1,pc2,label,view` rows for the pooled features of both views,
/// projected on their two leading principal components. Rows of view_x come
/// first.
inline void project_2d(const Matrix& features_x, const Matrix& features_y, const Labels& labels,
                       const std::string& out_path) {
  if (features_x.rows() != features_y.rows() || features_x.cols() != features_y.cols()) {
    throw DimensionError(detail::concat("project_2d: view shapes differ (",
                                        detail::shape(features_x), " vs ",
                                        detail::shape(features_y), ")"));
  }
  if (static_cast<Index>(labels.size()) != features_x.rows()) {
    throw DimensionError("project_2d: label count does not match rows");
  }
  Matrix pooled(2 * features_x.rows(), features_x.cols());
  pooled << features_x, features_y;
  if (pooled.cols() < 2 || pooled.rows() < 3) {
    throw std::invalid_argument("project_2d needs >= 2 columns and >= 3 rows");
  }
  const PcaModel pca = fit_pca(pooled, 2);
  const Matrix coords = (pooled.rowwise() - pca.mean) * pca.components;

  auto out = detail::open_output(out_path);
  out << "pc1,pc2,label,view\n";
  const Index n = features_x.rows();
  for (Index i = 0; i < pooled.rows(); ++i) {
    out << detail::format_double(coords(i, 0)) << ',' << detail::format_double(coords(i, 1))
        << ',' << labels[static_cast<std::size_t>(i % n)] << ',' << (i < n ? "x" : "y") << '\n';
  }
  if (!out) throw Error(detail::concat("write failed: '", out_path, "'"));
}

}  // namespace dcan

#endif  // DCAN_PCA_HPP
