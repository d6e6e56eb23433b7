#ifndef DCAN_CCA_HPP
#define DCAN_CCA_HPP

#include "dcan/common.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace dcan {

/// Linear CCA baseline.
struct CcaModel {
  RowVector mean_x;
  RowVector mean_y;
  Matrix proj_x;  // d_x x r
  Matrix proj_y;  // d_y x r
  Vector correlations;
  double reg = 0.0;

  Index output_dim() const { return proj_x.cols(); }
};

namespace detail {

/// Sigma^{-1/2} for a symmetric positive definite Sigma.
inline Matrix inverse_sqrt_spd(const Matrix& sigma, const char* name, double reg) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  const Vector& values = eig.eigenvalues();
  const double tol = 1e-12 * std::max(1.0, std::abs(values.maxCoeff()));
  if (!(values.minCoeff() > tol)) {
    throw DegenerateDataError(concat("fit_cca: covariance of view ", name,
                                     " is singular (min eigenvalue ", values.minCoeff(),
                                     ", reg=", reg, "); increase reg"));
  }
  return eig.eigenvectors() * values.cwiseInverse().cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace detail

/// Regularized CCA through the SVD of the whitened cross-covariance
/// Sxx^{-1/2} Sxy Syy^{-1/2}. Each auto-covariance gets reg * trace/d added
/// to its diagonal.
inline CcaModel fit_cca(const Matrix& x, const Matrix& y, Index r, double reg = 1e-4) {
  if (x.rows() != y.rows()) {
    throw DimensionError(detail::concat("fit_cca: row counts differ (", x.rows(), " vs ", y.rows(),
                                        ")"));
  }
  const Index n = x.rows();
  if (n < 2) throw std::invalid_argument("fit_cca needs >= 2 rows");
  if (r < 1 || r > std::min(x.cols(), y.cols())) {
    throw std::invalid_argument(detail::concat("fit_cca: r=", r, " outside [1, ",
                                               std::min(x.cols(), y.cols()), "]"));
  }
  if (!(reg >= 0.0)) throw std::invalid_argument("fit_cca: reg must be >= 0");

  CcaModel model;
  model.reg = reg;
  model.mean_x = x.colwise().mean();
  model.mean_y = y.colwise().mean();
  const Matrix xc = x.rowwise() - model.mean_x;
  const Matrix yc = y.rowwise() - model.mean_y;
  const double denom = static_cast<double>(n - 1);
  Matrix sxx = xc.transpose() * xc / denom;
  Matrix syy = yc.transpose() * yc / denom;
  const Matrix sxy = xc.transpose() * yc / denom;
  sxx.diagonal().array() += reg * sxx.trace() / static_cast<double>(sxx.rows());
  syy.diagonal().array() += reg * syy.trace() / static_cast<double>(syy.rows());

  const Matrix wx = detail::inverse_sqrt_spd(sxx, "x", reg);
  const Matrix wy = detail::inverse_sqrt_spd(syy, "y", reg);
  Eigen::JacobiSVD<Matrix> svd(wx * sxy * wy, Eigen::ComputeThinU | Eigen::ComputeThinV);
  model.proj_x = wx * svd.matrixU().leftCols(r);
  model.proj_y = wy * svd.matrixV().leftCols(r);
  model.correlations = svd.singularValues().head(r);
  return model;
}

inline Matrix cca_embed(const CcaModel& model, const Matrix& samples, View v) {
  const Matrix& proj = v == View::x ? model.proj_x : model.proj_y;
  const RowVector& mean = v == View::x ? model.mean_x : model.mean_y;
  if (samples.cols() != proj.rows()) {
    throw DimensionError(detail::concat("cca_embed: input has ", samples.cols(),
                                        " columns, model expects ", proj.rows()));
  }
  return (samples.rowwise() - mean) * proj;
}

}  // namespace dcan

#endif  // DCAN_CCA_HPP
