#ifndef DCAN_BASELINE_HPP
#define DCAN_BASELINE_HPP

#include "dcan/cca.hpp"
#include "dcan/dataset.hpp"
#include "dcan/evaluation.hpp"
#include "dcan/pair_graph.hpp"
#include "dcan/pca.hpp"

#include <algorithm>

namespace dcan {

/// CCA on the same PCA front end the DCAN trainer uses.
struct CcaBaseline {
  PcaModel pca;
  CcaModel cca;
};

/// Fits PCA (width clamped like the trainer) on pooled training rows, then
/// CCA with `dim` outputs on the paired training samples.
inline CcaBaseline fit_cca_baseline(const ViewDataset& data, Index pca_dim, Index dim,
                                    double reg = 1e-4) {
  data.validate();
  const ViewDataset tr = data.subset(Split::train);
  if (tr.size() < 2) throw DegenerateDataError("cca baseline: training split needs >= 2 rows");
  const Matrix pooled = pooled_rows(tr.view_x, tr.view_y);
  CcaBaseline out;
  out.pca = fit_pca(pooled, std::min({pca_dim, pooled.rows() - 1, pooled.cols()}));
  out.cca = fit_cca(transform(out.pca, tr.view_x), transform(out.pca, tr.view_y), dim, reg);
  return out;
}

inline Matrix embed(const CcaBaseline& b, const Matrix& samples, View v) {
  return cca_embed(b.cca, transform(b.pca, samples), v);
}

inline EvalReport cross_view_eval(const CcaBaseline& b, const ViewDataset& data,
                                  Metric metric = Metric::cosine) {
  const ViewDataset test = data.subset(Split::test);
  if (test.size() == 0) throw DegenerateDataError("cross_view_eval: empty test split");
  return cross_view_eval(embed(b, test.view_x, View::x), embed(b, test.view_y, View::y),
                         test.labels, metric);
}

}  // namespace dcan

#endif  // DCAN_BASELINE_HPP
