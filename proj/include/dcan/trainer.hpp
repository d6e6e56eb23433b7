#ifndef DCAN_TRAINER_HPP
#define DCAN_TRAINER_HPP

#include "dcan/common.hpp"
#include "dcan/coupled_layer.hpp"
#include "dcan/dataset.hpp"
#include "dcan/lbfgs.hpp"
#include "dcan/objective.hpp"
#include "dcan/pair_graph.hpp"
#include "dcan/pca.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dcan {

struct Hyperparameters {
  double lambda = 0.2;
  double gamma = 1e-4;
  int k = 10;
  double gain = 1.0;

  bool operator==(const Hyperparameters&) const = default;
};

/// PCA front end plus the stacked coupled layers; embeds either view into the
/// shared space.
struct NetworkModel {
  PcaModel pca;
  std::vector<LayerParams> layers;
  std::vector<Index> widths;  // widths[0] = pca output, widths[l+1] = layer l output
  Hyperparameters hyper;

  Index depth() const { return static_cast<Index>(layers.size()); }
  Index output_dim() const { return widths.back(); }

  /// The first `depth` layers of this model.
  NetworkModel truncated(Index depth) const {
    if (depth < 1 || depth > this->depth()) {
      throw std::invalid_argument(detail::concat("truncate depth ", depth, " outside [1, ",
                                                 this->depth(), "]"));
    }
    NetworkModel out = *this;
    out.layers.resize(static_cast<std::size_t>(depth));
    out.widths.resize(static_cast<std::size_t>(depth + 1));
    return out;
  }
};

struct TrainConfig {
  int num_layers = 1;
  int width_step = 10;
  Index pca_dim = 100;
  /// Explicit hidden widths; when non-empty it overrides num_layers/width_step.
  std::vector<Index> hidden_widths;
  ObjectiveConfig objective;
  LbfgsConfig lbfgs;
  int knn_k = 10;
  double gain = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (hidden_widths.empty() && (num_layers < 1 || num_layers > 4)) {
      throw std::invalid_argument(detail::concat("train.layers=", num_layers,
                                                 " outside [1, 4]"));
    }
    if (hidden_widths.empty() && width_step < 0) {
      throw std::invalid_argument("train.width_step must be >= 0");
    }
    for (Index w : hidden_widths) {
      if (w < 1) throw std::invalid_argument("hidden widths must be >= 1");
    }
    if (pca_dim < 1) throw std::invalid_argument("pca.dim must be >= 1");
    if (knn_k < 1) throw std::invalid_argument("train.k must be >= 1");
    if (!(gain > 0.0)) throw std::invalid_argument("train.gain must be > 0");
    if (!(objective.lambda > 0.0)) throw std::invalid_argument("train.lambda must be > 0");
    objective.validate();
    lbfgs.validate();
  }

  /// Layer widths for a given PCA output width.
  std::vector<Index> widths_for(Index input_width) const {
    std::vector<Index> widths{input_width};
    if (!hidden_widths.empty()) {
      widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
      return widths;
    }
    if (input_width - static_cast<Index>(num_layers) * width_step < 1) {
      throw std::invalid_argument(detail::concat("width schedule ", input_width, " - ", num_layers,
                                                 "*", width_step, " reaches zero"));
    }
    for (int l = 1; l <= num_layers; ++l) widths.push_back(input_width - l * width_step);
    return widths;
  }
};

/// Outcome of optimizing one layer.
struct LayerReport {
  Index layer = 0;
  double initial_value = 0.0;
  double final_value = 0.0;
  ObjectiveParts final_parts;
  OptimResult optim;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::vector<IterationRecord> trace;
};

struct TrainResult {
  NetworkModel model;
  std::vector<LayerReport> layers;
  std::vector<std::string> warnings;
};

/// Embeds samples of one view: PCA transform, then clean encodes through
/// every layer.
inline Matrix embed(const NetworkModel& model, const Matrix& samples, View v) {
  if (model.layers.empty()) throw std::invalid_argument("embed: model has no layers");
  Matrix h = transform(model.pca, samples);
  for (const auto& layer : model.layers) h = encode(layer, h, v);
  return h;
}

/// Optimizes one coupled layer on clean inputs (x, y) with pooled labels.
inline LayerReport train_layer(const Matrix& x, const Matrix& y, const Labels& labels,
                               Index hidden, const TrainConfig& cfg, Index layer_index,
                               LayerParams& out, std::vector<std::string>& warnings) {
  const Labels pooled = pooled_labels(labels);
  PairSets pairs = build_pair_sets(pooled_rows(x, y), pooled, cfg.knn_k);
  for (const auto& w : pairs.warnings) {
    warnings.push_back(detail::concat("layer ", layer_index, ": ", w));
  }

  ObjectiveConfig ocfg = cfg.objective;
  ocfg.corruption.seed =
      detail::mix_seed(cfg.objective.corruption.seed, static_cast<std::uint64_t>(layer_index));
  LayerReport report;
  report.layer = layer_index;
  report.n1 = pairs.n1();
  report.n2 = pairs.n2();
  const LayerObjective objective(x, y, std::move(pairs), ocfg);

  const LayerParams init = init_params(
      x.cols(), hidden, cfg.gain,
      detail::mix_seed(cfg.seed, 0x100 + static_cast<std::uint64_t>(layer_index)));
  report.initial_value = objective.evaluate(init).value;

  const Objective f = [&](const Vector& flat, Vector& grad) {
    auto eval = objective.evaluate(unflatten(flat, init));
    grad = std::move(eval.gradient);
    return eval.value;
  };
  report.optim = minimize(f, flatten(init), cfg.lbfgs,
                          [&](const IterationRecord& r) { report.trace.push_back(r); });
  if (report.optim.status == OptimStatus::line_search_failed) {
    warnings.push_back(detail::concat("layer ", layer_index,
                                      ": line search failed after ", report.optim.iterations,
                                      " iterations; keeping last accepted iterate"));
  }
  out = unflatten(report.optim.solution, init);
  const auto final_eval = objective.evaluate(out);
  report.final_value = final_eval.value;
  report.final_parts = final_eval.parts;
  return report;
}

/// Greedy layer-wise training: PCA on the pooled training rows of both views,
/// then for each layer rebuild the pair sets on the current clean features,
/// minimize the layer objective with L-BFGS, and feed the clean encodings to
/// the next layer.
inline TrainResult train(const ViewDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  const ViewDataset tr = data.subset(Split::train);
  if (tr.size() == 0) throw DegenerateDataError("train: empty training split");
  if (tr.classes(Split::train).size() < 2) {
    throw DegenerateDataError("train: training split needs >= 2 classes");
  }

  TrainResult result;
  NetworkModel& model = result.model;
  model.hyper = {cfg.objective.lambda, cfg.objective.gamma, cfg.knn_k, cfg.gain};

  const Matrix pooled = pooled_rows(tr.view_x, tr.view_y);
  const Index max_dim = std::min(pooled.rows() - 1, pooled.cols());
  Index pca_dim = cfg.pca_dim;
  if (pca_dim > max_dim) {
    result.warnings.push_back(detail::concat("pca.dim=", cfg.pca_dim,
                                             " exceeds min(pooled rows - 1, input width) = ",
                                             max_dim, "; clamped"));
    pca_dim = max_dim;
  }
  model.pca = fit_pca(pooled, pca_dim);
  model.widths = cfg.widths_for(pca_dim);

  Matrix x = transform(model.pca, tr.view_x);
  Matrix y = transform(model.pca, tr.view_y);
  for (std::size_t l = 0; l + 1 < model.widths.size(); ++l) {
    LayerParams params;
    result.layers.push_back(train_layer(x, y, tr.labels, model.widths[l + 1], cfg,
                                        static_cast<Index>(l), params, result.warnings));
    x = encode(params, x, View::x);
    y = encode(params, y, View::y);
    model.layers.push_back(std::move(params));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Model files

inline constexpr const char* kModelHeader = "DCAN v1";

inline void save_model(std::ostream& out, const NetworkModel& model) {
  out << kModelHeader << '\n';
  out << "hyper lambda " << detail::format_double(model.hyper.lambda) << " gamma "
      << detail::format_double(model.hyper.gamma) << " k " << model.hyper.k << " gain "
      << detail::format_double(model.hyper.gain) << '\n';
  out << "widths " << model.widths.size();
  for (Index w : model.widths) out << ' ' << w;
  out << '\n';
  out << "pca " << model.pca.input_dim() << ' ' << model.pca.output_dim() << '\n';
  out << "scale " << detail::format_double(model.pca.scale) << '\n';
  detail::write_matrix_block(out, "mean", model.pca.mean);
  detail::write_matrix_block(out, "components", model.pca.components);
  detail::write_matrix_block(out, "variance", model.pca.explained_variance.transpose());
  out << "layers " << model.layers.size() << '\n';
  for (const auto& layer : model.layers) write_layer(out, layer);
}

inline std::string model_to_string(const NetworkModel& model) {
  std::ostringstream oss;
  save_model(oss, model);
  return oss.str();
}

inline void save_model(const std::string& path, const NetworkModel& model) {
  auto out = detail::open_output(path);
  save_model(out, model);
  if (!out) throw Error(detail::concat("write failed: '", path, "'"));
}

inline NetworkModel load_model(std::istream& in) {
  std::string header;
  std::getline(in, header);
  if (detail::trim(header) != kModelHeader) {
    throw DataError(detail::concat("model file: expected header '", kModelHeader, "', found '",
                                   header, "'"));
  }
  NetworkModel model;
  detail::expect_token(in, "hyper");
  detail::expect_token(in, "lambda");
  model.hyper.lambda = detail::read_double(in);
  detail::expect_token(in, "gamma");
  model.hyper.gamma = detail::read_double(in);
  detail::expect_token(in, "k");
  model.hyper.k = static_cast<int>(detail::read_index(in));
  detail::expect_token(in, "gain");
  model.hyper.gain = detail::read_double(in);

  detail::expect_token(in, "widths");
  const Index count = detail::read_index(in);
  for (Index i = 0; i < count; ++i) model.widths.push_back(detail::read_index(in));

  detail::expect_token(in, "pca");
  const Index d = detail::read_index(in);
  const Index r = detail::read_index(in);
  detail::expect_token(in, "scale");
  model.pca.scale = detail::read_double(in);
  model.pca.mean = detail::read_matrix_block(in, "mean");
  model.pca.components = detail::read_matrix_block(in, "components");
  model.pca.explained_variance = detail::read_vector_block(in, "variance");
  if (model.pca.mean.cols() != d || model.pca.components.rows() != d ||
      model.pca.components.cols() != r || model.pca.explained_variance.size() != r ||
      !(model.pca.scale > 0.0)) {
    throw DataError("model file: inconsistent pca section");
  }

  detail::expect_token(in, "layers");
  const Index layers = detail::read_index(in);
  for (Index l = 0; l < layers; ++l) model.layers.push_back(read_layer(in));

  if (layers < 1 || static_cast<Index>(model.widths.size()) != layers + 1 ||
      model.widths.front() != r) {
    throw DataError("model file: width list does not match layers");
  }
  for (Index l = 0; l < layers; ++l) {
    const auto& layer = model.layers[static_cast<std::size_t>(l)];
    if (layer.input_dim() != model.widths[static_cast<std::size_t>(l)] ||
        layer.hidden_dim() != model.widths[static_cast<std::size_t>(l + 1)]) {
      throw DataError(detail::concat("model file: layer ", l, " shape does not match widths"));
    }
  }
  return model;
}

inline NetworkModel load_model(const std::string& path) {
  auto in = detail::open_input(path);
  return load_model(in);
}

}  // namespace dcan

#endif  // DCAN_TRAINER_HPP
