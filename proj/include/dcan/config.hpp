#ifndef DCAN_CONFIG_HPP
#define DCAN_CONFIG_HPP

#include "dcan/common.hpp"
#include "dcan/dataset.hpp"
#include "dcan/evaluation.hpp"
#include "dcan/trainer.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace dcan {

/// Flat `key = value` experiment configuration. Every key has a documented
/// default; unknown keys are rejected.
class RunConfig {
 public:
  struct Entry {
    std::string value;
    const char* help;
  };

  RunConfig() {
    auto def = [this](const char* key, const char* value, const char* help) {
      entries_.emplace(key, Entry{value, help});
    };
    def("data.source", "synthetic", "synthetic | files");
    def("data.x", "", "view x CSV (data.source=files)");
    def("data.y", "", "view y CSV (data.source=files)");
    def("data.labels", "", "label file, one integer per line (data.source=files)");
    def("data.split", "", "split file, train|test per line; empty means all train");
    def("synth.classes", "20", "number of classes");
    def("synth.per_class", "10", "samples per class and view");
    def("synth.ambient_dim", "50", "feature width");
    def("synth.seed", "7", "generator seed");
    def("synth.noise_sigma", "0.05", "per-entry jitter std");
    def("synth.warp_gain", "1.5", "RMS pre-activation of the view-y tanh warp");
    def("synth.latent_dim", "6", "dimension of the class-center sphere (0 = ambient)");
    def("synth.latent_sigma", "0", "per-sample jitter inside the latent subspace");
    def("synth.identity_views", "false", "view y copies the latent sample (true | false)");
    def("pca.dim", "100", "PCA output width (clamped to the data rank bound)");
    def("train.layers", "2", "number of coupled layers, 1..4");
    def("train.width_step", "10", "hidden width decrement per layer");
    def("train.widths", "", "explicit comma-separated hidden widths (overrides layers/width_step)");
    def("train.lambda", "0.2", "reconstruction weight");
    def("train.gamma", "1e-4", "weight decay");
    def("train.k", "10", "different-class nearest neighbours per sample");
    def("train.gain", "1", "tanh gain");
    def("train.seed", "0", "parameter initialisation seed");
    def("corruption.kind", "mask_zero", "mask_zero | gaussian");
    def("corruption.rate", "0.1", "mask probability or gaussian sigma");
    def("corruption.draws", "1", "fixed corruption draws per layer");
    def("corruption.seed", "0", "corruption seed");
    def("lbfgs.memory", "10", "correction pairs");
    def("lbfgs.max_iters", "400", "iterations per layer");
    def("lbfgs.grad_tol", "1e-5", "sup-norm gradient tolerance");
    def("eval.metric", "cosine", "cosine | euclidean");
    def("cca.dim", "0", "CCA output width (0 = final DCAN width)");
    def("cca.reg", "1e-4", "CCA covariance ridge, relative to mean variance");
    def("output.dir", "out", "output directory");
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(detail::concat("unknown config key '", key, "'"));
    it->second.value = value;
  }

  /// Applies one `key=value` assignment.
  void assign(const std::string& line) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(detail::concat("expected key=value, got '", line, "'"));
    }
    set(std::string(detail::trim(std::string_view(line).substr(0, eq))),
        std::string(detail::trim(std::string_view(line).substr(eq + 1))));
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(detail::concat("cannot open config file '", path, "'"));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      const auto body = detail::trim(std::string_view(line).substr(0, hash));
      if (body.empty()) continue;
      try {
        assign(std::string(body));
      } catch (const ConfigError& e) {
        throw ConfigError(detail::concat(path, ":", line_no, ": ", e.what()));
      }
    }
  }

  const std::string& str(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(detail::concat("unknown config key '", key, "'"));
    return it->second.value;
  }

  double real(const std::string& key) const {
    const auto& s = str(key);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw ConfigError(detail::concat(key, ": expected a real number, got '", s, "'"));
    }
    return v;
  }

  long long integer(const std::string& key) const {
    const auto& s = str(key);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw ConfigError(detail::concat(key, ": expected an integer, got '", s, "'"));
    }
    return v;
  }

  bool boolean(const std::string& key) const {
    const auto& s = str(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError(detail::concat(key, ": expected true or false, got '", s, "'"));
  }

  std::uint64_t seed(const std::string& key) const {
    const long long v = integer(key);
    if (v < 0) throw ConfigError(detail::concat(key, ": seeds must be >= 0"));
    return static_cast<std::uint64_t>(v);
  }

  /// `key = value` lines in key order.
  void write(std::ostream& out) const {
    for (const auto& [key, entry] : entries_) out << key << " = " << entry.value << '\n';
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  // Typed views --------------------------------------------------------------

  SyntheticParams synthetic() const {
    SyntheticParams p;
    p.classes = static_cast<int>(integer("synth.classes"));
    p.per_class = static_cast<int>(integer("synth.per_class"));
    p.ambient_dim = static_cast<int>(integer("synth.ambient_dim"));
    p.seed = seed("synth.seed");
    p.noise_sigma = real("synth.noise_sigma");
    p.warp_gain = real("synth.warp_gain");
    p.latent_dim = static_cast<int>(integer("synth.latent_dim"));
    p.identity_views = boolean("synth.identity_views");
    p.latent_sigma = real("synth.latent_sigma");
    return p;
  }

  CorruptionSpec corruption() const {
    CorruptionSpec c;
    const auto& kind = str("corruption.kind");
    if (kind == "mask_zero") {
      c.kind = CorruptionKind::mask_zero;
    } else if (kind == "gaussian") {
      c.kind = CorruptionKind::gaussian;
    } else {
      throw ConfigError(detail::concat("corruption.kind: unknown kind '", kind, "'"));
    }
    c.rate = real("corruption.rate");
    c.draws = static_cast<int>(integer("corruption.draws"));
    c.seed = seed("corruption.seed");
    return c;
  }

  TrainConfig train() const {
    TrainConfig t;
    t.num_layers = static_cast<int>(integer("train.layers"));
    t.width_step = static_cast<int>(integer("train.width_step"));
    t.pca_dim = static_cast<Index>(integer("pca.dim"));
    const auto& widths = str("train.widths");
    std::string_view rest = widths;
    while (!detail::trim(rest).empty()) {
      const auto comma = rest.find(',');
      const auto field = detail::trim(rest.substr(0, comma));
      long long w = 0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), w);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
        throw ConfigError(detail::concat("train.widths: bad entry '", field, "'"));
      }
      t.hidden_widths.push_back(static_cast<Index>(w));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    t.objective.lambda = real("train.lambda");
    t.objective.gamma = real("train.gamma");
    t.objective.corruption = corruption();
    t.knn_k = static_cast<int>(integer("train.k"));
    t.gain = real("train.gain");
    t.seed = seed("train.seed");
    t.lbfgs.memory = static_cast<int>(integer("lbfgs.memory"));
    t.lbfgs.max_iters = static_cast<int>(integer("lbfgs.max_iters"));
    t.lbfgs.grad_tol = real("lbfgs.grad_tol");
    try {
      t.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return t;
  }

  Metric metric() const { return parse_metric(str("eval.metric")); }

 private:
  std::map<std::string, Entry> entries_;
};

}  // namespace dcan

#endif  // DCAN_CONFIG_HPP
