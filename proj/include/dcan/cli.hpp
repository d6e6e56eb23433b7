#ifndef DCAN_CLI_HPP
#define DCAN_CLI_HPP

#include "dcan/baseline.hpp"
#include "dcan/common.hpp"
#include "dcan/config.hpp"
#include "dcan/dataset.hpp"
#include "dcan/evaluation.hpp"
#include "dcan/objective.hpp"
#include "dcan/pca.hpp"
#include "dcan/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dcan::cli {

enum ExitCode : int {
  kOk = 0,
  kVerificationFailed = 1,
  kUsageError = 2,
  kRuntimeError = 3,
};

inline constexpr const char* kOutputDirEnv = "DCAN_OUTPUT_DIR";
inline constexpr double kGradCheckTolerance = 1e-5;
inline constexpr double kGradCheckStep = 1e-5;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

struct EvalOptions {
  std::string model_path;  // empty: <output.dir>/model.dcan
  bool plot2d = false;
  Index neighbors = 0;
  bool json = false;
};

/// Defaults, then the config file, then DCAN_OUTPUT_DIR, then `--set`
/// assignments and `--output-dir`.
inline RunConfig resolve_config(const std::string& config_path,
                                const std::vector<std::string>& assignments,
                                const std::string& output_dir_flag = "") {
  RunConfig cfg;
  if (!config_path.empty()) cfg.load_file(config_path);
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    cfg.set("output.dir", env);
  }
  for (const auto& a : assignments) cfg.assign(a);
  if (!output_dir_flag.empty()) cfg.set("output.dir", output_dir_flag);
  return cfg;
}

inline std::filesystem::path output_dir(const RunConfig& cfg) {
  std::filesystem::path dir = cfg.str("output.dir");
  std::filesystem::create_directories(dir);
  return dir;
}

inline void echo_config(const RunConfig& cfg, const std::string& command) {
  auto out = detail::open_output((output_dir(cfg) / ("config_" + command + ".txt")).string());
  out << "# effective config for '" << command << "'\n";
  cfg.write(out);
}

inline std::string require_file(const RunConfig& cfg, const std::string& key) {
  const auto& path = cfg.str(key);
  if (path.empty()) {
    throw ConfigError(detail::concat(key, " is required when data.source=files"));
  }
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError(detail::concat("missing data file '", path, "' (", key, ")"));
  }
  return path;
}

inline ViewDataset load_data(const RunConfig& cfg) {
  const auto& source = cfg.str("data.source");
  if (source == "synthetic") return generate_synthetic(cfg.synthetic());
  if (source != "files") {
    throw ConfigError(detail::concat("data.source: expected synthetic or files, got '", source,
                                     "'"));
  }
  const auto x = require_file(cfg, "data.x");
  const auto y = require_file(cfg, "data.y");
  const auto labels = require_file(cfg, "data.labels");
  if (cfg.str("data.split").empty()) return load_dataset(x, y, labels);
  return load_dataset(x, y, labels, require_file(cfg, "data.split"));
}

inline std::string summarize(const ViewDataset& ds) {
  auto classes = ds.classes(Split::train);
  classes.merge(ds.classes(Split::test));
  return detail::concat("n=", ds.size(), " d=", ds.view_x.cols(), " classes=", classes.size(),
                        " train=", ds.indices(Split::train).size(),
                        " test=", ds.indices(Split::test).size());
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_synth(const RunConfig& cfg, Streams io) {
  const ViewDataset ds = generate_synthetic(cfg.synthetic());
  const auto dir = output_dir(cfg);
  write_csv_matrix((dir / "view_x.csv").string(), ds.view_x);
  write_csv_matrix((dir / "view_y.csv").string(), ds.view_y);
  write_labels((dir / "labels.csv").string(), ds.labels);
  write_split((dir / "split.csv").string(), ds.split);
  echo_config(cfg, "synth");
  const std::string line = "synth: " + summarize(ds) + " -> " + dir.string();
  detail::open_output((dir / "synth_summary.txt").string()) << line << '\n';
  io.out << line << '\n';
  return kOk;
}

inline int cmd_train(const RunConfig& cfg, Streams io) {
  const TrainConfig tcfg = cfg.train();
  const ViewDataset ds = load_data(cfg);
  const auto dir = output_dir(cfg);
  echo_config(cfg, "train");
  const TrainResult result = train(ds, tcfg);
  for (const auto& w : result.warnings) io.err << "warning: " << w << '\n';

  save_model((dir / "model.dcan").string(), result.model);
  for (const auto& layer : result.layers) {
    const Index l = layer.layer + 1;
    auto trace = detail::open_output((dir / detail::concat("trace_layer", l, ".csv")).string());
    write_trace_header(trace);
    for (const auto& r : layer.trace) write_trace_row(trace, r);
    io.out << "layer " << l << ": " << result.model.widths[static_cast<std::size_t>(l - 1)]
           << " -> " << result.model.widths[static_cast<std::size_t>(l)]
           << " f0=" << detail::format_double(layer.initial_value)
           << " f=" << detail::format_double(layer.final_value)
           << " iters=" << layer.optim.iterations << " status=" << to_string(layer.optim.status)
           << '\n';
  }
  io.out << "model written to " << (dir / "model.dcan").string() << '\n';
  return kOk;
}

inline int cmd_eval(const RunConfig& cfg, const EvalOptions& opt, Streams io) {
  const auto dir = output_dir(cfg);
  const std::string model_path =
      opt.model_path.empty() ? (dir / "model.dcan").string() : opt.model_path;
  if (!std::filesystem::is_regular_file(model_path)) {
    throw ConfigError(detail::concat("missing model file '", model_path, "'"));
  }
  const NetworkModel model = load_model(model_path);
  const ViewDataset ds = load_data(cfg);
  if (model.pca.input_dim() != ds.view_x.cols()) {
    throw DimensionError(detail::concat("model expects input width ", model.pca.input_dim(),
                                        ", dataset has ", ds.view_x.cols()));
  }
  echo_config(cfg, "eval");
  const Metric metric = cfg.metric();
  const ViewDataset test = ds.subset(Split::test);
  if (test.size() == 0) throw DegenerateDataError("eval: empty test split");
  const Matrix ex = embed(model, test.view_x, View::x);
  const Matrix ey = embed(model, test.view_y, View::y);
  const EvalReport report = cross_view_eval(ex, ey, test.labels, metric);
  const double gap = gap_metric(ex, ey, test.labels);

  {
    auto out = detail::open_output((dir / "eval_report.csv").string());
    write_eval_report(out, report);
  }
  if (opt.plot2d) project_2d(ex, ey, test.labels, (dir / "plot2d.csv").string());

  std::vector<double> keep_x;
  std::vector<double> keep_y;
  if (opt.neighbors > 0) {
    keep_x = neighbor_preservation(test.view_x, ex, opt.neighbors);
    keep_y = neighbor_preservation(test.view_y, ey, opt.neighbors);
    auto out = detail::open_output((dir / "neighbors.csv").string());
    out << "k,view_x,view_y\n";
    for (std::size_t k = 0; k < keep_x.size(); ++k) {
      out << k + 1 << ',' << detail::format_double(keep_x[k]) << ','
          << detail::format_double(keep_y[k]) << '\n';
    }
  }
  if (opt.json) {
    nlohmann::json j;
    j["metric"] = to_string(metric);
    j["depth"] = model.depth();
    j["accuracy_xy"] = report.accuracy_xy;
    j["accuracy_yx"] = report.accuracy_yx;
    j["mean_accuracy"] = report.mean_accuracy;
    j["gap"] = gap;
    if (opt.neighbors > 0) {
      j["neighbor_preservation"] = {{"view_x", keep_x}, {"view_y", keep_y}};
    }
    detail::open_output((dir / "eval_report.json").string()) << j.dump(2) << '\n';
  }
  io.out << "rank-1 x->y " << detail::format_double(report.accuracy_xy) << ", y->x "
         << detail::format_double(report.accuracy_yx) << ", mean "
         << detail::format_double(report.mean_accuracy) << ", gap "
         << detail::format_double(gap) << '\n';
  return kOk;
}

/// Random instance with 12 paired samples, 7 input features, 5 hidden units,
/// 4 classes and k=2, drawn from `seed`.
struct GradCheckInstance {
  Matrix x;
  Matrix y;
  Labels labels;
  LayerParams params;
};

inline GradCheckInstance make_gradcheck_instance(std::uint64_t seed, double gain) {
  constexpr Index n = 12;
  constexpr Index d_in = 7;
  constexpr Index h = 5;
  std::mt19937_64 rng(detail::mix_seed(seed, 0x6C));
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  std::normal_distribution<double> normal(0.0, 0.1);
  GradCheckInstance inst;
  inst.x = Matrix::NullaryExpr(n, d_in, [&] { return u(rng); });
  inst.y = Matrix::NullaryExpr(n, d_in, [&] { return u(rng); });
  inst.labels.resize(n);
  for (Index i = 0; i < n; ++i) inst.labels[static_cast<std::size_t>(i)] = static_cast<int>(i % 4);
  const LayerParams init = init_params(d_in, h, gain, detail::mix_seed(seed, 0x6D));
  Vector flat = flatten(init);
  for (Index i = 0; i < flat.size(); ++i) flat(i) += normal(rng);
  inst.params = unflatten(flat, init);
  return inst;
}

inline GradCheckReport run_gradcheck(const RunConfig& cfg, const GradientHook& hook = {}) {
  const TrainConfig tcfg = cfg.train();
  const auto inst = make_gradcheck_instance(tcfg.seed, tcfg.gain);
  PairSets pairs = build_pair_sets(pooled_rows(inst.x, inst.y), pooled_labels(inst.labels), 2);
  const LayerObjective objective(inst.x, inst.y, std::move(pairs), tcfg.objective);
  return grad_check(objective, inst.params, kGradCheckStep, hook);
}

inline int cmd_gradcheck(const RunConfig& cfg, Streams io, const GradientHook& hook = {}) {
  const GradCheckReport r = run_gradcheck(cfg, hook);
  io.out << detail::format_double(r.max_rel_err) << ',' << r.worst_coordinate << ','
         << detail::format_double(r.step) << '\n';
  return r.max_rel_err < kGradCheckTolerance ? kOk : kVerificationFailed;
}

/// CCA output width: cca.dim, or the final DCAN width of the configured
/// schedule when cca.dim is 0.
inline Index baseline_dim(const RunConfig& cfg, const ViewDataset& ds) {
  const long long requested = cfg.integer("cca.dim");
  if (requested < 0) throw ConfigError("cca.dim must be >= 0");
  if (requested > 0) return static_cast<Index>(requested);
  const TrainConfig tcfg = cfg.train();
  const Index train_rows = static_cast<Index>(ds.indices(Split::train).size());
  const Index pca_dim = std::min({tcfg.pca_dim, 2 * train_rows - 1, ds.view_x.cols()});
  return tcfg.widths_for(pca_dim).back();
}

inline int cmd_baseline(const RunConfig& cfg, Streams io) {
  const ViewDataset ds = load_data(cfg);
  const auto dir = output_dir(cfg);
  echo_config(cfg, "baseline");
  const Index dim = baseline_dim(cfg, ds);
  const CcaBaseline model =
      fit_cca_baseline(ds, static_cast<Index>(cfg.integer("pca.dim")), dim, cfg.real("cca.reg"));
  const EvalReport cca = cross_view_eval(model, ds, cfg.metric());

  std::vector<std::pair<std::string, std::string>> dcan_rows;
  const auto dcan_report = dir / "eval_report.csv";
  if (std::filesystem::is_regular_file(dcan_report)) {
    auto in = detail::open_input(dcan_report.string());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      if (comma == std::string::npos) continue;
      std::string direction = line.substr(0, comma);
      if (direction == "mean") continue;
      dcan_rows.emplace_back(std::move(direction), std::string(detail::trim(line.substr(comma + 1))));
    }
  } else {
    io.err << "warning: no DCAN report at " << dcan_report.string()
           << "; writing CCA rows only\n";
  }

  auto out = detail::open_output((dir / "baseline_report.csv").string());
  out << "method,direction,accuracy\n";
  for (const auto& [direction, acc] : dcan_rows) out << "dcan," << direction << ',' << acc << '\n';
  out << "cca,gallery_x_probe_y," << detail::format_double(cca.accuracy_xy) << '\n';
  out << "cca,gallery_y_probe_x," << detail::format_double(cca.accuracy_yx) << '\n';
  io.out << "cca (dim " << dim << ") rank-1 mean " << detail::format_double(cca.mean_accuracy)
         << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// Entry point

/// Parses argv and dispatches. `hook` is passed to gradcheck only.
inline int run(int argc, const char* const* argv, Streams io, const GradientHook& hook = {}) {
  CLI::App app{"Deeply coupled auto-encoder networks for cross-view recognition"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> assignments;
  std::string output_dir_flag;
  EvalOptions eval_opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "config file of key = value lines");
    sub->add_option("-s,--set", assignments, "override one key (key=value), repeatable");
    sub->add_option("-o,--output-dir", output_dir_flag, "output directory (overrides output.dir)");
  };
  auto* synth = app.add_subcommand("synth", "generate the synthetic two-view dataset");
  auto* train_cmd = app.add_subcommand("train", "train a DCAN model");
  auto* eval = app.add_subcommand("eval", "rank-1 cross-view evaluation of a model");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the gradient");
  auto* baseline = app.add_subcommand("baseline", "CCA baseline report");
  for (auto* sub : {synth, train_cmd, eval, gradcheck, baseline}) add_common(sub);
  eval->add_option("-m,--model", eval_opt.model_path, "model file (default <output.dir>/model.dcan)");
  eval->add_flag("--plot2d", eval_opt.plot2d, "write 2-D PCA plot data");
  eval->add_option("--neighbors", eval_opt.neighbors, "write neighbour preservation up to K")
      ->check(CLI::NonNegativeNumber);
  eval->add_flag("--json", eval_opt.json, "also write eval_report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, io.out, io.err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    const RunConfig cfg = resolve_config(config_path, assignments, output_dir_flag);
    if (synth->parsed()) return cmd_synth(cfg, io);
    if (train_cmd->parsed()) return cmd_train(cfg, io);
    if (eval->parsed()) return cmd_eval(cfg, eval_opt, io);
    if (gradcheck->parsed()) return cmd_gradcheck(cfg, io, hook);
    return cmd_baseline(cfg, io);
  } catch (const ConfigError& e) {
    io.err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    io.err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace dcan::cli

#endif  // DCAN_CLI_HPP
