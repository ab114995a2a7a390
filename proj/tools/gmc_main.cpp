// Command-line front end: embed / select / run / sweep / report.
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gmc/harness.hpp"

namespace {

using namespace gmc;

struct DataArgs {
  std::string csv;
  std::string label_column = "label";
  bool no_header = false;
  int synth_classes = 0;  // > 0 selects synthetic blobs
  int synth_per_class = 500;
  int synth_features = 8;
  double synth_spread = 0.5;
  double synth_drift = 0.0;
  std::uint64_t synth_seed = 0;
};

void add_data_flags(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--csv", args.csv, "CSV dataset path");
  cmd->add_option("--label-column", args.label_column,
                  "label column name or 0-based index");
  cmd->add_flag("--no-header", args.no_header, "CSV has no header row");
  cmd->add_option("--synth-classes", args.synth_classes,
                  "use synthetic blobs with this many classes instead of a CSV");
  cmd->add_option("--synth-per-class", args.synth_per_class, "rows per class");
  cmd->add_option("--synth-features", args.synth_features, "feature count");
  cmd->add_option("--synth-spread", args.synth_spread, "blob spread");
  cmd->add_option("--synth-drift", args.synth_drift, "drift along feature 0");
  cmd->add_option("--synth-seed", args.synth_seed, "synthetic data seed");
}

Dataset load_data(const DataArgs& args) {
  if (args.synth_classes > 0) {
    Dataset d = synth_blobs(args.synth_classes, args.synth_per_class,
                            args.synth_features, args.synth_spread,
                            args.synth_drift, args.synth_seed);
    Standardizer::fit(d).apply(d);
    return d;
  }
  if (args.csv.empty())
    throw ConfigError("either --csv or --synth-classes is required");
  return load_csv(args.csv, args.label_column, !args.no_header);
}

std::vector<std::size_t> parse_hidden(const std::string& s) {
  std::vector<std::size_t> hidden;
  std::string part;
  std::stringstream ss(s);
  while (std::getline(ss, part, ',')) hidden.push_back(std::stoul(part));
  return hidden;
}

int cmd_embed(const DataArgs& data_args, const std::string& hidden_str,
              const std::string& mode_str, std::size_t samples, std::size_t dim,
              const std::string& family, double scale, std::uint64_t init_seed,
              std::uint64_t projection_seed, double density,
              const std::string& out_path) {
  const Dataset data = load_data(data_args);
  ArchSpec arch;
  arch.input_dim = static_cast<std::size_t>(data.features.cols());
  arch.hidden = parse_hidden(hidden_str);
  arch.num_classes = static_cast<std::size_t>(data.class_count);

  EmbeddingSpec spec;
  spec.samples = samples;
  spec.dim = dim;
  if (mode_str == "full") spec.mode = EmbeddingMode::full;
  else if (mode_str == "last_layer") spec.mode = EmbeddingMode::last_layer;
  else throw ConfigError("--mode must be full or last_layer");
  spec.init.family = family == "he_normal" ? InitFamily::he_normal
                                           : InitFamily::he_uniform;
  if (family != "he_uniform" && family != "he_normal")
    throw ConfigError("--init-family must be he_uniform or he_normal");
  spec.init.scale = scale;
  spec.init.seed = init_seed;
  spec.projection_seed = projection_seed;
  spec.density = density;

  const EmbeddingMatrix g = build_embeddings(data.to_weighted(), arch, spec);
  write_embedding_file(out_path, g);
  std::cout << "wrote " << out_path << ": " << g.rows() << "x" << g.cols()
            << " (" << to_string(spec.mode) << ", S=" << spec.samples
            << ", d=" << spec.dim << ")\n";
  return 0;
}

int cmd_select(const std::string& embeddings_path, const DataArgs& data_args,
               std::size_t n, double lambda, bool no_clip,
               const std::string& center, const std::string& out_path) {
  const EmbeddingMatrix g = read_embedding_file(embeddings_path);
  const Dataset data = load_data(data_args);
  if (data.size() != g.cols())
    throw ConfigError("dataset has " + std::to_string(data.size()) +
                      " rows but the embedding file has " +
                      std::to_string(g.cols()) + " columns");

  OmpConfig cfg;
  cfg.coreset_size = n;
  cfg.lambda = lambda;
  cfg.clip_negative = !no_clip;
  if (center == "zero") cfg.center = RegCenter::zero;
  else if (center != "best_uniform")
    throw ConfigError("--center must be best_uniform or zero");

  const Eigen::VectorXd target = sum_columns(g);
  const Selection sel = omp_select(g, target, cfg);

  MemorySnapshot snap;
  snap.strategy_id = static_cast<std::uint8_t>(g.spec().mode);
  snap.capacity = n;
  snap.weights = sel.weights;
  for (std::size_t idx : sel.indices)
    snap.items.push_back({data.features.row(static_cast<Eigen::Index>(idx)).transpose(),
                          data.labels[idx]});
  write_memory_snapshot(out_path, snap);

  std::cout << "wrote " << out_path << ": " << sel.indices.size()
            << " items, residual " << sel.residual_norm << " (target norm "
            << target.norm() << "), clipped " << sel.clipped_count
            << ", skipped " << sel.skipped_dependent << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_path,
            const std::string& manifest_path, const std::string& snapshot_dir) {
  const RunConfig cfg = load_run_config(config_path);
  if (!manifest_path.empty()) {
    const ScenarioStream stream = build_scenario(cfg.scenario);
    write_manifest(manifest_path, stream, {{"standardized", "true"}});
  }
  const std::vector<RunResult> results = run_all(cfg);
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot open " + out_path + " for writing");
  write_metrics_jsonl(out, results);
  for (const auto& r : results) {
    if (!snapshot_dir.empty())
      write_memory_snapshot(snapshot_dir + "/" + r.metrics.run_id + ".gmcm",
                            r.final_memory);
    std::cout << r.metrics.run_id << ": final_acc = " << r.metrics.final_acc
              << "\n";
  }
  std::cout << "wrote " << results.size() << " runs to " << out_path << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& axis_str,
              const std::string& values_str, const std::string& out_path) {
  const RunConfig cfg = load_run_config(config_path);
  const SweepAxis axis = sweep_axis_from_string(axis_str);
  std::vector<std::string> values;
  std::stringstream ss(values_str);
  std::string part;
  while (std::getline(ss, part, ',')) values.push_back(part);

  const std::vector<RunResult> results = sweep(cfg, axis, values);
  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot open " + out_path + " for writing");
  write_metrics_jsonl(out, results);
  for (const auto& r : results)
    std::cout << r.metrics.run_id << ": final_acc = " << r.metrics.final_acc
              << " (embed " << r.metrics.timings.embed_seconds << "s)\n";
  return 0;
}

struct Aggregate {
  std::vector<double> final_accs;
  double embed_s = 0, select_s = 0, train_s = 0;
};

int cmd_report(const std::string& metrics_path, const std::string& csv_path) {
  std::ifstream in(metrics_path);
  if (!in) throw ConfigError("cannot open " + metrics_path);
  const std::vector<RunMetrics> metrics = read_metrics_jsonl(in);
  if (metrics.empty()) throw ConfigError("no metrics records in " + metrics_path);

  std::map<std::tuple<std::string, std::string, std::size_t>, Aggregate> groups;
  for (const auto& m : metrics) {
    auto& g = groups[{m.scenario, m.strategy, m.memory_size}];
    g.final_accs.push_back(m.final_acc);
    g.embed_s += m.timings.embed_seconds;
    g.select_s += m.timings.select_seconds;
    g.train_s += m.timings.train_seconds;
  }

  const auto mean_std = [](const std::vector<double>& xs) {
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
    return std::pair<double, double>{mean, std::sqrt(var)};
  };

  std::printf("%-20s %-16s %6s %5s %18s %10s\n", "scenario", "strategy", "n",
              "runs", "final_acc", "train_s");
  for (const auto& [key, agg] : groups) {
    const auto [mean, stddev] = mean_std(agg.final_accs);
    std::printf("%-20s %-16s %6zu %5zu %9.4f +- %6.4f %10.2f\n",
                std::get<0>(key).c_str(), std::get<1>(key).c_str(),
                std::get<2>(key), agg.final_accs.size(), mean, stddev,
                agg.train_s);
  }

  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) throw ConfigError("cannot open " + csv_path + " for writing");
    csv << "scenario,strategy,n,runs,final_acc_mean,final_acc_std,"
           "embed_s,select_s,train_s\n";
    for (const auto& [key, agg] : groups) {
      const auto [mean, stddev] = mean_std(agg.final_accs);
      csv << std::get<0>(key) << ',' << std::get<1>(key) << ','
          << std::get<2>(key) << ',' << agg.final_accs.size() << ',' << mean
          << ',' << stddev << ',' << agg.embed_s << ',' << agg.select_s << ','
          << agg.train_s << '\n';
    }
    std::cout << "wrote " << csv_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradient-matching coreset toolkit"};
  app.require_subcommand(1);

  // embed
  auto* embed = app.add_subcommand("embed", "build a gradient embedding file");
  DataArgs embed_data;
  add_data_flags(embed, embed_data);
  std::string hidden = "128,128", mode = "full", family = "he_uniform";
  std::size_t samples = 10, dim = 1000;
  double scale = 1.0, density = 0.0;
  std::uint64_t init_seed = 0, projection_seed = 0;
  std::string embed_out = "embeddings.gmce";
  embed->add_option("--hidden", hidden, "hidden layer widths, comma separated");
  embed->add_option("--mode", mode, "full or last_layer");
  embed->add_option("-S,--samples", samples, "draws from the initialization distribution");
  embed->add_option("-d,--dim", dim, "projected dimension per draw");
  embed->add_option("--init-family", family, "he_uniform or he_normal");
  embed->add_option("--init-scale", scale, "initialization scale multiplier");
  embed->add_option("--init-seed", init_seed, "initialization seed");
  embed->add_option("--projection-seed", projection_seed, "projection seed");
  embed->add_option("--density", density, "projection density (0 = 1/sqrt(D))");
  embed->add_option("-o,--out", embed_out, "output .gmce path");

  // select
  auto* select = app.add_subcommand("select", "select a weighted coreset from an embedding file");
  DataArgs select_data;
  add_data_flags(select, select_data);
  std::string embeddings_path, select_out = "memory.gmcm", center = "best_uniform";
  std::size_t coreset_n = 100;
  double lambda = 0.5;
  bool no_clip = false;
  select->add_option("--embeddings", embeddings_path, ".gmce file")->required();
  select->add_option("-n,--size", coreset_n, "coreset size");
  select->add_option("--lambda", lambda, "regularization coefficient");
  select->add_flag("--no-clip", no_clip, "keep negative weights");
  select->add_option("--center", center, "regularizer center: best_uniform or zero");
  select->add_option("-o,--out", select_out, "output .gmcm path");

  // run
  auto* run = app.add_subcommand("run", "execute a continual-learning run config");
  std::string run_config, run_out = "metrics.jsonl", manifest, snapshot_dir;
  run->add_option("-c,--config", run_config, "run config file")->required();
  run->add_option("-o,--out", run_out, "metrics JSONL output");
  run->add_option("--manifest", manifest, "also write the scenario manifest here");
  run->add_option("--snapshot-dir", snapshot_dir, "write final memory snapshots here");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "univariate sensitivity sweep");
  std::string sweep_config, sweep_axis, sweep_values, sweep_out = "sweep.jsonl";
  sweep_cmd->add_option("-c,--config", sweep_config, "base run config")->required();
  sweep_cmd->add_option("--axis", sweep_axis, "S, d, lambda, init_family or init_scale")->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated axis values")->required();
  sweep_cmd->add_option("-o,--out", sweep_out, "metrics JSONL output");

  // report
  auto* report = app.add_subcommand("report", "aggregate a metrics file into a table");
  std::string report_metrics, report_csv;
  report->add_option("-m,--metrics", report_metrics, "metrics JSONL file")->required();
  report->add_option("--csv", report_csv, "also write aggregated CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (embed->parsed())
      return cmd_embed(embed_data, hidden, mode, samples, dim, family, scale,
                       init_seed, projection_seed, density, embed_out);
    if (select->parsed())
      return cmd_select(embeddings_path, select_data, coreset_n, lambda,
                        no_clip, center, select_out);
    if (run->parsed()) return cmd_run(run_config, run_out, manifest, snapshot_dir);
    if (sweep_cmd->parsed())
      return cmd_sweep(sweep_config, sweep_axis, sweep_values, sweep_out);
    if (report->parsed()) return cmd_report(report_metrics, report_csv);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
