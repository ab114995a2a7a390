#include "gmc/harness.hpp"

#include <chrono>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

namespace gmc {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

// Spreads run seeds far enough apart that per-sample seed offsets
// (init.seed + s, projection_seed + s) from different runs never collide.
constexpr std::uint64_t kRunSeedStride = 1000003;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ArchSpec arch_for(const ScenarioStream& stream, const RunConfig& cfg) {
  ArchSpec arch;
  arch.input_dim = static_cast<std::size_t>(stream.batches.front().features.cols());
  arch.hidden = cfg.hidden;
  arch.num_classes = static_cast<std::size_t>(stream.test_set.class_count);
  arch.validate();
  return arch;
}

TrainConfig effective_train(const RunConfig& cfg, std::uint64_t run_seed) {
  TrainConfig t = cfg.train;
  t.seed = cfg.train.seed + run_seed;
  return t;
}

EmbeddingSpec effective_embedding(const RunConfig& cfg, std::uint64_t run_seed) {
  EmbeddingSpec e = cfg.embedding;
  e.init.seed = cfg.embedding.init.seed + run_seed * kRunSeedStride;
  e.projection_seed = cfg.embedding.projection_seed + run_seed * kRunSeedStride;
  return e;
}

InitSpec reinit_spec(const RunConfig& cfg, std::uint64_t run_seed,
                     std::size_t task_index) {
  InitSpec init = cfg.embedding.init;
  init.seed = run_seed + task_index;
  return init;
}

WeightedDataset concat_weighted(const WeightedDataset& a,
                                const WeightedDataset& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  WeightedDataset out;
  out.features.resize(a.size() + b.size(), a.features.cols());
  out.features.topRows(a.size()) = a.features;
  out.features.bottomRows(b.size()) = b.features;
  out.weights.resize(a.size() + b.size());
  out.weights.head(a.size()) = a.weights;
  out.weights.tail(b.size()) = b.weights;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

struct RunRecorder {
  RunMetrics metrics;
  MemoryDiagnostics last_diag;

  void after_batch(const ScenarioStream& stream, const MemoryStrategy& memory,
                   const ParamVector& params) {
    metrics.per_task_acc.push_back(evaluate(params, stream.test_set));
    if (!stream.test_slices.empty()) {
      std::vector<double> slice_acc;
      slice_acc.reserve(stream.test_slices.size());
      for (const auto& slice : stream.test_slices) {
        Dataset sub;
        sub.features.resize(static_cast<Eigen::Index>(slice.size()),
                            stream.test_set.features.cols());
        sub.labels.reserve(slice.size());
        for (std::size_t i = 0; i < slice.size(); ++i) {
          sub.features.row(static_cast<Eigen::Index>(i)) =
              stream.test_set.features.row(slice[i]);
          sub.labels.push_back(
              stream.test_set.labels[static_cast<std::size_t>(slice[i])]);
        }
        sub.class_count = stream.test_set.class_count;
        slice_acc.push_back(evaluate(params, sub));
      }
      metrics.task_slice_acc.push_back(std::move(slice_acc));
    }
    const MemoryDiagnostics diag = memory.diagnostics();
    metrics.residual_norms.push_back(diag.residual_norm);
    metrics.clipped_counts.push_back(diag.clipped_weights);
    last_diag = diag;
  }

  void finish(const MemoryStrategy& memory) {
    metrics.final_acc =
        metrics.per_task_acc.empty() ? 0.0 : metrics.per_task_acc.back();
    const MemoryDiagnostics diag = memory.diagnostics();
    metrics.timings.embed_seconds = diag.embed_seconds;
    metrics.timings.select_seconds = diag.select_seconds;
  }
};

RunMetrics base_metrics(const ScenarioStream& stream, const RunConfig& cfg,
                        std::uint64_t seed) {
  RunMetrics m;
  m.scenario = stream.kind;
  m.strategy = to_string(cfg.strategy);
  m.memory_size = cfg.memory_size;
  m.seed = seed;
  m.run_id = to_string(cfg.runner) + "-" + stream.kind + "-" + m.strategy +
             "-n" + std::to_string(cfg.memory_size) + "-seed" +
             std::to_string(seed);
  m.config = config_snapshot(cfg);
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario and strategy construction
// ---------------------------------------------------------------------------

ScenarioStream build_scenario(const ScenarioSpec& spec) {
  Dataset train, test;
  if (spec.data.source == DataSource::synth_blobs) {
    Dataset all = synth_blobs(spec.data.classes, spec.data.per_class,
                              spec.data.features, spec.data.spread,
                              spec.data.drift, spec.data.seed);
    if (spec.data.image_shape) all.image_shape = spec.data.image_shape;
    std::tie(train, test) = holdout_split(all, spec.data.test_fraction,
                                          spec.data.seed + 1);
    const Standardizer st = Standardizer::fit(train);
    st.apply(train);
    st.apply(test);
  } else {
    if (spec.data.test_csv.empty()) {
      Dataset all = load_csv(spec.data.train_csv, spec.data.label_column,
                             spec.data.has_header);
      if (spec.data.image_shape) all.image_shape = spec.data.image_shape;
      std::tie(train, test) =
          holdout_split(all, spec.data.test_fraction, spec.data.seed + 1);
    } else {
      std::tie(train, test) =
          load_csv_train_test(spec.data.train_csv, spec.data.test_csv,
                              spec.data.label_column, spec.data.has_header);
      if (spec.data.image_shape) {
        train.image_shape = spec.data.image_shape;
        test.image_shape = spec.data.image_shape;
      }
    }
  }

  ScenarioStream stream;
  switch (spec.kind) {
    case ScenarioKind::sorted_taskfree:
      stream = sorted_taskfree_split(train, test, spec.feature_index, spec.tasks);
      break;
    case ScenarioKind::class_incremental:
      stream = class_incremental_split(train, test, spec.classes_per_task);
      break;
    case ScenarioKind::rotated_domain:
      stream = rotated_domain_split(train, test, spec.folds, spec.seed);
      break;
  }
  stream.seed = spec.seed;
  stream.validate();
  return stream;
}

std::unique_ptr<MemoryStrategy> make_strategy(const RunConfig& cfg,
                                              const ArchSpec& arch,
                                              std::uint64_t run_seed) {
  switch (cfg.strategy) {
    case StrategyKind::gmc:
    case StrategyKind::gmc_last_layer:
    case StrategyKind::gmc_local: {
      OmpConfig omp = cfg.omp;
      omp.coreset_size = cfg.memory_size;
      return std::make_unique<GmcMemory>(arch, effective_embedding(cfg, run_seed),
                                         omp);
    }
    case StrategyKind::reservoir:
      return std::make_unique<ReservoirMemory>(cfg.memory_size,
                                               cfg.strategy_seed + run_seed);
    case StrategyKind::sliding_window:
      return std::make_unique<SlidingWindowMemory>(cfg.memory_size);
    case StrategyKind::class_balance:
      return std::make_unique<ClassBalanceMemory>(cfg.memory_size,
                                                  cfg.strategy_seed + run_seed);
  }
  throw ConfigError("unknown strategy");
}

double evaluate(const ParamVector& params, const Dataset& test) {
  if (test.size() == 0) throw ConfigError("cannot evaluate on an empty test set");
  const Eigen::MatrixXd logits = forward(params, test.features);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index pred = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, pred)) pred = c;  // ties -> lowest index
    if (static_cast<int>(pred) == test.labels[static_cast<std::size_t>(i)])
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

RunResult run_gdumb(const ScenarioStream& stream, const RunConfig& cfg,
                    std::uint64_t seed) {
  stream.validate();
  cfg.validate();
  const ArchSpec arch = arch_for(stream, cfg);
  const TrainConfig train_cfg = effective_train(cfg, seed);
  auto memory = make_strategy(cfg, arch, seed);

  RunRecorder rec;
  rec.metrics = base_metrics(stream, cfg, seed);

  InitSpec init = reinit_spec(cfg, seed, 0);
  ParamVector params = init_params(arch, init);
  for (std::size_t t = 0; t < stream.batches.size(); ++t) {
    const WeightedDataset batch = stream.batches[t].to_weighted();
    if (batch.size() == 0) throw ConfigError("empty batch in stream");
    MemoryUpdateContext ctx;
    ctx.current_params = &params;  // previous iterate, for the local variant
    memory->update(batch, ctx);

    init = reinit_spec(cfg, seed, t);
    params = init_params(arch, init);
    const WeightedDataset mem_data = memory->as_weighted_dataset();
    if (mem_data.size() > 0) {
      const auto t0 = Clock::now();
      params = train(std::move(params), mem_data, train_cfg);
      rec.metrics.timings.train_seconds += seconds_since(t0);
    }
    rec.after_batch(stream, *memory, params);
  }
  rec.finish(*memory);

  RunResult result;
  result.metrics = std::move(rec.metrics);
  result.final_params = std::move(params);
  result.final_init = init;
  result.train_config = train_cfg;
  result.final_memory = {memory->strategy_id(), memory->capacity(),
                         memory->items(), memory->weights()};
  return result;
}

RunResult run_er(const ScenarioStream& stream, const RunConfig& cfg,
                 std::uint64_t seed) {
  stream.validate();
  cfg.validate();
  const ArchSpec arch = arch_for(stream, cfg);
  const TrainConfig train_cfg = effective_train(cfg, seed);
  auto memory = make_strategy(cfg, arch, seed);

  RunRecorder rec;
  rec.metrics = base_metrics(stream, cfg, seed);
  // epochs are counted over batch + memory jointly, not the batch alone
  rec.metrics.config["er.epochs_over"] = "union";

  const InitSpec init = reinit_spec(cfg, seed, 0);
  ParamVector params = init_params(arch, init);
  for (std::size_t t = 0; t < stream.batches.size(); ++t) {
    const WeightedDataset batch = stream.batches[t].to_weighted();
    if (batch.size() == 0) throw ConfigError("empty batch in stream");

    const WeightedDataset union_data =
        concat_weighted(batch, memory->as_weighted_dataset());
    const auto t0 = Clock::now();
    params = train(std::move(params), union_data, train_cfg);
    rec.metrics.timings.train_seconds += seconds_since(t0);

    // Memory is updated once training for the task has finished.
    if (memory->capacity() > 0) {
      MemoryUpdateContext ctx;
      ctx.current_params = &params;
      memory->update(batch, ctx);
    }
    rec.after_batch(stream, *memory, params);
  }
  rec.finish(*memory);

  RunResult result;
  result.metrics = std::move(rec.metrics);
  result.final_params = std::move(params);
  result.final_init = init;
  result.train_config = train_cfg;
  result.final_memory = {memory->strategy_id(), memory->capacity(),
                         memory->items(), memory->weights()};
  return result;
}

RunResult run_one(const ScenarioStream& stream, const RunConfig& cfg,
                  std::uint64_t seed) {
  return cfg.runner == RunnerKind::gdumb ? run_gdumb(stream, cfg, seed)
                                         : run_er(stream, cfg, seed);
}

std::vector<RunResult> run_all(const RunConfig& cfg) {
  const ScenarioStream stream = build_scenario(cfg.scenario);
  std::vector<RunResult> results;
  results.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds)
    results.push_back(run_one(stream, cfg, seed));
  return results;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "S" || s == "samples") return SweepAxis::samples;
  if (s == "d" || s == "dim") return SweepAxis::dim;
  if (s == "lambda") return SweepAxis::lambda;
  if (s == "init_family") return SweepAxis::init_family;
  if (s == "init_scale") return SweepAxis::init_scale;
  throw ConfigError("unknown sweep axis '" + s + "'");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::samples: return "S";
    case SweepAxis::dim: return "d";
    case SweepAxis::lambda: return "lambda";
    case SweepAxis::init_family: return "init_family";
    case SweepAxis::init_scale: return "init_scale";
  }
  return "?";
}

std::vector<RunResult> sweep(const RunConfig& base, SweepAxis axis,
                             const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<RunResult> all;
  for (const std::string& value : values) {
    RunConfig cfg = base;
    switch (axis) {
      case SweepAxis::samples: {
        std::size_t s = 0;
        std::istringstream(value) >> s;
        if (s == 0) throw ConfigError("sweep S value must be a positive integer");
        cfg.embedding.samples = s;
        break;
      }
      case SweepAxis::dim: {
        std::size_t d = 0;
        std::istringstream(value) >> d;
        if (d == 0) throw ConfigError("sweep d value must be a positive integer");
        cfg.embedding.dim = d;
        break;
      }
      case SweepAxis::lambda: {
        cfg.omp.lambda = std::stod(value);
        break;
      }
      case SweepAxis::init_family: {
        if (value == "he_uniform") cfg.embedding.init.family = InitFamily::he_uniform;
        else if (value == "he_normal") cfg.embedding.init.family = InitFamily::he_normal;
        else throw ConfigError("unknown init family '" + value + "'");
        break;
      }
      case SweepAxis::init_scale: {
        cfg.embedding.init.scale = std::stod(value);
        break;
      }
    }
    auto results = run_all(cfg);
    for (auto& r : results) {
      r.metrics.run_id += "-" + to_string(axis) + "=" + value;
      all.push_back(std::move(r));
    }
  }
  return all;
}

// ---------------------------------------------------------------------------
// Metrics serialization
// ---------------------------------------------------------------------------

std::string metrics_to_json(const RunMetrics& m) {
  json j;
  j["run_id"] = m.run_id;
  j["scenario"] = m.scenario;
  j["strategy"] = m.strategy;
  j["n"] = m.memory_size;
  j["seed"] = m.seed;
  j["per_task_acc"] = m.per_task_acc;
  j["final_acc"] = m.final_acc;
  if (!m.task_slice_acc.empty()) j["task_slice_acc"] = m.task_slice_acc;
  j["timings"] = {{"embed_s", m.timings.embed_seconds},
                  {"select_s", m.timings.select_seconds},
                  {"train_s", m.timings.train_seconds}};
  j["residual_norms"] = m.residual_norms;
  j["clipped_counts"] = m.clipped_counts;
  j["config"] = m.config;
  return j.dump();
}

RunMetrics metrics_from_json(const std::string& line) {
  RunMetrics m;
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad metrics line: ") + e.what());
  }
  m.run_id = j.at("run_id").get<std::string>();
  m.scenario = j.at("scenario").get<std::string>();
  m.strategy = j.at("strategy").get<std::string>();
  m.memory_size = j.at("n").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.per_task_acc = j.at("per_task_acc").get<std::vector<double>>();
  m.final_acc = j.at("final_acc").get<double>();
  if (j.contains("task_slice_acc"))
    m.task_slice_acc = j.at("task_slice_acc").get<std::vector<std::vector<double>>>();
  const auto& t = j.at("timings");
  m.timings.embed_seconds = t.at("embed_s").get<double>();
  m.timings.select_seconds = t.at("select_s").get<double>();
  m.timings.train_seconds = t.at("train_s").get<double>();
  if (j.contains("residual_norms"))
    m.residual_norms = j.at("residual_norms").get<std::vector<double>>();
  if (j.contains("clipped_counts"))
    m.clipped_counts = j.at("clipped_counts").get<std::vector<std::size_t>>();
  if (j.contains("config")) m.config = j.at("config").get<KeyValueMap>();
  return m;
}

void write_metrics_jsonl(std::ostream& out, const std::vector<RunResult>& runs) {
  for (const auto& r : runs) out << metrics_to_json(r.metrics) << '\n';
}

std::vector<RunMetrics> read_metrics_jsonl(std::istream& in) {
  std::vector<RunMetrics> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(metrics_from_json(line));
  }
  return out;
}

}  // namespace gmc
