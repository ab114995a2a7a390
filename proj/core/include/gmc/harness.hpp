#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "gmc/config.hpp"
#include "gmc/memory.hpp"
#include "gmc/scenarios.hpp"

namespace gmc {

struct PhaseTimings {
  double embed_seconds = 0.0;
  double select_seconds = 0.0;
  double train_seconds = 0.0;
};

struct RunMetrics {
  std::string run_id;
  std::string scenario;
  std::string strategy;
  std::size_t memory_size = 0;
  std::uint64_t seed = 0;
  std::vector<double> per_task_acc;  // full test set after each batch
  double final_acc = 0.0;
  /// Accuracy on each task's test slice after each batch, when the stream
  /// provides slices (class-incremental, rotated): [batch][slice].
  std::vector<std::vector<double>> task_slice_acc;
  PhaseTimings timings;
  std::vector<double> residual_norms;       // per batch, GMC strategies
  std::vector<std::size_t> clipped_counts;  // per batch, GMC strategies
  KeyValueMap config;
};

/// A finished run: metrics plus the artifacts needed to audit it
/// (final model, the memory it was trained from, and the exact seeds).
struct RunResult {
  RunMetrics metrics;
  ParamVector final_params;
  InitSpec final_init;       // initialization of the last (re)training
  TrainConfig train_config;  // effective per-run training config
  MemorySnapshot final_memory;
};

/// Materializes the scenario: loads or synthesizes data, standardizes with
/// training statistics, splits into the configured stream.
ScenarioStream build_scenario(const ScenarioSpec& spec);

/// Strategy instance for one run; seeds are offset deterministically by
/// the run seed.
std::unique_ptr<MemoryStrategy> make_strategy(const RunConfig& cfg,
                                              const ArchSpec& arch,
                                              std::uint64_t run_seed);

/// Argmax-logit accuracy; ties resolve to the lowest class index.
double evaluate(const ParamVector& params, const Dataset& test);

/// GDumb: per batch, update the memory, reinitialize, retrain from scratch
/// on the memory alone, evaluate. The memory is the sole mechanism against
/// forgetting.
RunResult run_gdumb(const ScenarioStream& stream, const RunConfig& cfg,
                    std::uint64_t seed);

/// Experience replay: per batch, train continually on batch + memory
/// (batch rows weight 1), then update the memory, then evaluate.
RunResult run_er(const ScenarioStream& stream, const RunConfig& cfg,
                 std::uint64_t seed);

RunResult run_one(const ScenarioStream& stream, const RunConfig& cfg,
                  std::uint64_t seed);

/// All configured seeds over a freshly built scenario.
std::vector<RunResult> run_all(const RunConfig& cfg);

enum class SweepAxis : std::uint8_t { samples, dim, lambda, init_family, init_scale };

SweepAxis sweep_axis_from_string(const std::string& s);
std::string to_string(SweepAxis axis);

/// Univariate sensitivity sweep: rerun the base config with the axis set
/// to each value (values are parsed per axis; init_family takes
/// he_uniform/he_normal).
std::vector<RunResult> sweep(const RunConfig& base, SweepAxis axis,
                             const std::vector<std::string>& values);

// --- metrics serialization (one JSON object per line) ----------------------

std::string metrics_to_json(const RunMetrics& m);
RunMetrics metrics_from_json(const std::string& line);
void write_metrics_jsonl(std::ostream& out, const std::vector<RunResult>& runs);
std::vector<RunMetrics> read_metrics_jsonl(std::istream& in);

}  // namespace gmc
