#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gmc/embedding.hpp"
#include "gmc/model.hpp"
#include "gmc/omp.hpp"

namespace gmc {

using KeyValueMap = std::map<std::string, std::string>;

/// `key = value` lines; '#' starts a comment; blank lines ignored.
KeyValueMap parse_key_value_stream(std::istream& in);
KeyValueMap parse_key_value_file(const std::string& path);

enum class StrategyKind : std::uint8_t {
  gmc,
  gmc_last_layer,
  gmc_local,
  reservoir,
  sliding_window,
  class_balance,
};

enum class RunnerKind : std::uint8_t { gdumb, er };

enum class ScenarioKind : std::uint8_t {
  sorted_taskfree,
  class_incremental,
  rotated_domain,
};

enum class DataSource : std::uint8_t { synth_blobs, csv };

std::string to_string(StrategyKind k);
std::string to_string(RunnerKind k);
std::string to_string(ScenarioKind k);
StrategyKind strategy_from_string(const std::string& s);
RunnerKind runner_from_string(const std::string& s);
ScenarioKind scenario_from_string(const std::string& s);

struct DataSpec {
  DataSource source = DataSource::synth_blobs;
  // synth_blobs
  int classes = 5;
  int per_class = 1000;
  int features = 8;
  double spread = 0.5;
  double drift = 0.0;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  // csv
  std::string train_csv;
  std::string test_csv;
  std::string label_column = "label";
  bool has_header = true;
  std::optional<std::pair<std::size_t, std::size_t>> image_shape;
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::sorted_taskfree;
  std::size_t feature_index = 0;
  std::size_t tasks = 10;           // sorted split
  std::size_t classes_per_task = 2;
  std::size_t folds = 4;
  std::uint64_t seed = 0;
  DataSpec data;
};

struct RunConfig {
  ScenarioSpec scenario;
  StrategyKind strategy = StrategyKind::reservoir;
  std::size_t memory_size = 100;  // n
  std::vector<std::size_t> hidden = {128, 128};
  TrainConfig train;
  EmbeddingSpec embedding;
  OmpConfig omp;  // coreset_size is filled from memory_size at run time
  std::vector<std::uint64_t> seeds = {1};
  std::uint64_t strategy_seed = 0;
  RunnerKind runner = RunnerKind::gdumb;

  void validate() const;
};

RunConfig parse_run_config(const KeyValueMap& kv);
RunConfig load_run_config(const std::string& path);

/// Flattened back to the config-file key space, for metrics records.
KeyValueMap config_snapshot(const RunConfig& cfg);

}  // namespace gmc
