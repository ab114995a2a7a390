#include "gmc/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "gmc/common.hpp"
#include "gmc/memory.hpp"

namespace gmc {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) parts.push_back(trim(part));
  return parts;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  const auto res = std::from_chars(begin, end, out);
  if (res.ec != std::errc() || res.ptr != end)
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" +
                    value + "'");
}

InitFamily family_from_string(const std::string& s) {
  if (s == "he_uniform") return InitFamily::he_uniform;
  if (s == "he_normal") return InitFamily::he_normal;
  throw ConfigError("unknown init family '" + s + "'");
}

std::string family_to_string(InitFamily f) {
  return f == InitFamily::he_uniform ? "he_uniform" : "he_normal";
}

}  // namespace

KeyValueMap parse_key_value_stream(std::istream& in) {
  KeyValueMap kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (kv.count(key))
      throw ConfigError("duplicate config key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

KeyValueMap parse_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_key_value_stream(in);
}

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::gmc: return "gmc";
    case StrategyKind::gmc_last_layer: return "gmc_last_layer";
    case StrategyKind::gmc_local: return "gmc_local";
    case StrategyKind::reservoir: return "reservoir";
    case StrategyKind::sliding_window: return "sliding_window";
    case StrategyKind::class_balance: return "class_balance";
  }
  return "?";
}

std::string to_string(RunnerKind k) {
  return k == RunnerKind::gdumb ? "gdumb" : "er";
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::sorted_taskfree: return "sorted_taskfree";
    case ScenarioKind::class_incremental: return "class_incremental";
    case ScenarioKind::rotated_domain: return "rotated_domain";
  }
  return "?";
}

StrategyKind strategy_from_string(const std::string& s) {
  if (s == "gmc") return StrategyKind::gmc;
  if (s == "gmc_last_layer") return StrategyKind::gmc_last_layer;
  if (s == "gmc_local") return StrategyKind::gmc_local;
  if (s == "reservoir") return StrategyKind::reservoir;
  if (s == "sliding_window") return StrategyKind::sliding_window;
  if (s == "class_balance") return StrategyKind::class_balance;
  throw ConfigError("unknown strategy '" + s + "'");
}

RunnerKind runner_from_string(const std::string& s) {
  if (s == "gdumb") return RunnerKind::gdumb;
  if (s == "er") return RunnerKind::er;
  throw ConfigError("unknown runner '" + s + "'");
}

ScenarioKind scenario_from_string(const std::string& s) {
  if (s == "sorted_taskfree") return ScenarioKind::sorted_taskfree;
  if (s == "class_incremental") return ScenarioKind::class_incremental;
  if (s == "rotated_domain") return ScenarioKind::rotated_domain;
  throw ConfigError("unknown scenario kind '" + s + "'");
}

void RunConfig::validate() const {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (memory_size == 0 &&
      (strategy == StrategyKind::gmc || strategy == StrategyKind::gmc_last_layer ||
       strategy == StrategyKind::gmc_local))
    throw ConfigError("GMC strategies need a positive memory size");
  if (train.epochs == 0) throw ConfigError("train.epochs must be positive");
  train.validate();
  if (scenario.data.source == DataSource::csv && scenario.data.train_csv.empty())
    throw ConfigError("data.train_csv is required for csv data");
}

RunConfig parse_run_config(const KeyValueMap& kv) {
  RunConfig cfg;
  cfg.train.epochs = 50;
  bool embedding_dim_given = false;

  std::set<std::string> seen;
  const auto get = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    seen.insert(key);
    return &it->second;
  };

  if (const auto* v = get("runner")) cfg.runner = runner_from_string(*v);
  if (const auto* v = get("strategy")) cfg.strategy = strategy_from_string(*v);
  if (const auto* v = get("n")) cfg.memory_size = parse_number<std::size_t>("n", *v);
  if (const auto* v = get("seeds")) {
    cfg.seeds.clear();
    for (const auto& part : split(*v, ','))
      cfg.seeds.push_back(parse_number<std::uint64_t>("seeds", part));
  }
  if (const auto* v = get("strategy_seed"))
    cfg.strategy_seed = parse_number<std::uint64_t>("strategy_seed", *v);
  if (const auto* v = get("arch.hidden")) {
    cfg.hidden.clear();
    for (const auto& part : split(*v, ','))
      cfg.hidden.push_back(parse_number<std::size_t>("arch.hidden", part));
  }

  if (const auto* v = get("scenario.kind")) cfg.scenario.kind = scenario_from_string(*v);
  if (const auto* v = get("scenario.feature_index"))
    cfg.scenario.feature_index = parse_number<std::size_t>("scenario.feature_index", *v);
  if (const auto* v = get("scenario.tasks"))
    cfg.scenario.tasks = parse_number<std::size_t>("scenario.tasks", *v);
  if (const auto* v = get("scenario.classes_per_task"))
    cfg.scenario.classes_per_task =
        parse_number<std::size_t>("scenario.classes_per_task", *v);
  if (const auto* v = get("scenario.folds"))
    cfg.scenario.folds = parse_number<std::size_t>("scenario.folds", *v);
  if (const auto* v = get("scenario.seed"))
    cfg.scenario.seed = parse_number<std::uint64_t>("scenario.seed", *v);

  auto& data = cfg.scenario.data;
  if (const auto* v = get("data.source")) {
    if (*v == "synth_blobs") data.source = DataSource::synth_blobs;
    else if (*v == "csv") data.source = DataSource::csv;
    else throw ConfigError("unknown data source '" + *v + "'");
  }
  if (const auto* v = get("data.classes")) data.classes = parse_number<int>("data.classes", *v);
  if (const auto* v = get("data.per_class")) data.per_class = parse_number<int>("data.per_class", *v);
  if (const auto* v = get("data.features")) data.features = parse_number<int>("data.features", *v);
  if (const auto* v = get("data.spread")) data.spread = parse_number<double>("data.spread", *v);
  if (const auto* v = get("data.drift")) data.drift = parse_number<double>("data.drift", *v);
  if (const auto* v = get("data.seed")) data.seed = parse_number<std::uint64_t>("data.seed", *v);
  if (const auto* v = get("data.test_fraction"))
    data.test_fraction = parse_number<double>("data.test_fraction", *v);
  if (const auto* v = get("data.train_csv")) data.train_csv = *v;
  if (const auto* v = get("data.test_csv")) data.test_csv = *v;
  if (const auto* v = get("data.label_column")) data.label_column = *v;
  if (const auto* v = get("data.has_header")) data.has_header = parse_bool("data.has_header", *v);
  if (const auto* v = get("data.image_shape")) {
    const auto parts = split(*v, 'x');
    if (parts.size() != 2)
      throw ConfigError("data.image_shape: expected HxW, got '" + *v + "'");
    data.image_shape = {parse_number<std::size_t>("data.image_shape", parts[0]),
                        parse_number<std::size_t>("data.image_shape", parts[1])};
  }

  if (const auto* v = get("train.step_size")) cfg.train.step_size = parse_number<double>("train.step_size", *v);
  if (const auto* v = get("train.weight_decay")) cfg.train.weight_decay = parse_number<double>("train.weight_decay", *v);
  if (const auto* v = get("train.minibatch")) cfg.train.minibatch = parse_number<std::size_t>("train.minibatch", *v);
  if (const auto* v = get("train.epochs")) cfg.train.epochs = parse_number<std::size_t>("train.epochs", *v);
  if (const auto* v = get("train.adam_beta1")) cfg.train.adam_beta1 = parse_number<double>("train.adam_beta1", *v);
  if (const auto* v = get("train.adam_beta2")) cfg.train.adam_beta2 = parse_number<double>("train.adam_beta2", *v);
  if (const auto* v = get("train.adam_eps")) cfg.train.adam_eps = parse_number<double>("train.adam_eps", *v);
  if (const auto* v = get("train.seed")) cfg.train.seed = parse_number<std::uint64_t>("train.seed", *v);

  if (const auto* v = get("embedding.S")) cfg.embedding.samples = parse_number<std::size_t>("embedding.S", *v);
  if (const auto* v = get("embedding.d")) {
    cfg.embedding.dim = parse_number<std::size_t>("embedding.d", *v);
    embedding_dim_given = true;
  }
  if (const auto* v = get("embedding.init.family")) cfg.embedding.init.family = family_from_string(*v);
  if (const auto* v = get("embedding.init.scale")) cfg.embedding.init.scale = parse_number<double>("embedding.init.scale", *v);
  if (const auto* v = get("embedding.init.seed")) cfg.embedding.init.seed = parse_number<std::uint64_t>("embedding.init.seed", *v);
  if (const auto* v = get("embedding.projection_seed"))
    cfg.embedding.projection_seed = parse_number<std::uint64_t>("embedding.projection_seed", *v);
  if (const auto* v = get("embedding.density")) cfg.embedding.density = parse_number<double>("embedding.density", *v);

  if (const auto* v = get("er.epochs_over")) {
    if (*v != "union")
      throw ConfigError("er.epochs_over: only 'union' is supported");
  }
  if (const auto* v = get("omp.lambda")) cfg.omp.lambda = parse_number<double>("omp.lambda", *v);
  if (const auto* v = get("omp.clip_negative")) cfg.omp.clip_negative = parse_bool("omp.clip_negative", *v);
  if (const auto* v = get("omp.center")) {
    if (*v == "best_uniform") cfg.omp.center = RegCenter::best_uniform;
    else if (*v == "zero") cfg.omp.center = RegCenter::zero;
    else throw ConfigError("unknown omp.center '" + *v + "'");
  }

  for (const auto& [key, value] : kv) {
    (void)value;
    if (!seen.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  // Strategy fixes the embedding mode; the local variant defaults to the
  // larger projection dimension so embedding heights line up.
  switch (cfg.strategy) {
    case StrategyKind::gmc: cfg.embedding.mode = EmbeddingMode::full; break;
    case StrategyKind::gmc_last_layer: cfg.embedding.mode = EmbeddingMode::last_layer; break;
    case StrategyKind::gmc_local:
      cfg.embedding.mode = EmbeddingMode::local;
      cfg.embedding.samples = 1;
      if (!embedding_dim_given) cfg.embedding.dim = kDefaultLocalDim;
      break;
    default: break;
  }

  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(parse_key_value_file(path));
}

KeyValueMap config_snapshot(const RunConfig& cfg) {
  KeyValueMap kv;
  const auto put = [&](const std::string& k, const auto& v) {
    std::ostringstream os;
    os << v;
    kv[k] = os.str();
  };
  put("runner", to_string(cfg.runner));
  put("strategy", to_string(cfg.strategy));
  put("n", cfg.memory_size);
  {
    std::ostringstream os;
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
      os << (i ? "," : "") << cfg.seeds[i];
    kv["seeds"] = os.str();
  }
  put("strategy_seed", cfg.strategy_seed);
  {
    std::ostringstream os;
    for (std::size_t i = 0; i < cfg.hidden.size(); ++i)
      os << (i ? "," : "") << cfg.hidden[i];
    kv["arch.hidden"] = os.str();
  }
  put("scenario.kind", to_string(cfg.scenario.kind));
  put("scenario.feature_index", cfg.scenario.feature_index);
  put("scenario.tasks", cfg.scenario.tasks);
  put("scenario.classes_per_task", cfg.scenario.classes_per_task);
  put("scenario.folds", cfg.scenario.folds);
  put("scenario.seed", cfg.scenario.seed);
  const auto& data = cfg.scenario.data;
  kv["data.source"] = data.source == DataSource::csv ? "csv" : "synth_blobs";
  if (data.source == DataSource::csv) {
    kv["data.train_csv"] = data.train_csv;
    kv["data.test_csv"] = data.test_csv;
    kv["data.label_column"] = data.label_column;
    kv["data.has_header"] = data.has_header ? "true" : "false";
  } else {
    put("data.classes", data.classes);
    put("data.per_class", data.per_class);
    put("data.features", data.features);
    put("data.spread", data.spread);
    put("data.drift", data.drift);
    put("data.seed", data.seed);
    put("data.test_fraction", data.test_fraction);
  }
  if (data.image_shape)
    kv["data.image_shape"] = std::to_string(data.image_shape->first) + "x" +
                             std::to_string(data.image_shape->second);
  put("train.step_size", cfg.train.step_size);
  put("train.weight_decay", cfg.train.weight_decay);
  put("train.minibatch", cfg.train.minibatch);
  put("train.epochs", cfg.train.epochs);
  put("train.adam_beta1", cfg.train.adam_beta1);
  put("train.adam_beta2", cfg.train.adam_beta2);
  put("train.adam_eps", cfg.train.adam_eps);
  put("train.seed", cfg.train.seed);
  put("embedding.S", cfg.embedding.samples);
  put("embedding.d", cfg.embedding.dim);
  kv["embedding.init.family"] = family_to_string(cfg.embedding.init.family);
  put("embedding.init.scale", cfg.embedding.init.scale);
  put("embedding.init.seed", cfg.embedding.init.seed);
  put("embedding.projection_seed", cfg.embedding.projection_seed);
  put("embedding.density", cfg.embedding.density);
  put("omp.lambda", cfg.omp.lambda);
  kv["omp.clip_negative"] = cfg.omp.clip_negative ? "true" : "false";
  kv["omp.center"] =
      cfg.omp.center == RegCenter::best_uniform ? "best_uniform" : "zero";
  return kv;
}

}  // namespace gmc
