#include "gmc/memory.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>

namespace gmc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<MemoryItem> batch_items(const WeightedDataset& batch) {
  std::vector<MemoryItem> items;
  items.reserve(static_cast<std::size_t>(batch.size()));
  for (Eigen::Index i = 0; i < batch.size(); ++i)
    items.push_back({batch.features.row(i).transpose(),
                     batch.labels[static_cast<std::size_t>(i)]});
  return items;
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("truncated memory snapshot");
  return v;
}

constexpr char kMagic[4] = {'G', 'M', 'C', 'M'};
constexpr std::uint16_t kSnapshotVersion = 1;

}  // namespace

WeightedDataset MemoryStrategy::as_weighted_dataset() const {
  std::size_t kept = 0;
  for (Eigen::Index i = 0; i < weights_.size(); ++i)
    if (weights_(i) > 0.0) ++kept;

  WeightedDataset out;
  const Eigen::Index dim = items_.empty() ? 0 : items_.front().features.size();
  out.features.resize(static_cast<Eigen::Index>(kept), dim);
  out.weights.resize(static_cast<Eigen::Index>(kept));
  out.labels.reserve(kept);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const double w = weights_(static_cast<Eigen::Index>(i));
    if (w <= 0.0) continue;
    out.features.row(row) = items_[i].features.transpose();
    out.weights(row) = w;
    out.labels.push_back(items_[i].label);
    ++row;
  }
  return out;
}

// ---------------------------------------------------------------------------
// GmcMemory
// ---------------------------------------------------------------------------

GmcMemory::GmcMemory(ArchSpec arch, EmbeddingSpec spec, OmpConfig omp)
    : MemoryStrategy(omp.coreset_size),
      arch_(std::move(arch)),
      spec_(std::move(spec)),
      omp_(omp) {
  arch_.validate();
  spec_.validate();
  omp_.validate();
  target_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec_.embed_dim()));
}

std::string_view GmcMemory::name() const {
  switch (spec_.mode) {
    case EmbeddingMode::full: return "gmc";
    case EmbeddingMode::last_layer: return "gmc_last_layer";
    case EmbeddingMode::local: return "gmc_local";
  }
  return "gmc";
}

std::uint8_t GmcMemory::strategy_id() const {
  return static_cast<std::uint8_t>(spec_.mode);  // 0, 1, 2
}

void GmcMemory::update(const WeightedDataset& batch,
                       const MemoryUpdateContext& ctx) {
  if (spec_.mode == EmbeddingMode::local) {
    if (ctx.current_params == nullptr)
      throw ConfigError("local GMC requires the current training iterate");
    ingest_local(batch, *ctx.current_params);
    return;
  }
  const auto t0 = Clock::now();
  const EmbeddingMatrix embeddings = build_embeddings(batch, arch_, spec_);
  diag_.embed_seconds += seconds_since(t0);
  ingest(batch, embeddings);
}

void GmcMemory::reselect(const std::vector<MemoryItem>& pool,
                         const EmbeddingMatrix& dictionary) {
  OmpConfig cfg = omp_;
  cfg.coreset_size = std::min<std::size_t>(
      cfg.coreset_size, static_cast<std::size_t>(dictionary.cols()));

  const auto t0 = Clock::now();
  const Selection sel = omp_select(dictionary, target_, cfg);
  diag_.select_seconds += seconds_since(t0);

  std::vector<MemoryItem> picked;
  picked.reserve(sel.indices.size());
  for (std::size_t idx : sel.indices) picked.push_back(pool[idx]);
  items_ = std::move(picked);
  weights_ = sel.weights;
  columns_ = dictionary.select(sel.indices);

  diag_.residual_norm = sel.residual_norm;
  diag_.target_norm = target_.norm();
  diag_.clipped_weights = sel.clipped_count;
}

void GmcMemory::ingest(const WeightedDataset& batch,
                       const EmbeddingMatrix& embeddings) {
  if (batch.size() == 0) throw ConfigError("cannot ingest an empty batch");
  if (embeddings.cols() != batch.size())
    throw ConfigError("embedding count does not match batch size");
  if (spec_.mode == EmbeddingMode::local)
    throw ConfigError("use ingest_local for mode=local");
  if (!(embeddings.spec() == spec_))
    throw ConfigError("batch embeddings were built under a different spec");
  if (columns_.cols() > 0) columns_.require_compatible(embeddings);

  target_ += sum_columns(embeddings);

  const EmbeddingMatrix dictionary =
      columns_.cols() > 0 ? EmbeddingMatrix::concat(columns_, embeddings)
                          : embeddings;
  std::vector<MemoryItem> pool = items_;
  for (auto& item : batch_items(batch)) pool.push_back(std::move(item));
  reselect(pool, dictionary);
}

void GmcMemory::ingest_local(const WeightedDataset& batch,
                             const ParamVector& params) {
  if (batch.size() == 0) throw ConfigError("cannot ingest an empty batch");
  if (!(params.arch == arch_))
    throw ConfigError("iterate architecture does not match the memory");

  // Pool = retained items + incoming batch, all re-embedded at `params`.
  std::vector<MemoryItem> pool = items_;
  for (auto& item : batch_items(batch)) pool.push_back(std::move(item));

  WeightedDataset union_data;
  union_data.features.resize(static_cast<Eigen::Index>(pool.size()),
                             batch.features.cols());
  union_data.weights = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(pool.size()));
  union_data.labels.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    union_data.features.row(static_cast<Eigen::Index>(i)) =
        pool[i].features.transpose();
    union_data.labels.push_back(pool[i].label);
  }

  const auto t0 = Clock::now();
  const EmbeddingMatrix emb = local_embeddings(
      params, union_data, spec_.dim, spec_.projection_seed,
      spec_.identity_projection);
  diag_.embed_seconds += seconds_since(t0);

  // Approximate target: summed gradients of coreset items and the batch.
  target_ = sum_columns(emb);
  reselect(pool, emb);
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

ReservoirMemory::ReservoirMemory(std::size_t capacity, std::uint64_t seed)
    : MemoryStrategy(capacity), rng_(seed) {}

void ReservoirMemory::update(const WeightedDataset& batch,
                             const MemoryUpdateContext&) {
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    ++stream_count_;
    MemoryItem item{batch.features.row(i).transpose(),
                    batch.labels[static_cast<std::size_t>(i)]};
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else if (capacity_ > 0) {
      const std::uint64_t slot = rng_.below(stream_count_);
      if (slot < capacity_) items_[static_cast<std::size_t>(slot)] = std::move(item);
    }
  }
  weights_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(items_.size()));
}

SlidingWindowMemory::SlidingWindowMemory(std::size_t capacity)
    : MemoryStrategy(capacity) {}

void SlidingWindowMemory::update(const WeightedDataset& batch,
                                 const MemoryUpdateContext&) {
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    items_.push_back({batch.features.row(i).transpose(),
                      batch.labels[static_cast<std::size_t>(i)]});
    if (items_.size() > capacity_) items_.erase(items_.begin());
  }
  weights_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(items_.size()));
}

ClassBalanceMemory::ClassBalanceMemory(std::size_t capacity, std::uint64_t seed)
    : MemoryStrategy(capacity), rng_(seed) {}

void ClassBalanceMemory::bump(int label) {
  if (label < 0) throw ConfigError("negative label");
  if (counts_.size() <= static_cast<std::size_t>(label))
    counts_.resize(static_cast<std::size_t>(label) + 1, 0);
  ++counts_[static_cast<std::size_t>(label)];
}

void ClassBalanceMemory::update(const WeightedDataset& batch,
                                const MemoryUpdateContext&) {
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    MemoryItem item{batch.features.row(i).transpose(),
                    batch.labels[static_cast<std::size_t>(i)]};
    if (items_.size() < capacity_) {
      bump(item.label);
      items_.push_back(std::move(item));
      continue;
    }
    if (capacity_ == 0) continue;
    const std::size_t max_count =
        *std::max_element(counts_.begin(), counts_.end());
    const std::size_t label_count =
        static_cast<std::size_t>(item.label) < counts_.size()
            ? counts_[static_cast<std::size_t>(item.label)]
            : 0;
    if (label_count >= max_count) continue;  // class already saturated

    // Evict a random item belonging to one of the largest classes.
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < items_.size(); ++j)
      if (counts_[static_cast<std::size_t>(items_[j].label)] == max_count)
        candidates.push_back(j);
    const std::size_t victim =
        candidates[static_cast<std::size_t>(rng_.below(candidates.size()))];
    --counts_[static_cast<std::size_t>(items_[victim].label)];
    bump(item.label);
    items_[victim] = std::move(item);
  }
  weights_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(items_.size()));
}

// ---------------------------------------------------------------------------
// Snapshot io
// ---------------------------------------------------------------------------

void write_memory_snapshot(const std::string& path, const MemorySnapshot& snap) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_raw(out, kSnapshotVersion);
  write_raw(out, snap.strategy_id);
  write_raw(out, snap.capacity);
  write_raw(out, static_cast<std::uint64_t>(snap.items.size()));
  const std::uint64_t dim =
      snap.items.empty() ? 0 : static_cast<std::uint64_t>(snap.items.front().features.size());
  write_raw(out, dim);
  for (std::size_t i = 0; i < snap.items.size(); ++i) {
    const auto& item = snap.items[i];
    if (static_cast<std::uint64_t>(item.features.size()) != dim)
      throw ConfigError("snapshot items disagree on feature dimension");
    write_raw(out, static_cast<std::uint32_t>(item.label));
    out.write(reinterpret_cast<const char*>(item.features.data()),
              static_cast<std::streamsize>(sizeof(double) * dim));
    write_raw(out, snap.weights(static_cast<Eigen::Index>(i)));
  }
  if (!out) throw ConfigError("failed to write " + path);
}

void write_memory_snapshot(const std::string& path, const MemoryStrategy& mem) {
  MemorySnapshot snap;
  snap.strategy_id = mem.strategy_id();
  snap.capacity = mem.capacity();
  snap.items = mem.items();
  snap.weights = mem.weights();
  write_memory_snapshot(path, snap);
}

MemorySnapshot read_memory_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::string_view(magic, 4) != std::string_view(kMagic, 4))
    throw ConfigError("not a memory snapshot (bad magic)");
  const auto version = read_raw<std::uint16_t>(in);
  if (version != kSnapshotVersion)
    throw ConfigError("unsupported snapshot version " + std::to_string(version));

  MemorySnapshot snap;
  snap.strategy_id = read_raw<std::uint8_t>(in);
  snap.capacity = read_raw<std::uint64_t>(in);
  const auto count = read_raw<std::uint64_t>(in);
  const auto dim = read_raw<std::uint64_t>(in);
  snap.items.resize(count);
  snap.weights.resize(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    snap.items[i].label = static_cast<int>(read_raw<std::uint32_t>(in));
    snap.items[i].features.resize(static_cast<Eigen::Index>(dim));
    in.read(reinterpret_cast<char*>(snap.items[i].features.data()),
            static_cast<std::streamsize>(sizeof(double) * dim));
    snap.weights(static_cast<Eigen::Index>(i)) = read_raw<double>(in);
  }
  if (!in) throw ConfigError("truncated memory snapshot");
  return snap;
}

WeightedDataset snapshot_to_weighted_dataset(const MemorySnapshot& snap) {
  std::size_t kept = 0;
  for (Eigen::Index i = 0; i < snap.weights.size(); ++i)
    if (snap.weights(i) > 0.0) ++kept;

  WeightedDataset out;
  const Eigen::Index dim =
      snap.items.empty() ? 0 : snap.items.front().features.size();
  out.features.resize(static_cast<Eigen::Index>(kept), dim);
  out.weights.resize(static_cast<Eigen::Index>(kept));
  out.labels.reserve(kept);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < snap.items.size(); ++i) {
    const double w = snap.weights(static_cast<Eigen::Index>(i));
    if (w <= 0.0) continue;
    out.features.row(row) = snap.items[i].features.transpose();
    out.weights(row) = w;
    out.labels.push_back(snap.items[i].label);
    ++row;
  }
  return out;
}

}  // namespace gmc
