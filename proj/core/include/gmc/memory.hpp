#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

#include "gmc/embedding.hpp"
#include "gmc/model.hpp"
#include "gmc/omp.hpp"
#include "gmc/rng.hpp"

namespace gmc {

struct MemoryItem {
  Eigen::VectorXd features;
  int label = 0;
};

struct MemoryUpdateContext {
  /// Current training iterate; required by the local GMC variant.
  const ParamVector* current_params = nullptr;
};

struct MemoryDiagnostics {
  double residual_norm = 0.0;
  double target_norm = 0.0;
  std::size_t clipped_weights = 0;
  double embed_seconds = 0.0;
  double select_seconds = 0.0;
};

/// Shared interface of all memory curation strategies. Items are capped at
/// the capacity; weights are 1 for the baselines and OMP weights for GMC.
class MemoryStrategy {
 public:
  virtual ~MemoryStrategy() = default;

  virtual void update(const WeightedDataset& batch,
                      const MemoryUpdateContext& ctx) = 0;
  virtual std::string_view name() const = 0;
  virtual std::uint8_t strategy_id() const = 0;
  virtual MemoryDiagnostics diagnostics() const { return {}; }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  const std::vector<MemoryItem>& items() const { return items_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  /// Retained items with their weights; zero-weight items are omitted.
  WeightedDataset as_weighted_dataset() const;

 protected:
  explicit MemoryStrategy(std::size_t capacity) : capacity_(capacity) {}

  std::size_t capacity_;
  std::vector<MemoryItem> items_;
  Eigen::VectorXd weights_;
};

// ---------------------------------------------------------------------------
// Gradient-matching coreset memory
// ---------------------------------------------------------------------------

/// Continual gradient-matching coreset. The running target accumulates the
/// exact column sum of every embedding ever ingested (embeddings are
/// constant across the stream), and each batch re-runs OMP over
/// [old coreset columns, new batch columns].
class GmcMemory : public MemoryStrategy {
 public:
  GmcMemory(ArchSpec arch, EmbeddingSpec spec, OmpConfig omp);

  void update(const WeightedDataset& batch,
              const MemoryUpdateContext& ctx) override;
  std::string_view name() const override;
  std::uint8_t strategy_id() const override;
  MemoryDiagnostics diagnostics() const override { return diag_; }

  /// One continual step with embeddings already built (modes full and
  /// last_layer): accumulate the target, extend the dictionary with the
  /// batch columns, reselect.
  void ingest(const WeightedDataset& batch, const EmbeddingMatrix& embeddings);

  /// Local-variant step: re-embeds coreset items and the batch at the
  /// given iterate and matches their summed gradient (the accumulated
  /// target is not available since local embeddings change over time).
  void ingest_local(const WeightedDataset& batch, const ParamVector& params);

  const Eigen::VectorXd& target() const { return target_; }
  const EmbeddingMatrix& coreset_columns() const { return columns_; }
  const EmbeddingSpec& embedding_spec() const { return spec_; }

 private:
  ArchSpec arch_;
  EmbeddingSpec spec_;
  OmpConfig omp_;
  Eigen::VectorXd target_;
  EmbeddingMatrix columns_;  // dS x |coreset|
  MemoryDiagnostics diag_;

  void reselect(const std::vector<MemoryItem>& pool,
                const EmbeddingMatrix& dictionary);
};

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/// Vitter's algorithm R: uniform subsample of the stream.
class ReservoirMemory : public MemoryStrategy {
 public:
  ReservoirMemory(std::size_t capacity, std::uint64_t seed);
  void update(const WeightedDataset& batch,
              const MemoryUpdateContext& ctx) override;
  std::string_view name() const override { return "reservoir"; }
  std::uint8_t strategy_id() const override { return 3; }
  std::size_t stream_count() const { return stream_count_; }

 private:
  Rng rng_;
  std::size_t stream_count_ = 0;
};

/// Keeps the most recent items in arrival order (FIFO eviction).
class SlidingWindowMemory : public MemoryStrategy {
 public:
  explicit SlidingWindowMemory(std::size_t capacity);
  void update(const WeightedDataset& batch,
              const MemoryUpdateContext& ctx) override;
  std::string_view name() const override { return "sliding_window"; }
  std::uint8_t strategy_id() const override { return 4; }
};

/// Greedy class balancing: when full, an item of class c is admitted only
/// if c is not among the largest classes; eviction removes a random item
/// of a currently largest class.
class ClassBalanceMemory : public MemoryStrategy {
 public:
  ClassBalanceMemory(std::size_t capacity, std::uint64_t seed);
  void update(const WeightedDataset& batch,
              const MemoryUpdateContext& ctx) override;
  std::string_view name() const override { return "class_balance"; }
  std::uint8_t strategy_id() const override { return 5; }
  const std::vector<std::size_t>& class_counts() const { return counts_; }

 private:
  Rng rng_;
  std::vector<std::size_t> counts_;  // per label

  void bump(int label);
};

// ---------------------------------------------------------------------------
// Snapshot file ("GMCM"), for audit and retraining
// ---------------------------------------------------------------------------

struct MemorySnapshot {
  std::uint8_t strategy_id = 0;
  std::uint64_t capacity = 0;
  std::vector<MemoryItem> items;
  Eigen::VectorXd weights;
};

void write_memory_snapshot(const std::string& path, const MemoryStrategy& mem);
void write_memory_snapshot(const std::string& path, const MemorySnapshot& snap);
MemorySnapshot read_memory_snapshot(const std::string& path);

/// Snapshot contents as a training set; zero-weight items are omitted,
/// mirroring MemoryStrategy::as_weighted_dataset.
WeightedDataset snapshot_to_weighted_dataset(const MemorySnapshot& snap);

}  // namespace gmc
