#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gmc/model.hpp"
#include "gmc/projection.hpp"

namespace gmc {

enum class EmbeddingMode : std::uint8_t { full = 0, last_layer = 1, local = 2 };

std::string to_string(EmbeddingMode mode);

/// How gradient embeddings are built: S draws from the initialization
/// distribution, each projected to `dim` coordinates with an independent
/// sparse projection (seed projection_seed + s), stacked into a column of
/// height dim * S.
struct EmbeddingSpec {
  std::size_t samples = 10;          // S, draws from p(theta)
  std::size_t dim = 1000;            // d, projected coordinates per draw
  EmbeddingMode mode = EmbeddingMode::full;
  InitSpec init;
  std::uint64_t projection_seed = 0;
  double density = 0.0;              // 0 -> 1/sqrt(source dim)
  bool identity_projection = false;  // test oracle: P = I, dim must equal
                                     // the raw gradient dimension

  std::size_t embed_dim() const { return samples * dim; }
  void validate() const;
  bool operator==(const EmbeddingSpec&) const = default;
};

/// Column-per-example gradient embedding matrix. Columns are fixed by
/// (spec, architecture): the parameter draws and projections depend only on
/// seeds, so rebuilding for the same data reproduces columns bit-for-bit.
/// Matrices may only be combined when their provenance matches.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(Eigen::MatrixXd columns, EmbeddingSpec spec,
                  std::uint64_t theta_digest);

  Eigen::Index rows() const { return columns_.rows(); }
  Eigen::Index cols() const { return columns_.cols(); }
  const Eigen::MatrixXd& columns() const { return columns_; }
  const EmbeddingSpec& spec() const { return spec_; }
  std::uint64_t theta_digest() const { return theta_digest_; }

  bool compatible_with(const EmbeddingMatrix& other) const;
  void require_compatible(const EmbeddingMatrix& other) const;

  /// Horizontal concatenation; throws on provenance mismatch.
  static EmbeddingMatrix concat(const EmbeddingMatrix& a,
                                const EmbeddingMatrix& b);
  /// Column subset in the given order, same provenance.
  EmbeddingMatrix select(const std::vector<std::size_t>& indices) const;

 private:
  Eigen::MatrixXd columns_;
  EmbeddingSpec spec_;
  std::uint64_t theta_digest_ = 0;
};

/// Gradient embeddings of every example under the initialization
/// distribution (modes full and last_layer). Unweighted per-example losses.
EmbeddingMatrix build_embeddings(const WeightedDataset& data,
                                 const ArchSpec& arch,
                                 const EmbeddingSpec& spec);

/// Single-sample embeddings at exactly `params` (mode local); columns go
/// stale as training moves the iterate. Projection dimension defaults to
/// samples_default * dim_default so the embedding height matches the
/// distribution-based variant.
EmbeddingMatrix local_embeddings(const ParamVector& params,
                                 const WeightedDataset& data, std::size_t dim,
                                 std::uint64_t projection_seed,
                                 bool identity_projection = false);

constexpr std::size_t kDefaultLocalDim = 10 * 1000;

/// Exact column sum in ascending index order (the matching target g).
Eigen::VectorXd sum_columns(const EmbeddingMatrix& g);

/// Gram matrix K = G^T G; the finite-sample kernel between examples.
Eigen::MatrixXd gram(const EmbeddingMatrix& g);

// --- binary embedding file ("GMCE") ---------------------------------------

void write_embedding_file(const std::string& path, const EmbeddingMatrix& g);
void write_embedding_stream(std::ostream& out, const EmbeddingMatrix& g);
EmbeddingMatrix read_embedding_file(const std::string& path);
EmbeddingMatrix read_embedding_stream(std::istream& in);

}  // namespace gmc
