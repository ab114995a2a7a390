#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "gmc/common.hpp"

namespace gmc {

/// Sparse random projection P (target_dim x source_dim) with entries
///   -(rho d)^{-1/2} w.p. rho/2,  0 w.p. 1-rho,  +(rho d)^{-1/2} w.p. rho/2,
/// sampled independently. Satisfies E[P^T P] = I, so projected inner
/// products are unbiased. Stored row-sparse; fully determined by the seed,
/// so it never needs to be persisted.
class SparseProjection {
 public:
  struct Entry {
    std::uint32_t col;
    double value;  // +/- (rho d)^{-1/2}
  };

  SparseProjection(std::size_t source_dim, std::size_t target_dim,
                   double density, std::uint64_t seed);

  std::size_t source_dim() const { return source_dim_; }
  std::size_t target_dim() const { return target_dim_; }
  double density() const { return density_; }
  std::uint64_t seed() const { return seed_; }
  double magnitude() const { return magnitude_; }
  std::size_t nonzero_count() const;
  const std::vector<Entry>& row(std::size_t r) const { return rows_[r]; }

  /// Exact sparse matrix-vector product, length source_dim -> target_dim.
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;

 private:
  std::size_t source_dim_;
  std::size_t target_dim_;
  double density_;
  std::uint64_t seed_;
  double magnitude_;
  std::vector<std::vector<Entry>> rows_;
};

/// Recommended density 1/sqrt(D), capped at 1 for tiny D.
double default_density(std::size_t source_dim);

inline SparseProjection make_projection(std::size_t source_dim,
                                        std::size_t target_dim, double density,
                                        std::uint64_t seed) {
  return SparseProjection(source_dim, target_dim, density, seed);
}

}  // namespace gmc
