#include "gmc/projection.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gmc/rng.hpp"

namespace gmc {

double default_density(std::size_t source_dim) {
  return std::min(1.0, 1.0 / std::sqrt(static_cast<double>(source_dim)));
}

SparseProjection::SparseProjection(std::size_t source_dim,
                                   std::size_t target_dim, double density,
                                   std::uint64_t seed)
    : source_dim_(source_dim),
      target_dim_(target_dim),
      density_(density),
      seed_(seed),
      magnitude_(0.0),
      rows_(target_dim) {
  if (source_dim == 0 || target_dim == 0)
    throw ConfigError("projection dimensions must be positive");
  if (!(density > 0.0) || density > 1.0)
    throw ConfigError("projection density must lie in (0, 1], got " +
                      std::to_string(density));
  if (source_dim >= std::numeric_limits<std::uint32_t>::max())
    throw ConfigError("projection source dimension too large");

  magnitude_ = 1.0 / std::sqrt(density * static_cast<double>(target_dim));
  Rng rng(seed);

  if (density >= 1.0) {
    for (auto& row : rows_) {
      row.reserve(source_dim);
      for (std::size_t j = 0; j < source_dim; ++j) {
        const double sign = (rng.bits() & 1u) ? 1.0 : -1.0;
        row.push_back({static_cast<std::uint32_t>(j), sign * magnitude_});
      }
    }
    return;
  }

  // Walk each row by geometric gaps between nonzeros; equivalent to an
  // independent Bernoulli(density) draw per entry.
  const double log1m = std::log1p(-density);
  for (auto& row : rows_) {
    std::size_t j = 0;
    for (;;) {
      const double u = 1.0 - rng.uniform01();  // (0, 1]
      const double gap = std::floor(std::log(u) / log1m);
      if (gap >= static_cast<double>(source_dim - j)) break;
      j += static_cast<std::size_t>(gap);
      const double sign = (rng.bits() & 1u) ? 1.0 : -1.0;
      row.push_back({static_cast<std::uint32_t>(j), sign * magnitude_});
      if (++j >= source_dim) break;
    }
  }
}

std::size_t SparseProjection::nonzero_count() const {
  std::size_t n = 0;
  for (const auto& row : rows_) n += row.size();
  return n;
}

Eigen::VectorXd SparseProjection::apply(const Eigen::VectorXd& v) const {
  if (v.size() != static_cast<Eigen::Index>(source_dim_))
    throw ConfigError("projection input length " + std::to_string(v.size()) +
                      " != source dimension " + std::to_string(source_dim_));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(target_dim_));
  for (std::size_t r = 0; r < target_dim_; ++r) {
    double acc = 0.0;
    for (const Entry& e : rows_[r]) acc += e.value * v(e.col);
    out(static_cast<Eigen::Index>(r)) = acc;
  }
  return out;
}

}  // namespace gmc
