#include "gmc/embedding.hpp"

#include <bit>
#include <fstream>
#include <optional>
#include <string_view>
#include <utility>

#include "gmc/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "embedding files are little-endian; big-endian hosts unsupported");

namespace gmc {

namespace {

std::uint64_t spec_digest_seed(const EmbeddingSpec& spec) {
  std::uint64_t h = fnv1a_u64(static_cast<std::uint64_t>(spec.mode), 0x9e3779b97f4a7c15ull);
  h = fnv1a_u64(spec.samples, h);
  h = fnv1a_u64(spec.dim, h);
  h = fnv1a_u64(static_cast<std::uint64_t>(spec.init.family), h);
  h = fnv1a(&spec.init.scale, sizeof(double), h);
  h = fnv1a_u64(spec.init.seed, h);
  h = fnv1a_u64(spec.projection_seed, h);
  h = fnv1a(&spec.density, sizeof(double), h);
  h = fnv1a_u64(spec.identity_projection ? 1 : 0, h);
  return h;
}

std::size_t gradient_dim(const ArchSpec& arch, EmbeddingMode mode) {
  switch (mode) {
    case EmbeddingMode::last_layer:
      return arch.num_classes * arch.penultimate_width();
    case EmbeddingMode::full:
    case EmbeddingMode::local:
      return arch.param_count();
  }
  throw ConfigError("unknown embedding mode");
}

void project_into(const SparseProjection* proj, const Eigen::VectorXd& grad,
                  Eigen::MatrixXd& out, Eigen::Index row_offset,
                  Eigen::Index col) {
  if (proj == nullptr) {
    out.block(row_offset, col, grad.size(), 1) = grad;
  } else {
    out.block(row_offset, col, static_cast<Eigen::Index>(proj->target_dim()), 1) =
        proj->apply(grad);
  }
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("truncated embedding file");
  return v;
}

constexpr char kMagic[4] = {'G', 'M', 'C', 'E'};
constexpr std::uint16_t kFormatVersion = 1;

}  // namespace

std::string to_string(EmbeddingMode mode) {
  switch (mode) {
    case EmbeddingMode::full: return "full";
    case EmbeddingMode::last_layer: return "last_layer";
    case EmbeddingMode::local: return "local";
  }
  return "?";
}

void EmbeddingSpec::validate() const {
  if (samples == 0) throw ConfigError("embedding sample count S must be >= 1");
  if (dim == 0) throw ConfigError("embedding dimension d must be >= 1");
  if (mode == EmbeddingMode::local && samples != 1)
    throw ConfigError("local embeddings use a single parameter sample");
  if (density < 0.0 || density > 1.0)
    throw ConfigError("projection density must lie in (0, 1] or 0 for default");
}

EmbeddingMatrix::EmbeddingMatrix(Eigen::MatrixXd columns, EmbeddingSpec spec,
                                 std::uint64_t theta_digest)
    : columns_(std::move(columns)), spec_(std::move(spec)), theta_digest_(theta_digest) {
  if (columns_.rows() != static_cast<Eigen::Index>(spec_.embed_dim()))
    throw ConfigError("embedding matrix height does not match spec");
}

bool EmbeddingMatrix::compatible_with(const EmbeddingMatrix& other) const {
  return spec_ == other.spec_ && theta_digest_ == other.theta_digest_;
}

void EmbeddingMatrix::require_compatible(const EmbeddingMatrix& other) const {
  if (!compatible_with(other))
    throw ConfigError(
        "embedding matrices have incompatible provenance (spec or parameter "
        "sample digest differs)");
}

EmbeddingMatrix EmbeddingMatrix::concat(const EmbeddingMatrix& a,
                                        const EmbeddingMatrix& b) {
  if (a.cols() == 0) return b;
  if (b.cols() == 0) return a;
  a.require_compatible(b);
  Eigen::MatrixXd joined(a.rows(), a.cols() + b.cols());
  joined.leftCols(a.cols()) = a.columns_;
  joined.rightCols(b.cols()) = b.columns_;
  return EmbeddingMatrix(std::move(joined), a.spec_, a.theta_digest_);
}

EmbeddingMatrix EmbeddingMatrix::select(
    const std::vector<std::size_t>& indices) const {
  Eigen::MatrixXd sub(rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= static_cast<std::size_t>(cols()))
      throw ConfigError("embedding column index out of range");
    sub.col(static_cast<Eigen::Index>(i)) =
        columns_.col(static_cast<Eigen::Index>(indices[i]));
  }
  return EmbeddingMatrix(std::move(sub), spec_, theta_digest_);
}

EmbeddingMatrix build_embeddings(const WeightedDataset& data,
                                 const ArchSpec& arch,
                                 const EmbeddingSpec& spec) {
  spec.validate();
  arch.validate();
  data.validate();
  if (data.size() == 0) throw ConfigError("cannot embed an empty dataset");
  if (spec.mode == EmbeddingMode::local)
    throw ConfigError("use local_embeddings for mode=local");

  const std::size_t source_dim = gradient_dim(arch, spec.mode);
  if (spec.identity_projection && spec.dim != source_dim)
    throw ConfigError("identity projection requires d == gradient dimension " +
                      std::to_string(source_dim));
  const double density =
      spec.density > 0.0 ? spec.density : default_density(source_dim);

  const Eigen::Index n = data.size();
  Eigen::MatrixXd g(static_cast<Eigen::Index>(spec.embed_dim()), n);
  std::uint64_t digest = spec_digest_seed(spec);

  for (std::size_t s = 1; s <= spec.samples; ++s) {
    InitSpec draw = spec.init;
    draw.seed = spec.init.seed + s;
    const ParamVector theta = init_params(arch, draw);
    digest = fnv1a(theta.values.data(),
                   sizeof(double) * static_cast<std::size_t>(theta.values.size()),
                   digest);

    std::optional<SparseProjection> proj;
    if (!spec.identity_projection)
      proj.emplace(source_dim, spec.dim, density, spec.projection_seed + s);

    const Eigen::Index row_offset =
        static_cast<Eigen::Index>((s - 1) * spec.dim);
    if (spec.mode == EmbeddingMode::last_layer) {
      const auto grads = last_layer_grads(theta, data);
      for (Eigen::Index i = 0; i < n; ++i)
        project_into(proj ? &*proj : nullptr, grads[static_cast<std::size_t>(i)],
                     g, row_offset, i);
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd grad =
            loss_and_grad(theta, data.features.row(i),
                          data.labels[static_cast<std::size_t>(i)], 1.0)
                .second;
        project_into(proj ? &*proj : nullptr, grad, g, row_offset, i);
      }
    }
  }
  if (!g.allFinite()) throw NumericError("non-finite gradient embedding");
  return EmbeddingMatrix(std::move(g), spec, digest);
}

EmbeddingMatrix local_embeddings(const ParamVector& params,
                                 const WeightedDataset& data, std::size_t dim,
                                 std::uint64_t projection_seed,
                                 bool identity_projection) {
  data.validate();
  if (data.size() == 0) throw ConfigError("cannot embed an empty dataset");
  const std::size_t source_dim = params.arch.param_count();

  EmbeddingSpec spec;
  spec.samples = 1;
  spec.dim = dim;
  spec.mode = EmbeddingMode::local;
  spec.init = InitSpec{InitFamily::he_uniform, 0.0, 0};
  spec.projection_seed = projection_seed;
  spec.identity_projection = identity_projection;
  spec.validate();
  if (identity_projection && dim != source_dim)
    throw ConfigError("identity projection requires d == gradient dimension " +
                      std::to_string(source_dim));

  std::optional<SparseProjection> proj;
  if (!identity_projection)
    proj.emplace(source_dim, dim, default_density(source_dim),
                 projection_seed + 1);

  const Eigen::Index n = data.size();
  Eigen::MatrixXd g(static_cast<Eigen::Index>(dim), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd grad =
        loss_and_grad(params, data.features.row(i),
                      data.labels[static_cast<std::size_t>(i)], 1.0)
            .second;
    project_into(proj ? &*proj : nullptr, grad, g, 0, i);
  }
  if (!g.allFinite()) throw NumericError("non-finite gradient embedding");

  // Local columns are anchored to the exact iterate, not a seed.
  std::uint64_t digest = spec_digest_seed(spec);
  digest = fnv1a(params.values.data(),
                 sizeof(double) * static_cast<std::size_t>(params.values.size()),
                 digest);
  return EmbeddingMatrix(std::move(g), spec, digest);
}

Eigen::VectorXd sum_columns(const EmbeddingMatrix& g) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(g.rows());
  for (Eigen::Index i = 0; i < g.cols(); ++i) sum += g.columns().col(i);
  return sum;
}

Eigen::MatrixXd gram(const EmbeddingMatrix& g) {
  return g.columns().transpose() * g.columns();
}

// ---------------------------------------------------------------------------
// Binary file format
// ---------------------------------------------------------------------------

void write_embedding_stream(std::ostream& out, const EmbeddingMatrix& g) {
  out.write(kMagic, sizeof(kMagic));
  write_raw(out, kFormatVersion);
  write_raw(out, static_cast<std::uint8_t>(g.spec().mode));
  write_raw(out, static_cast<std::uint32_t>(g.spec().samples));
  write_raw(out, static_cast<std::uint32_t>(g.spec().dim));
  write_raw(out, static_cast<std::uint64_t>(g.cols()));
  write_raw(out, g.spec().init.seed);
  write_raw(out, g.spec().projection_seed);
  out.write(reinterpret_cast<const char*>(g.columns().data()),
            static_cast<std::streamsize>(sizeof(double) *
                                         static_cast<std::size_t>(g.rows()) *
                                         static_cast<std::size_t>(g.cols())));
  if (!out) throw ConfigError("failed to write embedding stream");
}

void write_embedding_file(const std::string& path, const EmbeddingMatrix& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  write_embedding_stream(out, g);
}

EmbeddingMatrix read_embedding_stream(std::istream& in) {
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::string_view(magic, 4) != std::string_view(kMagic, 4))
    throw ConfigError("not an embedding file (bad magic)");
  const auto version = read_raw<std::uint16_t>(in);
  if (version != kFormatVersion)
    throw ConfigError("unsupported embedding file version " +
                      std::to_string(version));
  EmbeddingSpec spec;
  const auto mode = read_raw<std::uint8_t>(in);
  if (mode > 2) throw ConfigError("invalid embedding mode byte");
  spec.mode = static_cast<EmbeddingMode>(mode);
  spec.samples = read_raw<std::uint32_t>(in);
  spec.dim = read_raw<std::uint32_t>(in);
  const auto n = read_raw<std::uint64_t>(in);
  spec.init.seed = read_raw<std::uint64_t>(in);
  spec.projection_seed = read_raw<std::uint64_t>(in);
  spec.validate();

  Eigen::MatrixXd g(static_cast<Eigen::Index>(spec.embed_dim()),
                    static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(g.data()),
          static_cast<std::streamsize>(sizeof(double) *
                                       static_cast<std::size_t>(g.size())));
  if (!in) throw ConfigError("truncated embedding file");
  if (!g.allFinite()) throw NumericError("non-finite values in embedding file");

  // The file header does not carry the parameter-sample digest, so loaded
  // matrices get a header-derived digest: two loads of the same header are
  // combinable with each other but never with an in-process build.
  std::uint64_t digest = fnv1a_u64(0x66696c65ull /* "file" */, spec_digest_seed(spec));
  return EmbeddingMatrix(std::move(g), spec, digest);
}

EmbeddingMatrix read_embedding_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return read_embedding_stream(in);
}

}  // namespace gmc
