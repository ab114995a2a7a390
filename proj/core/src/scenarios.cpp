#include "gmc/scenarios.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gmc/common.hpp"
#include "gmc/rng.hpp"

namespace gmc {

namespace {

std::string trim(std::string s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && is_space(static_cast<unsigned char>(s[start]))) ++start;
  return s.substr(start);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

bool parse_index(const std::string& s, std::size_t& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

struct RawCsv {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> label_cells;
};

RawCsv parse_csv(const std::string& path, const std::string& label_column,
                 bool has_header) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);

  std::string line;
  std::vector<std::string> header;
  if (has_header) {
    if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
    header = split_csv_line(line);
  }

  std::size_t label_index = 0;
  bool label_resolved = false;
  if (parse_index(label_column, label_index)) {
    label_resolved = true;
  } else if (has_header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == label_column) {
        label_index = i;
        label_resolved = true;
        break;
      }
    }
  }
  if (!label_resolved)
    throw ConfigError(path + ": unknown label column '" + label_column + "'");

  RawCsv raw;
  std::size_t width = 0;
  std::size_t row_number = has_header ? 1 : 0;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (width == 0) {
      width = cells.size();
      if (label_index >= width)
        throw ConfigError(path + ": label column index out of range");
      if (has_header && header.size() != width)
        throw ConfigError(path + ": header width differs from data width");
    }
    if (cells.size() != width)
      throw ConfigError(path + ": ragged row at line " +
                        std::to_string(row_number));
    std::vector<double> feat;
    feat.reserve(width - 1);
    for (std::size_t i = 0; i < width; ++i) {
      if (i == label_index) {
        raw.label_cells.push_back(cells[i]);
        continue;
      }
      double v = 0;
      if (!parse_double(cells[i], v))
        throw ConfigError(path + ": non-numeric feature cell '" + cells[i] +
                          "' at line " + std::to_string(row_number));
      feat.push_back(v);
    }
    raw.rows.push_back(std::move(feat));
  }
  if (raw.rows.empty()) throw ConfigError(path + ": no data rows");

  if (has_header) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (i != label_index) raw.feature_names.push_back(header[i]);
  } else {
    for (std::size_t i = 0; i + 1 < width; ++i)
      raw.feature_names.push_back("f" + std::to_string(i));
  }
  return raw;
}

Dataset assemble(const RawCsv& raw, std::map<std::string, int>& label_map,
                 bool extend_label_map, const std::string& path) {
  Dataset d;
  const Eigen::Index n = static_cast<Eigen::Index>(raw.rows.size());
  const Eigen::Index f = static_cast<Eigen::Index>(raw.feature_names.size());
  d.features.resize(n, f);
  d.labels.reserve(raw.rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < f; ++j)
      d.features(i, j) = raw.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    const std::string& cell = raw.label_cells[static_cast<std::size_t>(i)];
    auto it = label_map.find(cell);
    if (it == label_map.end()) {
      if (!extend_label_map)
        throw ConfigError(path + ": label '" + cell +
                          "' not present in the training split");
      it = label_map.emplace(cell, static_cast<int>(label_map.size())).first;
    }
    d.labels.push_back(it->second);
  }
  d.feature_names = raw.feature_names;
  return d;
}

ScenarioStream make_stream(std::string kind, const Dataset& test,
                           std::uint64_t seed) {
  ScenarioStream s;
  s.kind = std::move(kind);
  s.test_set = test;
  s.seed = seed;
  return s;
}

// Contiguous partition of n into parts whose sizes differ by at most one;
// the remainder goes to the leading parts.
std::vector<std::size_t> balanced_sizes(std::size_t n, std::size_t parts) {
  std::vector<std::size_t> sizes(parts, n / parts);
  for (std::size_t i = 0; i < n % parts; ++i) ++sizes[i];
  return sizes;
}

Dataset take_rows(const Dataset& src, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), src.features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = src.features.row(rows[i]);
    out.labels.push_back(src.labels[static_cast<std::size_t>(rows[i])]);
  }
  out.image_shape = src.image_shape;
  out.class_count = src.class_count;
  out.feature_names = src.feature_names;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

void Dataset::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows())
    throw ConfigError("dataset labels and rows disagree in length");
  if (!features.allFinite()) throw ConfigError("dataset has non-finite features");
  for (int label : labels)
    if (label < 0 || label >= class_count)
      throw ConfigError("label outside [0, class_count)");
  if (image_shape) {
    if (static_cast<Eigen::Index>(image_shape->first * image_shape->second) !=
        features.cols())
      throw ConfigError("image shape does not match feature width");
  }
}

WeightedDataset Dataset::to_weighted() const {
  return WeightedDataset::unit_weights(features, labels);
}

void ScenarioStream::validate() const {
  std::size_t total = 0;
  for (const auto& b : batches) total += static_cast<std::size_t>(b.size());
  if (total == 0) throw ConfigError("stream has no training rows");
  if (test_set.size() == 0) throw ConfigError("stream has no test rows");
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

Dataset load_csv(const std::string& path, const std::string& label_column,
                 bool has_header) {
  const RawCsv raw = parse_csv(path, label_column, has_header);
  std::map<std::string, int> label_map;
  Dataset d = assemble(raw, label_map, true, path);
  d.class_count = static_cast<int>(label_map.size());
  Standardizer::fit(d).apply(d);
  return d;
}

std::pair<Dataset, Dataset> load_csv_train_test(const std::string& train_path,
                                                const std::string& test_path,
                                                const std::string& label_column,
                                                bool has_header) {
  const RawCsv raw_train = parse_csv(train_path, label_column, has_header);
  const RawCsv raw_test = parse_csv(test_path, label_column, has_header);
  std::map<std::string, int> label_map;
  Dataset train = assemble(raw_train, label_map, true, train_path);
  Dataset test = assemble(raw_test, label_map, false, test_path);
  train.class_count = static_cast<int>(label_map.size());
  test.class_count = train.class_count;
  const Standardizer st = Standardizer::fit(train);
  st.apply(train);
  st.apply(test);
  return {std::move(train), std::move(test)};
}

void write_csv(const std::string& path, const Dataset& data,
               const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out.precision(17);
  for (std::size_t j = 0; j < data.feature_names.size(); ++j)
    out << data.feature_names[j] << ',';
  out << label_column << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.features.cols(); ++j)
      out << data.features(i, j) << ',';
    out << data.labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) throw ConfigError("failed to write " + path);
}

Standardizer Standardizer::fit(const Dataset& data) {
  Standardizer st;
  const double n = static_cast<double>(data.size());
  if (n == 0) throw ConfigError("cannot fit a standardizer on no rows");
  st.mean = data.features.colwise().mean();
  st.sigma.resize(data.features.cols());
  for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
    const double var =
        (data.features.col(j).array() - st.mean(j)).square().sum() / n;
    const double sigma = std::sqrt(var);
    st.sigma(j) = sigma > 1e-12 ? sigma : 1.0;
  }
  return st;
}

void Standardizer::apply(Dataset& data) const {
  if (data.features.cols() != mean.size())
    throw ConfigError("standardizer width does not match dataset");
  data.features =
      (data.features.rowwise() - mean.transpose()).array().rowwise() /
      sigma.transpose().array();
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

Dataset synth_blobs(int classes, int per_class, int features, double spread,
                    double drift, std::uint64_t seed) {
  if (classes < 1 || per_class < 1 || features < 1)
    throw ConfigError("synth_blobs needs positive classes/per_class/features");
  Rng rng(seed);
  Eigen::MatrixXd means(classes, features);
  for (int c = 0; c < classes; ++c)
    for (int j = 0; j < features; ++j) means(c, j) = rng.normal();

  Dataset d;
  const Eigen::Index n = static_cast<Eigen::Index>(classes) * per_class;
  d.features.resize(n, features);
  d.labels.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i / per_class);
    for (int j = 0; j < features; ++j)
      d.features(i, j) = means(c, j) + spread * rng.normal();
    d.features(i, 0) += drift * static_cast<double>(i);
    d.labels.push_back(c);
  }
  d.class_count = classes;
  for (int j = 0; j < features; ++j)
    d.feature_names.push_back("f" + std::to_string(j));
  return d;
}

std::pair<Dataset, Dataset> holdout_split(const Dataset& data,
                                          double test_fraction,
                                          std::uint64_t seed) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    throw ConfigError("test fraction must lie in (0, 1)");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t test_count = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(data.size())));
  if (test_count == 0 || test_count >= order.size())
    throw ConfigError("holdout split would leave an empty side");
  std::vector<Eigen::Index> test_rows(order.begin(),
                                      order.begin() + static_cast<std::ptrdiff_t>(test_count));
  std::vector<Eigen::Index> train_rows(order.begin() + static_cast<std::ptrdiff_t>(test_count),
                                       order.end());
  return {take_rows(data, train_rows), take_rows(data, test_rows)};
}

// ---------------------------------------------------------------------------
// Stream constructions
// ---------------------------------------------------------------------------

ScenarioStream sorted_taskfree_split(const Dataset& train, const Dataset& test,
                                     std::size_t feature_index,
                                     std::size_t batches) {
  train.validate();
  if (batches < 1) throw ConfigError("need at least one batch");
  if (feature_index >= static_cast<std::size_t>(train.features.cols()))
    throw ConfigError("sort feature index out of range");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::Index col = static_cast<Eigen::Index>(feature_index);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return train.features(a, col) < train.features(b, col);
                   });

  ScenarioStream stream = make_stream("sorted_taskfree", test, 0);
  const auto sizes = balanced_sizes(order.size(), batches);
  std::size_t at = 0;
  for (std::size_t size : sizes) {
    std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(at),
                                   order.begin() + static_cast<std::ptrdiff_t>(at + size));
    stream.batches.push_back(take_rows(train, rows));
    at += size;
  }
  return stream;
}

ScenarioStream class_incremental_split(const Dataset& train,
                                       const Dataset& test,
                                       std::size_t classes_per_task) {
  train.validate();
  if (classes_per_task < 1) throw ConfigError("classes_per_task must be >= 1");
  const int c = train.class_count;
  if (c < 1) throw ConfigError("dataset has no classes");

  ScenarioStream stream = make_stream("class_incremental", test, 0);
  for (int first = 0; first < c; first += static_cast<int>(classes_per_task)) {
    std::vector<int> group;
    for (int k = first;
         k < std::min(c, first + static_cast<int>(classes_per_task)); ++k)
      group.push_back(k);

    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < train.size(); ++i)
      if (std::find(group.begin(), group.end(),
                    train.labels[static_cast<std::size_t>(i)]) != group.end())
        rows.push_back(i);
    if (rows.empty())
      throw ConfigError("task with classes starting at " +
                        std::to_string(first) + " has no training rows");
    stream.batches.push_back(take_rows(train, rows));
    stream.task_classes.push_back(group);

    std::vector<Eigen::Index> slice;
    for (Eigen::Index i = 0; i < test.size(); ++i)
      if (std::find(group.begin(), group.end(),
                    test.labels[static_cast<std::size_t>(i)]) != group.end())
        slice.push_back(i);
    stream.test_slices.push_back(std::move(slice));
  }
  return stream;
}

std::pair<std::vector<Eigen::Index>, std::pair<std::size_t, std::size_t>>
rotation_permutation(std::size_t h, std::size_t w, int quarter_turns) {
  std::vector<Eigen::Index> perm(h * w);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::size_t ch = h, cw = w;
  for (int t = 0; t < ((quarter_turns % 4) + 4) % 4; ++t) {
    // One quarter turn: out(r, c) = in(ch - 1 - c, r); shape (ch, cw) -> (cw, ch).
    std::vector<Eigen::Index> next(perm.size());
    for (std::size_t r = 0; r < cw; ++r)
      for (std::size_t c = 0; c < ch; ++c)
        next[r * ch + c] = perm[(ch - 1 - c) * cw + r];
    perm = std::move(next);
    std::swap(ch, cw);
  }
  return {perm, {ch, cw}};
}

namespace {

Dataset rotate_dataset(const Dataset& src, int quarter_turns) {
  if (!src.image_shape)
    throw ConfigError("rotation requires a dataset with an image shape");
  const auto [perm, shape] = rotation_permutation(
      src.image_shape->first, src.image_shape->second, quarter_turns);
  Dataset out = src;
  for (Eigen::Index i = 0; i < src.size(); ++i)
    for (std::size_t p = 0; p < perm.size(); ++p)
      out.features(i, static_cast<Eigen::Index>(p)) = src.features(i, perm[p]);
  out.image_shape = shape;
  return out;
}

}  // namespace

ScenarioStream rotated_domain_split(const Dataset& train, const Dataset& test,
                                    std::size_t folds, std::uint64_t seed) {
  train.validate();
  if (folds != 4)
    throw ConfigError("rotated scenario uses exactly 4 folds (0/90/180/270)");
  if (!train.image_shape || !test.image_shape)
    throw ConfigError("rotated scenario requires datasets with an image shape");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(order);

  ScenarioStream stream = make_stream("rotated_domain", Dataset{}, seed);
  const auto sizes = balanced_sizes(order.size(), folds);
  std::size_t at = 0;
  for (std::size_t k = 0; k < folds; ++k) {
    std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(at),
                                   order.begin() + static_cast<std::ptrdiff_t>(at + sizes[k]));
    at += sizes[k];
    stream.batches.push_back(rotate_dataset(take_rows(train, rows),
                                            static_cast<int>(k)));
  }

  // Test set: the four rotated copies concatenated, one slice per fold.
  Dataset combined;
  combined.class_count = test.class_count;
  combined.feature_names = test.feature_names;
  combined.features.resize(test.size() * static_cast<Eigen::Index>(folds),
                           test.features.cols());
  bool shapes_agree = true;
  for (std::size_t k = 0; k < folds; ++k) {
    const Dataset rotated = rotate_dataset(test, static_cast<int>(k));
    combined.features.middleRows(static_cast<Eigen::Index>(k) * test.size(),
                                 test.size()) = rotated.features;
    combined.labels.insert(combined.labels.end(), rotated.labels.begin(),
                           rotated.labels.end());
    if (rotated.image_shape != test.image_shape) shapes_agree = false;
    std::vector<Eigen::Index> slice(static_cast<std::size_t>(test.size()));
    std::iota(slice.begin(), slice.end(),
              static_cast<Eigen::Index>(k) * test.size());
    stream.test_slices.push_back(std::move(slice));
  }
  if (shapes_agree) combined.image_shape = test.image_shape;
  stream.test_set = std::move(combined);
  return stream;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::vector<std::map<int, std::size_t>> class_histograms(
    const ScenarioStream& stream) {
  std::vector<std::map<int, std::size_t>> hists;
  for (const auto& batch : stream.batches) {
    std::map<int, std::size_t> h;
    for (int label : batch.labels) ++h[label];
    hists.push_back(std::move(h));
  }
  return hists;
}

void write_manifest(const std::string& path, const ScenarioStream& stream,
                    const std::map<std::string, std::string>& notes) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << "kind = " << stream.kind << "\n";
  out << "seed = " << stream.seed << "\n";
  out << "batches = " << stream.batches.size() << "\n";
  out << "test_size = " << stream.test_set.size() << "\n";
  for (const auto& [key, value] : notes) out << key << " = " << value << "\n";
  const auto hists = class_histograms(stream);
  for (std::size_t t = 0; t < stream.batches.size(); ++t) {
    out << "batch " << t << ": size = " << stream.batches[t].size()
        << ", classes =";
    for (const auto& [label, count] : hists[t])
      out << ' ' << label << ':' << count;
    out << "\n";
  }
  if (!out) throw ConfigError("failed to write " + path);
}

}  // namespace gmc
