#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hardbatch/errors.hpp"
#include "hardbatch/rng.hpp"
#include "hardbatch/tensor.hpp"

namespace hardbatch {

template <typename T>
struct Dataset {
  Tensor<T> features;            // [num_samples x dim]
  std::vector<int> labels;       // values in [0, num_classes)
  int num_classes = 0;
  std::string split_tag;         // "train" or "test"
  std::vector<long long> class_map;  // remapped index -> original label value

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
};

struct CsvSchema {
  bool has_header = true;
  std::string label_name = "label";  // used when label_index < 0
  int label_index = -1;              // >= 0 selects the label column by position
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line,
                                                    std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

inline double parse_cell(std::string_view cell, std::size_t line_no) {
  // Trim spaces; from_chars is strict about the rest.
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) {
    cell.remove_prefix(1);
  }
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) {
    cell.remove_suffix(1);
  }
  double value = 0.0;
  const auto result = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (result.ec != std::errc() || result.ptr != cell.data() + cell.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" +
                     std::string(cell) + "' as a number");
  }
  return value;
}

}  // namespace detail

// CSV with one label column (by name or index) and numeric feature columns.
// Labels are remapped to [0, C) in ascending order of their original values.
template <typename T>
Dataset<T> load_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file: " + path);

  std::string line;
  std::vector<std::string_view> cells;
  std::size_t line_no = 0;
  int label_col = schema.label_index;
  std::size_t num_cols = 0;

  if (schema.has_header) {
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    detail::split_csv_line(line, cells);
    num_cols = cells.size();
    if (label_col < 0) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == schema.label_name) {
          label_col = static_cast<int>(i);
          break;
        }
      }
      if (label_col < 0) {
        throw ParseError(path + ": no column named '" + schema.label_name + "'");
      }
    }
  } else if (label_col < 0) {
    label_col = 0;
  }

  std::vector<double> feature_rows;
  std::vector<long long> raw_labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    detail::split_csv_line(line, cells);
    if (num_cols == 0) num_cols = cells.size();
    if (cells.size() != num_cols) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(num_cols) + " columns, got " +
                       std::to_string(cells.size()));
    }
    if (label_col >= static_cast<int>(num_cols)) {
      throw ParseError("label column index " + std::to_string(label_col) +
                       " out of range for " + std::to_string(num_cols) + " columns");
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const double value = detail::parse_cell(cells[i], line_no);
      if (static_cast<int>(i) == label_col) {
        const auto as_int = static_cast<long long>(std::llround(value));
        if (static_cast<double>(as_int) != value) {
          throw DataError("line " + std::to_string(line_no) + ": label " +
                          std::string(cells[i]) + " is not integral");
        }
        raw_labels.push_back(as_int);
      } else {
        feature_rows.push_back(value);
      }
    }
  }
  if (raw_labels.empty()) throw ParseError(path + ": no data rows");

  Dataset<T> ds;
  ds.class_map = raw_labels;
  std::sort(ds.class_map.begin(), ds.class_map.end());
  ds.class_map.erase(std::unique(ds.class_map.begin(), ds.class_map.end()),
                     ds.class_map.end());
  ds.num_classes = static_cast<int>(ds.class_map.size());
  ds.labels.reserve(raw_labels.size());
  for (long long raw : raw_labels) {
    const auto it = std::lower_bound(ds.class_map.begin(), ds.class_map.end(), raw);
    ds.labels.push_back(static_cast<int>(it - ds.class_map.begin()));
  }

  const std::size_t n = raw_labels.size();
  const std::size_t dim = num_cols - 1;
  ds.features = Tensor<T>::zeros({n, dim});
  for (std::size_t i = 0; i < feature_rows.size(); ++i) {
    ds.features.data[i] = static_cast<T>(feature_rows[i]);
  }
  return ds;
}

// Inverse of load_csv, precise enough that a reload reproduces features and
// labels exactly.
template <typename T>
void save_csv(const Dataset<T>& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write CSV file: " + path);
  out << "label";
  for (std::size_t j = 0; j < ds.dim(); ++j) out << ",f" << j;
  out << "\n";
  constexpr int digits = std::numeric_limits<T>::max_digits10;
  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const long long raw = ds.class_map.empty()
                              ? ds.labels[i]
                              : ds.class_map[static_cast<std::size_t>(ds.labels[i])];
    out << raw;
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), ",%.*g", digits,
                    static_cast<double>(ds.features.at(i, j)));
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

namespace detail {

inline std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw FormatError(path + ": truncated IDX header");
  }
  return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
         (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

}  // namespace detail

// Standard big-endian MNIST container: magic 0x00000803 for images,
// 0x00000801 for labels. Pixels come out flattened row-major in [0, 1].
template <typename T>
Dataset<T> load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot open IDX images file: " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("cannot open IDX labels file: " + labels_path);

  const std::uint32_t img_magic = detail::read_be32(img, images_path);
  if (img_magic != 0x00000803u) {
    throw FormatError(images_path + ": bad IDX image magic");
  }
  const std::uint32_t num_images = detail::read_be32(img, images_path);
  const std::uint32_t rows = detail::read_be32(img, images_path);
  const std::uint32_t cols = detail::read_be32(img, images_path);

  const std::uint32_t lab_magic = detail::read_be32(lab, labels_path);
  if (lab_magic != 0x00000801u) {
    throw FormatError(labels_path + ": bad IDX label magic");
  }
  const std::uint32_t num_labels = detail::read_be32(lab, labels_path);
  if (num_images != num_labels) {
    throw DataError("IDX image/label count mismatch: " + std::to_string(num_images) +
                    " images vs " + std::to_string(num_labels) + " labels");
  }
  if (num_images == 0) throw DataError(images_path + ": empty IDX dataset");

  const std::size_t dim = std::size_t(rows) * std::size_t(cols);
  std::vector<unsigned char> pixels(std::size_t(num_images) * dim);
  if (!img.read(reinterpret_cast<char*>(pixels.data()),
                static_cast<std::streamsize>(pixels.size()))) {
    throw FormatError(images_path + ": truncated IDX image data");
  }
  std::vector<unsigned char> label_bytes(num_images);
  if (!lab.read(reinterpret_cast<char*>(label_bytes.data()),
                static_cast<std::streamsize>(label_bytes.size()))) {
    throw FormatError(labels_path + ": truncated IDX label data");
  }

  Dataset<T> ds;
  ds.features = Tensor<T>::zeros({num_images, dim});
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    ds.features.data[i] = static_cast<T>(pixels[i]) / T(255);
  }
  int max_label = 0;
  ds.labels.reserve(num_images);
  for (unsigned char b : label_bytes) {
    ds.labels.push_back(static_cast<int>(b));
    max_label = std::max(max_label, static_cast<int>(b));
  }
  ds.num_classes = max_label + 1;
  return ds;
}

// Gaussian class clusters with controllable imbalance. Per-class counts are
// round(fraction * n_samples); the split is stratified 80/20. Centers sit at
// separation/sqrt(2) along seeded random unit directions, so the expected
// pairwise center distance is class_separation.
template <typename T>
std::pair<Dataset<T>, Dataset<T>> synth_imbalanced_blobs(
    long long n_samples, const std::vector<double>& class_fractions, int dim,
    double class_separation, double noise, std::uint64_t seed) {
  const auto num_classes = static_cast<int>(class_fractions.size());
  if (num_classes < 2) throw ConfigError("need at least two class fractions");
  double sum = 0.0;
  for (double f : class_fractions) {
    if (!(f > 0.0)) throw ConfigError("class fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("class fractions must sum to 1");
  if (n_samples < 10LL * num_classes) {
    throw ConfigError("n_samples must be at least 10x the number of classes");
  }
  if (dim < 1) throw ConfigError("dim must be positive");
  if (noise < 0.0 || class_separation < 0.0) {
    throw ConfigError("noise and class_separation must be non-negative");
  }

  std::vector<long long> counts(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    counts[c] = std::llround(class_fractions[c] * static_cast<double>(n_samples));
    if (counts[c] < 1) {
      throw ConfigError("class " + std::to_string(c) +
                        " rounds to zero samples; fractions too small for n");
    }
  }

  Rng rng(mix_seed(seed, seed_stream::blobs));
  std::vector<std::vector<double>> centers(num_classes, std::vector<double>(dim));
  const double radius = class_separation / std::sqrt(2.0);
  for (auto& center : centers) {
    double norm_sq = 0.0;
    for (double& v : center) {
      v = rng.normal();
      norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    for (double& v : center) v = (norm > 0.0) ? v / norm * radius : 0.0;
  }

  Dataset<T> train, test;
  train.split_tag = "train";
  test.split_tag = "test";
  train.num_classes = test.num_classes = num_classes;
  std::vector<T> train_rows, test_rows;
  for (int c = 0; c < num_classes; ++c) {
    const long long train_count = std::llround(0.8 * static_cast<double>(counts[c]));
    for (long long i = 0; i < counts[c]; ++i) {
      const bool to_train = i < train_count;
      auto& rows = to_train ? train_rows : test_rows;
      auto& labels = to_train ? train.labels : test.labels;
      for (int j = 0; j < dim; ++j) {
        rows.push_back(static_cast<T>(centers[c][j] + noise * rng.normal()));
      }
      labels.push_back(c);
    }
  }
  train.features = Tensor<T>::from({train.labels.size(), static_cast<std::size_t>(dim)},
                                   std::move(train_rows));
  test.features = Tensor<T>::from({test.labels.size(), static_cast<std::size_t>(dim)},
                                  std::move(test_rows));
  return {std::move(train), std::move(test)};
}

// Zero-mean unit-variance scaling per feature, statistics from the train
// split only. Constant features are left unscaled.
template <typename T>
void standardize(Dataset<T>& train, Dataset<T>& test) {
  const std::size_t dim = train.dim();
  const std::size_t n = train.size();
  if (n == 0 || dim == 0) return;
  std::vector<double> mean(dim, 0.0), scale(dim, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      mean[j] += static_cast<double>(train.features.at(i, j));
    }
  }
  for (std::size_t j = 0; j < dim; ++j) mean[j] /= static_cast<double>(n);
  std::vector<double> var(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = static_cast<double>(train.features.at(i, j)) - mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  for (Dataset<T>* ds : {&train, &test}) {
    for (std::size_t i = 0; i < ds->size(); ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        ds->features.at(i, j) = static_cast<T>(
            (static_cast<double>(ds->features.at(i, j)) - mean[j]) / scale[j]);
      }
    }
  }
}

}  // namespace hardbatch
