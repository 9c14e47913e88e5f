#pragma once

// LIBSVM ingestion, row normalization, synthetic datasets with a planted
// sparsity level, and dataset statistics.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "aprox/problem.hpp"

namespace aprox {

struct LibsvmOptions {
  std::optional<std::size_t> expected_dim;
  // Map labels {0, 1} to {-1, +1} when every label is 0 or 1.
  bool map_binary_labels = true;
};

// Lines are `label idx:val idx:val ...` with 1-based indices. Explicit zero
// values are dropped; duplicate or zero indices are ParseErrors carrying the
// line number. Files ending in ".gz" are decompressed.
Dataset parse_libsvm(std::string_view text, const LibsvmOptions& opts = {});
Dataset read_libsvm(const std::filesystem::path& path, const LibsvmOptions& opts = {});

void write_libsvm(const std::filesystem::path& path, const Dataset& data);

struct NormalizedDataset {
  Dataset data;
  std::size_t zero_rows = 0;  // rows left untouched because their norm is 0
};

// Scales each row to unit L2 norm.
NormalizedDataset normalize_rows(const Dataset& data);

enum class LabelRule {
  logistic,  // b = +1 with probability sigma(a^T w), else -1
  sign,      // b = sign(a^T w), ties to +1
  linear,    // b = a^T w + 0.1 * N(0, 1)
};

struct SynthSpec {
  std::size_t n = 100;
  std::size_t d = 10;
  double delta = 1.0;  // target sparsity, (0, 1]
  LabelRule labels = LabelRule::logistic;
  std::uint64_t seed = 0;
};

// Every feature appears in exactly ceil(delta * n) uniformly chosen rows with
// standard normal values, so the achieved sparsity is ceil(delta * n) / n.
// Labels come from a planted model w ~ N(0, I); rows are normalized.
Dataset synth_dataset(const SynthSpec& spec);

// Parses "n=200,d=20,delta=1,labels=logistic,seed=3" (any subset, any order).
SynthSpec parse_synth_spec(std::string_view text);

struct DatasetStats {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t nnz = 0;
  double delta = 0.0;
  std::map<double, std::size_t> label_counts;
  double max_row_norm = 0.0;
};

DatasetStats dataset_stats(const Dataset& data);

// Flat `key=value` lines.
std::string stats_to_key_value(const DatasetStats& st);
std::string stats_to_json(const DatasetStats& st);

}  // namespace aprox
