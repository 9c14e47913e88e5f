#pragma once

// Sparse/dense vector primitives and the contiguous block partition used by the
// coordinate-block solvers.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "aprox/kernels.hpp"

namespace aprox {

using Index = kernels::Index;
using DenseVec = std::vector<double>;

// Canonical sparse vector: strictly increasing indices below dim, no stored zeros.
class SparseVec {
 public:
  SparseVec() = default;
  explicit SparseVec(std::size_t dim) : dim_(dim) {}
  // Throws ContractError unless the entries are already canonical.
  SparseVec(std::size_t dim, std::vector<Index> indices, std::vector<double> values);

  // Sorts, rejects duplicates and out-of-range indices, drops explicit zeros.
  static SparseVec from_entries(std::size_t dim, std::vector<std::pair<Index, double>> entries);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t nnz() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  std::span<const Index> indices() const noexcept { return indices_; }
  std::span<const double> values() const noexcept { return values_; }

  double squared_norm() const noexcept;

  // Multiplies every stored value by a nonzero factor.
  void scale(double factor);

  DenseVec to_dense() const;

 private:
  std::size_t dim_ = 0;
  std::vector<Index> indices_;
  std::vector<double> values_;
};

double sparse_dot(const SparseVec& a, std::span<const double> x);

// x[j] += alpha * a[j] over the stored entries of a; other coordinates untouched.
void axpy_sparse(double alpha, const SparseVec& a, std::span<double> x);

// Same, restricted to coordinates in [begin, end).
void axpy_sparse_range(double alpha, const SparseVec& a, std::span<double> x, std::size_t begin,
                       std::size_t end);

struct BlockRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
  friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

// Partition of {0..d-1} into m contiguous blocks of floor(d/m) coordinates; the
// last block absorbs the remainder. Block indices are 0-based.
class BlockPartition {
 public:
  BlockPartition(std::size_t dim, std::size_t blocks);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t blocks() const noexcept { return blocks_; }
  BlockRange block(std::size_t j) const;
  std::size_t block_of(std::size_t coordinate) const;

 private:
  std::size_t dim_;
  std::size_t blocks_;
  std::size_t width_;
};

template <typename T>
std::span<T> block_view(std::span<T> x, const BlockPartition& p, std::size_t j) {
  const BlockRange r = p.block(j);
  return x.subspan(r.begin, r.size());
}

}  // namespace aprox
