#include "aprox/linalg.hpp"

#include <algorithm>

#include "aprox/errors.hpp"

namespace aprox {

SparseVec::SparseVec(std::size_t dim, std::vector<Index> indices, std::vector<double> values)
    : dim_(dim), indices_(std::move(indices)), values_(std::move(values)) {
  require(indices_.size() == values_.size(), "SparseVec: index/value length mismatch");
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    require(indices_[k] < dim_, "SparseVec: index out of range");
    require(k == 0 || indices_[k - 1] < indices_[k], "SparseVec: indices not strictly increasing");
    require(values_[k] != 0.0, "SparseVec: explicit zero stored");
  }
}

SparseVec SparseVec::from_entries(std::size_t dim,
                                  std::vector<std::pair<Index, double>> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  SparseVec out(dim);
  out.indices_.reserve(entries.size());
  out.values_.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    require(entries[k].first < dim, "SparseVec: index out of range");
    require(k == 0 || entries[k - 1].first != entries[k].first, "SparseVec: duplicate index");
    if (entries[k].second == 0.0) continue;
    out.indices_.push_back(entries[k].first);
    out.values_.push_back(entries[k].second);
  }
  return out;
}

double SparseVec::squared_norm() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s;
}

void SparseVec::scale(double factor) {
  require(factor != 0.0, "SparseVec::scale: zero factor breaks canonical form");
  for (double& v : values_) v *= factor;
}

DenseVec SparseVec::to_dense() const {
  DenseVec out(dim_, 0.0);
  for (std::size_t k = 0; k < indices_.size(); ++k) out[indices_[k]] = values_[k];
  return out;
}

double sparse_dot(const SparseVec& a, std::span<const double> x) {
  require(a.dim() == x.size(), "sparse_dot: dimension mismatch");
  return kernels::active().sparse_dot(a.indices().data(), a.values().data(), a.nnz(), x.data());
}

void axpy_sparse(double alpha, const SparseVec& a, std::span<double> x) {
  require(a.dim() == x.size(), "axpy_sparse: dimension mismatch");
  const auto idx = a.indices();
  const auto val = a.values();
  for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] += alpha * val[k];
}

void axpy_sparse_range(double alpha, const SparseVec& a, std::span<double> x, std::size_t begin,
                       std::size_t end) {
  require(a.dim() == x.size(), "axpy_sparse_range: dimension mismatch");
  const auto idx = a.indices();
  const auto val = a.values();
  auto first = std::lower_bound(idx.begin(), idx.end(), static_cast<Index>(begin));
  for (auto it = first; it != idx.end() && *it < end; ++it) {
    x[*it] += alpha * val[static_cast<std::size_t>(it - idx.begin())];
  }
}

BlockPartition::BlockPartition(std::size_t dim, std::size_t blocks)
    : dim_(dim), blocks_(blocks), width_(blocks == 0 ? 0 : dim / blocks) {
  require(blocks >= 1, "BlockPartition: need at least one block");
  require(blocks <= dim, "BlockPartition: more blocks than coordinates");
}

BlockRange BlockPartition::block(std::size_t j) const {
  require(j < blocks_, "BlockPartition: block index out of range");
  const std::size_t begin = j * width_;
  const std::size_t end = j + 1 == blocks_ ? dim_ : begin + width_;
  return {begin, end};
}

std::size_t BlockPartition::block_of(std::size_t coordinate) const {
  require(coordinate < dim_, "BlockPartition: coordinate out of range");
  return std::min(coordinate / width_, blocks_ - 1);
}

}  // namespace aprox
