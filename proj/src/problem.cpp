#include "aprox/problem.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <thread>

#include "aprox/errors.hpp"

namespace aprox {

Dataset::Dataset(std::size_t dim, std::vector<Example> examples)
    : dim_(dim), examples_(std::move(examples)) {
  require(!examples_.empty(), "Dataset: need at least one example");
  for (const Example& ex : examples_) {
    require(ex.a.dim() == dim_, "Dataset: example dimension differs from dataset dimension");
    nnz_ += ex.a.nnz();
  }
}

Problem::Problem(std::shared_ptr<const Dataset> data, LossKind loss, Regularizer reg)
    : data_(std::move(data)), loss_(loss), reg_(reg) {
  require(data_ != nullptr, "Problem: null dataset");
  require(reg_.l1 >= 0.0 && reg_.l2 >= 0.0, "Problem: negative regularization weight");
  if (loss_ == LossKind::logistic) {
    for (const Example& ex : data_->examples()) {
      require(ex.b == 1.0 || ex.b == -1.0, "Problem: logistic loss needs labels in {-1,+1}");
    }
  }
}

double loss_from_margin(LossKind kind, double margin, double label) noexcept {
  if (kind == LossKind::least_squares) {
    const double r = margin - label;
    return 0.5 * r * r;
  }
  // log(1 + exp(-t)), split at t = 0 so exp never overflows.
  const double t = label * margin;
  if (t >= 0.0) return std::log1p(std::exp(-t));
  return -t + std::log1p(std::exp(t));
}

double loss_slope(LossKind kind, double margin, double label) noexcept {
  if (kind == LossKind::least_squares) return margin - label;
  // -b * sigma(-b z)
  const double t = label * margin;
  double sig;
  if (t >= 0.0) {
    const double e = std::exp(-t);
    sig = e / (1.0 + e);
  } else {
    sig = 1.0 / (1.0 + std::exp(t));
  }
  return -label * sig;
}

double loss_value(LossKind kind, const Example& ex, std::span<const double> x) {
  return loss_from_margin(kind, sparse_dot(ex.a, x), ex.b);
}

SparseVec loss_grad(LossKind kind, const Example& ex, std::span<const double> x) {
  const double slope = loss_slope(kind, sparse_dot(ex.a, x), ex.b);
  std::vector<std::pair<Index, double>> entries;
  entries.reserve(ex.a.nnz());
  const auto idx = ex.a.indices();
  const auto val = ex.a.values();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double g = slope * val[k];
    if (g != 0.0) entries.emplace_back(idx[k], g);
  }
  return SparseVec::from_entries(ex.a.dim(), std::move(entries));
}

DenseVec minibatch_grad(LossKind kind, const Dataset& data, std::span<const std::size_t> batch,
                        std::span<const double> x) {
  require(!batch.empty(), "minibatch_grad: empty batch");
  require(x.size() == data.dim(), "minibatch_grad: dimension mismatch");
  DenseVec g(data.dim(), 0.0);
  for (std::size_t i : batch) {
    require(i < data.n(), "minibatch_grad: example index out of range");
    const Example& ex = data[i];
    axpy_sparse(loss_slope(kind, sparse_dot(ex.a, x), ex.b), ex.a, g);
  }
  kernels::active().scale(1.0 / static_cast<double>(batch.size()), g.data(), g.size());
  return g;
}

std::vector<double> margin_slopes(LossKind kind, const Dataset& data, std::span<const double> x,
                                  std::size_t workers) {
  require(workers >= 1, "margin_slopes: need at least one worker");
  require(x.size() == data.dim(), "margin_slopes: dimension mismatch");
  const std::size_t n = data.n();
  std::vector<double> slopes(n);
  auto shard = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Example& ex = data[i];
      slopes[i] = loss_slope(kind, sparse_dot(ex.a, x), ex.b);
    }
  };
  workers = std::min(workers, n);
  if (workers == 1) {
    shard(0, n);
    return slopes;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t p = 0; p < workers; ++p) {
    pool.emplace_back(shard, p * n / workers, (p + 1) * n / workers);
  }
  pool.clear();
  return slopes;
}

namespace {

DenseVec reduce_slopes(const Dataset& data, std::span<const double> slopes) {
  DenseVec g(data.dim(), 0.0);
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (slopes[i] != 0.0) axpy_sparse(slopes[i], data[i].a, g);
  }
  kernels::active().scale(1.0 / static_cast<double>(data.n()), g.data(), g.size());
  return g;
}

}  // namespace

DenseVec full_grad(LossKind kind, const Dataset& data, std::span<const double> x,
                   std::size_t workers) {
  const std::vector<double> slopes = margin_slopes(kind, data, x, workers);
  return reduce_slopes(data, slopes);
}

VRAnchor make_anchor(LossKind kind, const Dataset& data, std::span<const double> x_tilde,
                     std::size_t workers) {
  VRAnchor anchor;
  anchor.x_tilde.assign(x_tilde.begin(), x_tilde.end());
  anchor.slopes = margin_slopes(kind, data, x_tilde, workers);
  anchor.full_grad = reduce_slopes(data, anchor.slopes);
#ifndef NDEBUG
  assert(full_grad(kind, data, x_tilde, 1) == anchor.full_grad);
#endif
  return anchor;
}

void vr_gradient_block(LossKind kind, const Dataset& data, std::span<const std::size_t> batch,
                       std::span<const double> x_read, const VRAnchor& anchor, BlockRange range,
                       std::span<double> out) {
  require(!batch.empty(), "vr_gradient: empty batch");
  require(x_read.size() == data.dim(), "vr_gradient: dimension mismatch");
  require(anchor.full_grad.size() == data.dim() && anchor.slopes.size() == data.n(),
          "vr_gradient: anchor does not match dataset");
  require(range.end <= data.dim() && range.begin <= range.end && out.size() == range.size(),
          "vr_gradient: bad output range");
  std::copy(anchor.full_grad.begin() + static_cast<std::ptrdiff_t>(range.begin),
            anchor.full_grad.begin() + static_cast<std::ptrdiff_t>(range.end), out.begin());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const bool whole = range.begin == 0 && range.end == data.dim();
  for (std::size_t i : batch) {
    require(i < data.n(), "vr_gradient: example index out of range");
    const Example& ex = data[i];
    const double delta = loss_slope(kind, sparse_dot(ex.a, x_read), ex.b) - anchor.slopes[i];
    if (delta == 0.0) continue;
    const double w = delta * inv_b;
    const auto idx = ex.a.indices();
    const auto val = ex.a.values();
    if (whole) {
      for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] += w * val[k];
      continue;
    }
    auto it = std::lower_bound(idx.begin(), idx.end(), static_cast<Index>(range.begin));
    for (; it != idx.end() && *it < range.end; ++it) {
      out[*it - range.begin] += w * val[static_cast<std::size_t>(it - idx.begin())];
    }
  }
}

DenseVec vr_gradient(LossKind kind, const Dataset& data, std::span<const std::size_t> batch,
                     std::span<const double> x_read, const VRAnchor& anchor) {
  DenseVec out(data.dim());
  vr_gradient_block(kind, data, batch, x_read, anchor, {0, data.dim()}, out);
  return out;
}

void prox_elastic(std::span<const double> y, double step, const Regularizer& reg,
                  std::span<double> out) {
  require(step > 0.0, "prox_elastic: step must be positive");
  require(out.size() == y.size(), "prox_elastic: size mismatch");
  kernels::active().prox_elastic(y.data(), out.data(), y.size(), step * reg.l1,
                                 1.0 + step * reg.l2);
}

DenseVec prox_elastic(std::span<const double> y, double step, const Regularizer& reg) {
  DenseVec out(y.size());
  prox_elastic(y, step, reg, out);
  return out;
}

DenseVec prox_block(std::span<const double> y, const BlockPartition& p, std::size_t j, double step,
                    const Regularizer& reg) {
  require(y.size() == p.dim(), "prox_block: dimension mismatch");
  DenseVec out(y.begin(), y.end());
  const BlockRange r = p.block(j);
  prox_elastic(y.subspan(r.begin, r.size()), step, reg,
               std::span<double>(out).subspan(r.begin, r.size()));
  return out;
}

void prox_gradient_step(std::span<const double> x, std::span<const double> u, double step,
                        const Regularizer& reg, std::span<double> out) {
  require(step > 0.0, "prox_gradient_step: step must be positive");
  require(x.size() == u.size() && x.size() == out.size(), "prox_gradient_step: size mismatch");
  kernels::active().prox_step(x.data(), u.data(), out.data(), x.size(), step, step * reg.l1,
                              1.0 + step * reg.l2);
}

double regularizer_value(const Regularizer& reg, std::span<const double> x) {
  const auto& k = kernels::active();
  double r = 0.0;
  if (reg.l1 != 0.0) r += reg.l1 * k.abs_sum(x.data(), x.size());
  if (reg.l2 != 0.0) r += 0.5 * reg.l2 * k.dot(x.data(), x.data(), x.size());
  return r;
}

double empirical_risk(LossKind kind, const Dataset& data, std::span<const double> x) {
  require(x.size() == data.dim(), "empirical_risk: dimension mismatch");
  double s = 0.0;
  for (const Example& ex : data.examples()) s += loss_value(kind, ex, x);
  return s / static_cast<double>(data.n());
}

double objective_value(LossKind kind, const Dataset& data, const Regularizer& reg,
                       std::span<const double> x) {
  return empirical_risk(kind, data, x) + regularizer_value(reg, x);
}

double prox_gradient_mapping_norm(const Problem& p, std::span<const double> x, double eta,
                                  std::size_t workers) {
  const DenseVec g = full_grad(p.loss(), p.data(), x, workers);
  DenseVec next(x.size());
  prox_gradient_step(x, g, eta, p.reg(), next);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double gi = (x[i] - next[i]) / eta;
    s += gi * gi;
  }
  return std::sqrt(s);
}

}  // namespace aprox
