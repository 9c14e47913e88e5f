#pragma once

// Regularized empirical risk P(x) = (1/n) sum_i f_i(x) + l1 ||x||_1 + (l2/2) ||x||^2
// with logistic or least-squares component losses, plus the gradient and
// proximal machinery the solvers are built from.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "aprox/linalg.hpp"

namespace aprox {

enum class LossKind { logistic, least_squares };

struct Regularizer {
  double l1 = 0.0;
  double l2 = 0.0;
};

struct Example {
  SparseVec a;
  double b = 0.0;
};

class Dataset {
 public:
  // Requires at least one example and a shared dimension.
  Dataset(std::size_t dim, std::vector<Example> examples);

  std::size_t n() const noexcept { return examples_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t nnz() const noexcept { return nnz_; }
  const Example& operator[](std::size_t i) const { return examples_[i]; }
  std::span<const Example> examples() const noexcept { return examples_; }

 private:
  std::size_t dim_;
  std::size_t nnz_ = 0;
  std::vector<Example> examples_;
};

class Problem {
 public:
  // Logistic problems require every label in {-1, +1}.
  Problem(std::shared_ptr<const Dataset> data, LossKind loss, Regularizer reg);

  const Dataset& data() const noexcept { return *data_; }
  std::shared_ptr<const Dataset> shared_data() const noexcept { return data_; }
  LossKind loss() const noexcept { return loss_; }
  const Regularizer& reg() const noexcept { return reg_; }
  std::size_t n() const noexcept { return data_->n(); }
  std::size_t dim() const noexcept { return data_->dim(); }

 private:
  std::shared_ptr<const Dataset> data_;
  LossKind loss_;
  Regularizer reg_;
};

// Loss and its derivative as functions of the margin z = a^T x.
double loss_from_margin(LossKind kind, double margin, double label) noexcept;
double loss_slope(LossKind kind, double margin, double label) noexcept;

double loss_value(LossKind kind, const Example& ex, std::span<const double> x);
SparseVec loss_grad(LossKind kind, const Example& ex, std::span<const double> x);

DenseVec minibatch_grad(LossKind kind, const Dataset& data, std::span<const std::size_t> batch,
                        std::span<const double> x);

// Per-example slopes f_i'(a_i^T x), computed by `workers` threads.
std::vector<double> margin_slopes(LossKind kind, const Dataset& data, std::span<const double> x,
                                  std::size_t workers);

// (1/n) sum_i grad f_i(x). Slopes are computed in parallel, then reduced in
// example order, so the result does not depend on the worker count.
DenseVec full_grad(LossKind kind, const Dataset& data, std::span<const double> x,
                   std::size_t workers = 1);

// Stage anchor: x_tilde, the exact full gradient there, and the per-example
// slopes at x_tilde (so grad f_B(x_tilde) needs no extra margin evaluations).
struct VRAnchor {
  DenseVec x_tilde;
  DenseVec full_grad;
  std::vector<double> slopes;
};

VRAnchor make_anchor(LossKind kind, const Dataset& data, std::span<const double> x_tilde,
                     std::size_t workers = 1);

// grad f_B(x_read) - grad f_B(x_tilde) + grad F(x_tilde)
DenseVec vr_gradient(LossKind kind, const Dataset& data, std::span<const std::size_t> batch,
                     std::span<const double> x_read, const VRAnchor& anchor);

// The same vector restricted to `range`; out.size() == range.size().
void vr_gradient_block(LossKind kind, const Dataset& data, std::span<const std::size_t> batch,
                       std::span<const double> x_read, const VRAnchor& anchor, BlockRange range,
                       std::span<double> out);

// Coordinate-wise closed form of argmin_x 0.5||x - y||^2 + step * R(x).
void prox_elastic(std::span<const double> y, double step, const Regularizer& reg,
                  std::span<double> out);
DenseVec prox_elastic(std::span<const double> y, double step, const Regularizer& reg);

// prox_elastic on block j only; every other coordinate is copied through.
DenseVec prox_block(std::span<const double> y, const BlockPartition& p, std::size_t j, double step,
                    const Regularizer& reg);

// out = prox_{step R}(x - step * u), elementwise over equal-length spans.
void prox_gradient_step(std::span<const double> x, std::span<const double> u, double step,
                        const Regularizer& reg, std::span<double> out);

double regularizer_value(const Regularizer& reg, std::span<const double> x);
double empirical_risk(LossKind kind, const Dataset& data, std::span<const double> x);
double objective_value(LossKind kind, const Dataset& data, const Regularizer& reg,
                       std::span<const double> x);
inline double objective_value(const Problem& p, std::span<const double> x) {
  return objective_value(p.loss(), p.data(), p.reg(), x);
}

// || (x - prox_{eta R}(x - eta grad F(x))) / eta ||_2
double prox_gradient_mapping_norm(const Problem& p, std::span<const double> x, double eta,
                                  std::size_t workers = 1);

}  // namespace aprox
