#include "kernels_impl.hpp"

#include <cmath>

namespace aprox::kernels::detail {

namespace {

inline double shrink(double y, double thresh, double scale) {
  double a = std::fabs(y) - thresh;
  a = a > 0.0 ? a : 0.0;
  return std::copysign(a, y) / scale;
}

void prox_elastic(const double* y, double* out, std::size_t n, double thresh, double scale) {
  for (std::size_t i = 0; i < n; ++i) out[i] = shrink(y[i], thresh, scale);
}

void prox_step(const double* x, const double* u, double* out, std::size_t n, double eta,
               double thresh, double scale) {
  for (std::size_t i = 0; i < n; ++i) {
    const double y = x[i] - eta * u[i];
    out[i] = shrink(y, thresh, scale);
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = alpha * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double abs_sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::fabs(x[i]);
  return s;
}

double sparse_dot(const Index* idx, const double* val, std::size_t nnz, const double* x) {
  double s = 0.0;
  for (std::size_t k = 0; k < nnz; ++k) s += val[k] * x[idx[k]];
  return s;
}

}  // namespace

const KernelTable kScalarTable{
    Isa::scalar, "scalar", prox_elastic, prox_step, axpy, scale, dot, abs_sum, sparse_dot,
};

}  // namespace aprox::kernels::detail
