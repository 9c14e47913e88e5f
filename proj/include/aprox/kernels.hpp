#pragma once

// Dense inner-loop kernels with a scalar reference implementation and SIMD
// variants selected at runtime.
//
// Elementwise kernels (prox_elastic, prox_step, axpy, scale) are required to be
// bitwise identical across variants. Reductions (dot, abs_sum, sparse_dot) may
// differ in summation order and are compared with a tolerance.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace aprox::kernels {

using Index = std::uint32_t;

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  const char* name;

  // out[i] = sign(y[i]) * max(|y[i]| - thresh, 0) / scale
  void (*prox_elastic)(const double* y, double* out, std::size_t n, double thresh, double scale);
  // out[i] = prox_elastic(x[i] - eta * u[i])
  void (*prox_step)(const double* x, const double* u, double* out, std::size_t n, double eta,
                    double thresh, double scale);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*abs_sum)(const double* x, std::size_t n);
  // sum_k val[k] * x[idx[k]]
  double (*sparse_dot)(const Index* idx, const double* val, std::size_t nnz, const double* x);
};

const KernelTable& scalar_table() noexcept;

// nullptr when the variant is not compiled in or the CPU lacks the instructions.
const KernelTable* avx2_table() noexcept;

// Best supported table, unless overridden by set_active() or by the APROX_SIMD
// environment variable ("scalar" or "avx2") at first use.
const KernelTable& active() noexcept;

// Returns false if the requested variant is unavailable (active table unchanged).
bool set_active(Isa isa) noexcept;

std::string_view isa_name(Isa isa) noexcept;

}  // namespace aprox::kernels
