#include "kernels_impl.hpp"

#include <immintrin.h>

#include <cmath>

namespace aprox::kernels::detail {

namespace {

inline double shrink1(double y, double thresh, double scale) {
  double a = std::fabs(y) - thresh;
  a = a > 0.0 ? a : 0.0;
  return std::copysign(a, y) / scale;
}

// max_pd(a, 0) returns the second operand for NaN and for signed zeros, which
// is exactly what the scalar `a > 0 ? a : 0.0` does.
inline __m256d shrink4(__m256d y, __m256d thresh, __m256d scale) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d magnitude = _mm256_andnot_pd(sign_mask, y);
  __m256d a = _mm256_sub_pd(magnitude, thresh);
  a = _mm256_max_pd(a, _mm256_setzero_pd());
  a = _mm256_or_pd(a, _mm256_and_pd(sign_mask, y));
  return _mm256_div_pd(a, scale);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void prox_elastic(const double* y, double* out, std::size_t n, double thresh, double scale) {
  const __m256d t = _mm256_set1_pd(thresh);
  const __m256d s = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, shrink4(_mm256_loadu_pd(y + i), t, s));
  }
  for (; i < n; ++i) out[i] = shrink1(y[i], thresh, scale);
}

void prox_step(const double* x, const double* u, double* out, std::size_t n, double eta,
               double thresh, double scale) {
  const __m256d e = _mm256_set1_pd(eta);
  const __m256d t = _mm256_set1_pd(thresh);
  const __m256d s = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d y =
        _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(e, _mm256_loadu_pd(u + i)));
    _mm256_storeu_pd(out + i, shrink4(y, t, s));
  }
  for (; i < n; ++i) {
    const double y = x[i] - eta * u[i];
    out[i] = shrink1(y, thresh, scale);
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r =
        _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(a, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(a, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] = alpha * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double abs_sum(const double* x, std::size_t n) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(x + i)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += std::fabs(x[i]);
  return s;
}

double sparse_dot(const Index* idx, const double* val, std::size_t nnz, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= nnz; k += 4) {
    const __m128i vi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(idx + k));
    const __m256d xv = _mm256_i32gather_pd(x, vi, 8);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(val + k), xv));
  }
  double s = hsum(acc);
  for (; k < nnz; ++k) s += val[k] * x[idx[k]];
  return s;
}

}  // namespace

const KernelTable kAvx2Table{
    Isa::avx2, "avx2", prox_elastic, prox_step, axpy, scale, dot, abs_sum, sparse_dot,
};

}  // namespace aprox::kernels::detail
