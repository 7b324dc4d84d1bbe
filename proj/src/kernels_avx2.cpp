// Compiled with -mavx2 -mfma; only reached when the CPU reports both.
#include <immintrin.h>

#include "stabfem/kernels.hpp"

namespace stabfem::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double row_dot(const CsrMatrix& A, int i, const double* x) {
  const int begin = A.row_ptr[i], end = A.row_ptr[i + 1];
  __m256d acc = _mm256_setzero_pd();
  int k = begin;
  for (; k + 4 <= end; k += 4) {
    const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&A.col[k]));
    const __m256d xv = _mm256_i32gather_pd(x, idx, 8);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(&A.val[k]), xv, acc);
  }
  double s = hsum(acc);
  for (; k < end; ++k) s += A.val[k] * x[A.col[k]];
  return s;
}

}  // namespace

void spmv(const CsrMatrix& A, const double* x, double* y) {
  for (int i = 0; i < A.rows; ++i) y[i] = row_dot(A, i, x);
}

void spmv_add(const CsrMatrix& A, double alpha, const double* x, double* y) {
  for (int i = 0; i < A.rows; ++i) y[i] += alpha * row_dot(A, i, x);
}

void axpy(int n, double a, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(a);
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void lincomb(int n, int k, const double* c, const double* const* xs, double* out) {
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (int j = 0; j < k; ++j)
      acc = _mm256_fmadd_pd(_mm256_set1_pd(c[j]), _mm256_loadu_pd(xs[j] + i), acc);
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += c[j] * xs[j][i];
    out[i] = s;
  }
}

void scale(int n, const double* d, const double* x, double* out) {
  int i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(d + i), _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = d[i] * x[i];
}

double dot(int n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  int i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace stabfem::kernels::avx2
