#include "stabfem/kernels.hpp"

#include <atomic>

namespace stabfem::kernels {

namespace scalar {

void spmv(const CsrMatrix& A, const double* x, double* y) {
  for (int i = 0; i < A.rows; ++i) {
    double s = 0.0;
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) s += A.val[k] * x[A.col[k]];
    y[i] = s;
  }
}

void spmv_add(const CsrMatrix& A, double alpha, const double* x, double* y) {
  for (int i = 0; i < A.rows; ++i) {
    double s = 0.0;
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) s += A.val[k] * x[A.col[k]];
    y[i] += alpha * s;
  }
}

void axpy(int n, double a, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

void lincomb(int n, int k, const double* c, const double* const* xs, double* out) {
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += c[j] * xs[j][i];
    out[i] = s;
  }
}

void scale(int n, const double* d, const double* x, double* out) {
  for (int i = 0; i < n; ++i) out[i] = d[i] * x[i];
}

double dot(int n, const double* x, const double* y) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace scalar

namespace {

Isa probe() {
#if defined(STABFEM_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::Avx2;
#endif
  return Isa::Scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detected_isa()};
  return isa;
}

}  // namespace

Isa detected_isa() {
  static const Isa isa = probe();
  return isa;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) isa = Isa::Scalar;
  current().store(isa, std::memory_order_relaxed);
}

std::string isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

#if defined(STABFEM_HAVE_AVX2)
#define STABFEM_DISPATCH(fn, ...)                                  \
  if (active_isa() == Isa::Avx2) return avx2::fn(__VA_ARGS__); \
  return scalar::fn(__VA_ARGS__)
#else
#define STABFEM_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

void spmv(const CsrMatrix& A, const double* x, double* y) { STABFEM_DISPATCH(spmv, A, x, y); }
void spmv_add(const CsrMatrix& A, double alpha, const double* x, double* y) {
  STABFEM_DISPATCH(spmv_add, A, alpha, x, y);
}
void axpy(int n, double a, const double* x, double* y) { STABFEM_DISPATCH(axpy, n, a, x, y); }
void lincomb(int n, int k, const double* c, const double* const* xs, double* out) {
  STABFEM_DISPATCH(lincomb, n, k, c, xs, out);
}
void scale(int n, const double* d, const double* x, double* out) {
  STABFEM_DISPATCH(scale, n, d, x, out);
}
double dot(int n, const double* x, const double* y) { STABFEM_DISPATCH(dot, n, x, y); }

#undef STABFEM_DISPATCH

}  // namespace stabfem::kernels
