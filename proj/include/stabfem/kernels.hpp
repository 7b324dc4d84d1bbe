#pragma once

#include <string>
#include <vector>

namespace stabfem {

/// Compressed sparse row matrix.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;

  std::size_t nnz() const { return val.size(); }
};

namespace kernels {

enum class Isa { Scalar, Avx2 };

/// Best instruction set supported by this CPU and build.
Isa detected_isa();
/// Instruction set used by the dispatching entry points.
Isa active_isa();
/// Overrides dispatch (tests); requesting an unsupported ISA falls back to scalar.
void set_isa(Isa isa);
std::string isa_name(Isa isa);

/// y = A x
void spmv(const CsrMatrix& A, const double* x, double* y);
/// y += alpha A x
void spmv_add(const CsrMatrix& A, double alpha, const double* x, double* y);
/// y += a x
void axpy(int n, double a, const double* x, double* y);
/// out = sum_k c[k] xs[k]
void lincomb(int n, int k, const double* c, const double* const* xs, double* out);
/// out = d .* x
void scale(int n, const double* d, const double* x, double* out);
double dot(int n, const double* x, const double* y);

namespace scalar {
void spmv(const CsrMatrix& A, const double* x, double* y);
void spmv_add(const CsrMatrix& A, double alpha, const double* x, double* y);
void axpy(int n, double a, const double* x, double* y);
void lincomb(int n, int k, const double* c, const double* const* xs, double* out);
void scale(int n, const double* d, const double* x, double* out);
double dot(int n, const double* x, const double* y);
}  // namespace scalar

#if defined(STABFEM_HAVE_AVX2)
namespace avx2 {
void spmv(const CsrMatrix& A, const double* x, double* y);
void spmv_add(const CsrMatrix& A, double alpha, const double* x, double* y);
void axpy(int n, double a, const double* x, double* y);
void lincomb(int n, int k, const double* c, const double* const* xs, double* out);
void scale(int n, const double* d, const double* x, double* out);
double dot(int n, const double* x, const double* y);
}  // namespace avx2
#endif

}  // namespace kernels
}  // namespace stabfem
