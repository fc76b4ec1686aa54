#include "sentcast/blas.hpp"

#include <dlfcn.h>

#include <cstdlib>
#include <mutex>
#include <vector>

namespace sentcast::blas {

namespace {

enum CblasOrder { kRowMajor = 101 };
enum CblasTranspose { kNoTrans = 111, kTrans = 112 };

using CblasDgemmFn = void (*)(int order, int trans_a, int trans_b, int m, int n, int k,
                              double alpha, const double* a, int lda, const double* b, int ldb,
                              double beta, double* c, int ldc);

CblasDgemmFn cblas_dgemm_ptr = nullptr;
std::once_flag load_flag;

void load_openblas() {
  // OpenBLAS's DYNAMIC_ARCH detection misreads some virtualized CPUs and
  // falls back to a generic kernel; pre-seeding the core type from cpuid
  // restores the vectorized kernels.  Must happen before the library loads.
  if (!std::getenv("OPENBLAS_CORETYPE")) {
    if (__builtin_cpu_supports("avx512f")) setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 0);
    else if (__builtin_cpu_supports("avx2")) setenv("OPENBLAS_CORETYPE", "HASWELL", 0);
  }
  void* lib = dlopen("libopenblas.so.0", RTLD_NOW | RTLD_LOCAL);
  if (!lib) lib = dlopen("libopenblas.so", RTLD_NOW | RTLD_LOCAL);
  if (!lib) return;
  auto set_threads = reinterpret_cast<void (*)(int)>(dlsym(lib, "openblas_set_num_threads"));
  if (set_threads) set_threads(1);  // deterministic single-threaded kernels
  cblas_dgemm_ptr = reinterpret_cast<CblasDgemmFn>(dlsym(lib, "cblas_dgemm"));
}

// Fallback: straightforward blocked kernel, only used when OpenBLAS is
// unavailable.  Operands are materialized untransposed first.
void naive_dgemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
                 int lda, const double* b, int ldb, double beta, double* c, int ldc) {
  std::vector<double> at, bt;
  if (trans_a) {
    at.resize(static_cast<size_t>(m) * k);
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p) at[static_cast<size_t>(i) * k + p] = a[static_cast<size_t>(p) * lda + i];
    a = at.data();
    lda = k;
  }
  if (trans_b) {
    bt.resize(static_cast<size_t>(k) * n);
    for (int p = 0; p < k; ++p)
      for (int j = 0; j < n; ++j) bt[static_cast<size_t>(p) * n + j] = b[static_cast<size_t>(j) * ldb + p];
    b = bt.data();
    ldb = n;
  }
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<size_t>(i) * ldc;
    if (beta == 0.0)
      for (int j = 0; j < n; ++j) crow[j] = 0.0;
    else if (beta != 1.0)
      for (int j = 0; j < n; ++j) crow[j] *= beta;
    const double* arow = a + static_cast<size_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      double av = alpha * arow[p];
      const double* brow = b + static_cast<size_t>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

void dgemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
           int lda, const double* b, int ldb, double beta, double* c, int ldc) {
  std::call_once(load_flag, load_openblas);
  if (m == 0 || n == 0) return;
  if (cblas_dgemm_ptr) {
    cblas_dgemm_ptr(kRowMajor, trans_a ? kTrans : kNoTrans, trans_b ? kTrans : kNoTrans, m, n, k,
                    alpha, a, lda, b, ldb, beta, c, ldc);
  } else {
    naive_dgemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
  }
}

bool using_openblas() {
  std::call_once(load_flag, load_openblas);
  return cblas_dgemm_ptr != nullptr;
}

}  // namespace sentcast::blas
