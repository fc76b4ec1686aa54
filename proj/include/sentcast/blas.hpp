#pragma once

namespace sentcast::blas {

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C.
// Backed by OpenBLAS (loaded at runtime, pinned to one thread for
// reproducibility) with an internal blocked kernel as fallback.
void dgemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
           int lda, const double* b, int ldb, double beta, double* c, int ldc);

bool using_openblas();

}  // namespace sentcast::blas
