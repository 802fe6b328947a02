#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace vton::kernels {

// Runtime switch between the OpenMP kernels and the serial reference path.
// Both paths execute identical per-element arithmetic, so results are
// bitwise equal regardless of the switch or the thread count.
bool parallel_enabled();
void set_parallel(bool enabled);

// C[m x n] = A[m x k] * B[k x n], row-major. accumulate=true adds into C.
void gemm_nn(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate);
// C[m x n] = A[m x k] * B[n x k]^T
void gemm_nt(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate);
// C[m x n] = A[k x m]^T * B[k x n]
void gemm_tn(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate);

// y = softmax(lambda * x) per row
void softmax_rows(int rows, int cols, const float* x, float lambda, float* y);
// gx += lambda * y .* (gy - sum(gy .* y)) per row
void softmax_rows_backward(int rows, int cols, const float* y, const float* gy, float lambda, float* gx);

// y = (x - mean) * rstd per row, rstd = 1/sqrt(var + eps). rstd may be null.
void layer_norm_rows(int rows, int cols, const float* x, float eps, float* y, float* rstd);
// gx += rstd * (gy - mean(gy) - y * mean(gy .* y)) per row
void layer_norm_rows_backward(int rows, int cols, const float* y, const float* rstd, const float* gy, float* gx);

// exact GELU: y = x * Phi(x)
void gelu(int64_t n, const float* x, float* y);
// gx += gy * (Phi(x) + x * phi(x))
void gelu_backward(int64_t n, const float* x, const float* gy, float* gx);

// 2D axis-split rotary embedding over rows of x[rows x dim].
// First dim/2 channels rotate by pos[i][0], the rest by pos[i][1].
// inverse=true applies the transpose (negated angles).
void rope_rows(int rows, int dim, const float* x, const std::array<int, 2>* pos, float base, bool inverse, float* y);

void add(int64_t n, const float* a, const float* b, float* out);
void sub(int64_t n, const float* a, const float* b, float* out);
void mul(int64_t n, const float* a, const float* b, float* out);
void scale(int64_t n, const float* a, float s, float* out);
// out += a * s
void axpy(int64_t n, const float* a, float s, float* out);
// out += a .* b
void mul_accum(int64_t n, const float* a, const float* b, float* out);

// out[c] += sum over rows of g[r][c]
void colsum_accum(int rows, int cols, const float* g, float* out);

// deterministic serial reduction
double sum(int64_t n, const float* x);

}  // namespace vton::kernels
