#include "vton/kernels.hpp"

#include <atomic>
#include <cmath>

namespace vton::kernels {

namespace {

std::atomic<bool> g_parallel{true};

constexpr int64_t kParallelCutoff = 4096;

inline void gemm_nn_row(int i, int n, int k, const float* __restrict__ a, const float* __restrict__ b,
                        float* __restrict__ c, bool accumulate) {
    float* __restrict__ ci = c + static_cast<int64_t>(i) * n;
    if (!accumulate) {
        for (int j = 0; j < n; ++j) ci[j] = 0.0f;
    }
    const float* __restrict__ ai = a + static_cast<int64_t>(i) * k;
    for (int l = 0; l < k; ++l) {
        const float ail = ai[l];
        const float* __restrict__ bl = b + static_cast<int64_t>(l) * n;
        for (int j = 0; j < n; ++j) ci[j] += ail * bl[j];
    }
}

inline void gemm_nt_row(int i, int n, int k, const float* __restrict__ a, const float* __restrict__ b,
                        float* __restrict__ c, bool accumulate) {
    float* __restrict__ ci = c + static_cast<int64_t>(i) * n;
    const float* __restrict__ ai = a + static_cast<int64_t>(i) * k;
    for (int j = 0; j < n; ++j) {
        const float* __restrict__ bj = b + static_cast<int64_t>(j) * k;
        float acc = 0.0f;
        for (int l = 0; l < k; ++l) acc += ai[l] * bj[l];
        ci[j] = accumulate ? ci[j] + acc : acc;
    }
}

inline void gemm_tn_row(int i, int m, int n, int k, const float* __restrict__ a, const float* __restrict__ b,
                        float* __restrict__ c, bool accumulate) {
    // row i of C = sum over l of A[l][i] * B[l][:]
    float* __restrict__ ci = c + static_cast<int64_t>(i) * n;
    if (!accumulate) {
        for (int j = 0; j < n; ++j) ci[j] = 0.0f;
    }
    for (int l = 0; l < k; ++l) {
        const float ali = a[static_cast<int64_t>(l) * m + i];
        const float* __restrict__ bl = b + static_cast<int64_t>(l) * n;
        for (int j = 0; j < n; ++j) ci[j] += ali * bl[j];
    }
}

inline void softmax_row(int cols, const float* x, float lambda, float* y) {
    float mx = lambda * x[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, lambda * x[j]);
    float denom = 0.0f;
    for (int j = 0; j < cols; ++j) {
        float e = std::exp(lambda * x[j] - mx);
        y[j] = e;
        denom += e;
    }
    float inv = 1.0f / denom;
    for (int j = 0; j < cols; ++j) y[j] *= inv;
}

inline void softmax_row_backward(int cols, const float* y, const float* gy, float lambda, float* gx) {
    float dot = 0.0f;
    for (int j = 0; j < cols; ++j) dot += gy[j] * y[j];
    for (int j = 0; j < cols; ++j) gx[j] += lambda * y[j] * (gy[j] - dot);
}

inline void layer_norm_row(int cols, const float* x, float eps, float* y, float* rstd_out) {
    float mean = 0.0f;
    for (int j = 0; j < cols; ++j) mean += x[j];
    mean /= static_cast<float>(cols);
    float var = 0.0f;
    for (int j = 0; j < cols; ++j) {
        float d = x[j] - mean;
        var += d * d;
    }
    var /= static_cast<float>(cols);
    float rstd = 1.0f / std::sqrt(var + eps);
    for (int j = 0; j < cols; ++j) y[j] = (x[j] - mean) * rstd;
    if (rstd_out) *rstd_out = rstd;
}

inline void layer_norm_row_backward(int cols, const float* y, float rstd, const float* gy, float* gx) {
    float mean_g = 0.0f;
    float mean_gy = 0.0f;
    for (int j = 0; j < cols; ++j) {
        mean_g += gy[j];
        mean_gy += gy[j] * y[j];
    }
    mean_g /= static_cast<float>(cols);
    mean_gy /= static_cast<float>(cols);
    for (int j = 0; j < cols; ++j) gx[j] += rstd * (gy[j] - mean_g - y[j] * mean_gy);
}

constexpr float kInvSqrt2 = 0.70710678118654752440f;
constexpr float kInvSqrt2Pi = 0.39894228040143267794f;

inline float gelu_one(float x) {
    return 0.5f * x * (1.0f + std::erf(x * kInvSqrt2));
}

inline float gelu_grad_one(float x) {
    float cdf = 0.5f * (1.0f + std::erf(x * kInvSqrt2));
    float pdf = kInvSqrt2Pi * std::exp(-0.5f * x * x);
    return cdf + x * pdf;
}

inline void rope_row(int dim, const float* x, int pos_row, int pos_col, const float* freqs, bool inverse,
                     float* y) {
    const int half = dim / 2;
    const int pairs = half / 2;
    for (int axis = 0; axis < 2; ++axis) {
        const float p = static_cast<float>(axis == 0 ? pos_row : pos_col);
        const float* xs = x + axis * half;
        float* ys = y + axis * half;
        for (int i = 0; i < pairs; ++i) {
            float angle = p * freqs[i];
            if (inverse) angle = -angle;
            float c = std::cos(angle);
            float s = std::sin(angle);
            float x0 = xs[2 * i];
            float x1 = xs[2 * i + 1];
            ys[2 * i] = x0 * c - x1 * s;
            ys[2 * i + 1] = x0 * s + x1 * c;
        }
    }
}

}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool enabled) { g_parallel.store(enabled, std::memory_order_relaxed); }

void gemm_nn(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate) {
    const bool par = parallel_enabled() && static_cast<int64_t>(m) * n * k > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < m; ++i) gemm_nn_row(i, n, k, a, b, c, accumulate);
}

void gemm_nt(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate) {
    const bool par = parallel_enabled() && static_cast<int64_t>(m) * n * k > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < m; ++i) gemm_nt_row(i, n, k, a, b, c, accumulate);
}

void gemm_tn(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate) {
    const bool par = parallel_enabled() && static_cast<int64_t>(m) * n * k > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < m; ++i) gemm_tn_row(i, m, n, k, a, b, c, accumulate);
}

void softmax_rows(int rows, int cols, const float* x, float lambda, float* y) {
    const bool par = parallel_enabled() && static_cast<int64_t>(rows) * cols > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < rows; ++i) {
        softmax_row(cols, x + static_cast<int64_t>(i) * cols, lambda, y + static_cast<int64_t>(i) * cols);
    }
}

void softmax_rows_backward(int rows, int cols, const float* y, const float* gy, float lambda, float* gx) {
    const bool par = parallel_enabled() && static_cast<int64_t>(rows) * cols > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < rows; ++i) {
        int64_t off = static_cast<int64_t>(i) * cols;
        softmax_row_backward(cols, y + off, gy + off, lambda, gx + off);
    }
}

void layer_norm_rows(int rows, int cols, const float* x, float eps, float* y, float* rstd) {
    const bool par = parallel_enabled() && static_cast<int64_t>(rows) * cols > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < rows; ++i) {
        int64_t off = static_cast<int64_t>(i) * cols;
        layer_norm_row(cols, x + off, eps, y + off, rstd ? rstd + i : nullptr);
    }
}

void layer_norm_rows_backward(int rows, int cols, const float* y, const float* rstd, const float* gy, float* gx) {
    const bool par = parallel_enabled() && static_cast<int64_t>(rows) * cols > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < rows; ++i) {
        int64_t off = static_cast<int64_t>(i) * cols;
        layer_norm_row_backward(cols, y + off, rstd[i], gy + off, gx + off);
    }
}

void gelu(int64_t n, const float* x, float* y) {
    const bool par = parallel_enabled() && n > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t i = 0; i < n; ++i) y[i] = gelu_one(x[i]);
}

void gelu_backward(int64_t n, const float* x, const float* gy, float* gx) {
    const bool par = parallel_enabled() && n > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t i = 0; i < n; ++i) gx[i] += gy[i] * gelu_grad_one(x[i]);
}

void rope_rows(int rows, int dim, const float* x, const std::array<int, 2>* pos, float base, bool inverse, float* y) {
    const int pairs = dim / 4;
    std::vector<float> freqs(static_cast<size_t>(pairs));
    for (int i = 0; i < pairs; ++i) {
        freqs[static_cast<size_t>(i)] =
            std::pow(base, -2.0f * static_cast<float>(i) / static_cast<float>(dim / 2));
    }
    const bool par = parallel_enabled() && static_cast<int64_t>(rows) * dim > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < rows; ++i) {
        int64_t off = static_cast<int64_t>(i) * dim;
        rope_row(dim, x + off, pos[i][0], pos[i][1], freqs.data(), inverse, y + off);
    }
}

void add(int64_t n, const float* a, const float* b, float* out) {
    const bool par = parallel_enabled() && n > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(int64_t n, const float* a, const float* b, float* out) {
    const bool par = parallel_enabled() && n > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(int64_t n, const float* a, const float* b, float* out) {
    const bool par = parallel_enabled() && n > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(int64_t n, const float* a, float s, float* out) {
    const bool par = parallel_enabled() && n > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

void axpy(int64_t n, const float* a, float s, float* out) {
    const bool par = parallel_enabled() && n > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t i = 0; i < n; ++i) out[i] += a[i] * s;
}

void mul_accum(int64_t n, const float* a, const float* b, float* out) {
    const bool par = parallel_enabled() && n > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
    for (int64_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

void colsum_accum(int rows, int cols, const float* g, float* out) {
    // serial over rows: single accumulation target per column
    for (int i = 0; i < rows; ++i) {
        const float* gi = g + static_cast<int64_t>(i) * cols;
        for (int j = 0; j < cols; ++j) out[j] += gi[j];
    }
}

double sum(int64_t n, const float* x) {
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

}  // namespace vton::kernels
