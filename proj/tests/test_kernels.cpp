#include <doctest.h>

#include <cstring>
#include <vector>

#include "vton/kernels.hpp"
#include "vton/rng.hpp"

using namespace vton;

namespace {

std::vector<float> random_vec(size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(n);
    for (float& x : v) x = rng.normal();
    return v;
}

struct ParallelGuard {
    ~ParallelGuard() { kernels::set_parallel(true); }
};

}  // namespace

TEST_CASE("gemm_nn matches a double-accumulated oracle") {
    const int m = 17, k = 23, n = 13;
    auto a = random_vec(static_cast<size_t>(m) * k, 11);
    auto b = random_vec(static_cast<size_t>(k) * n, 12);
    std::vector<float> c(static_cast<size_t>(m) * n);
    kernels::gemm_nn(m, n, k, a.data(), b.data(), c.data(), false);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int l = 0; l < k; ++l) acc += static_cast<double>(a[i * k + l]) * b[l * n + j];
            CHECK(c[i * n + j] == doctest::Approx(acc).epsilon(1e-4));
        }
    }
}

TEST_CASE("gemm_nt and gemm_tn match gemm_nn on transposed operands") {
    const int m = 9, k = 15, n = 7;
    auto a = random_vec(static_cast<size_t>(m) * k, 21);
    auto bt = random_vec(static_cast<size_t>(n) * k, 22);  // B^T stored [n x k]
    // rebuild B [k x n]
    std::vector<float> b(static_cast<size_t>(k) * n);
    for (int l = 0; l < k; ++l)
        for (int j = 0; j < n; ++j) b[l * n + j] = bt[j * k + l];

    std::vector<float> c_nn(static_cast<size_t>(m) * n), c_nt(c_nn.size());
    kernels::gemm_nn(m, n, k, a.data(), b.data(), c_nn.data(), false);
    kernels::gemm_nt(m, n, k, a.data(), bt.data(), c_nt.data(), false);
    for (size_t i = 0; i < c_nn.size(); ++i) CHECK(c_nt[i] == doctest::Approx(c_nn[i]).epsilon(1e-5));

    // C = A^T * B with A stored [k x m]
    std::vector<float> at(static_cast<size_t>(k) * m);
    for (int i = 0; i < m; ++i)
        for (int l = 0; l < k; ++l) at[l * m + i] = a[i * k + l];
    std::vector<float> c_tn(c_nn.size());
    kernels::gemm_tn(m, n, k, at.data(), b.data(), c_tn.data(), false);
    for (size_t i = 0; i < c_nn.size(); ++i) CHECK(c_tn[i] == doctest::Approx(c_nn[i]).epsilon(1e-5));
}

TEST_CASE("openmp kernels are bitwise identical to the serial reference") {
    ParallelGuard guard;
    const int m = 64, k = 96, n = 80;  // above the parallel cutoff
    auto a = random_vec(static_cast<size_t>(m) * k, 31);
    auto b = random_vec(static_cast<size_t>(k) * n, 32);

    std::vector<float> c_par(static_cast<size_t>(m) * n), c_ser(c_par.size());
    kernels::set_parallel(true);
    kernels::gemm_nn(m, n, k, a.data(), b.data(), c_par.data(), false);
    kernels::set_parallel(false);
    kernels::gemm_nn(m, n, k, a.data(), b.data(), c_ser.data(), false);
    CHECK(std::memcmp(c_par.data(), c_ser.data(), c_par.size() * sizeof(float)) == 0);

    std::vector<float> s_par(static_cast<size_t>(m) * k), s_ser(s_par.size());
    kernels::set_parallel(true);
    kernels::softmax_rows(m, k, a.data(), 0.177f, s_par.data());
    kernels::set_parallel(false);
    kernels::softmax_rows(m, k, a.data(), 0.177f, s_ser.data());
    CHECK(std::memcmp(s_par.data(), s_ser.data(), s_par.size() * sizeof(float)) == 0);

    std::vector<float> l_par(static_cast<size_t>(m) * k), l_ser(l_par.size());
    std::vector<float> r_par(static_cast<size_t>(m)), r_ser(r_par.size());
    kernels::set_parallel(true);
    kernels::layer_norm_rows(m, k, a.data(), 1e-5f, l_par.data(), r_par.data());
    kernels::set_parallel(false);
    kernels::layer_norm_rows(m, k, a.data(), 1e-5f, l_ser.data(), r_ser.data());
    CHECK(std::memcmp(l_par.data(), l_ser.data(), l_par.size() * sizeof(float)) == 0);
    CHECK(std::memcmp(r_par.data(), r_ser.data(), r_par.size() * sizeof(float)) == 0);

    std::vector<float> g_par(a.size()), g_ser(a.size());
    kernels::set_parallel(true);
    kernels::gelu(static_cast<int64_t>(a.size()), a.data(), g_par.data());
    kernels::set_parallel(false);
    kernels::gelu(static_cast<int64_t>(a.size()), a.data(), g_ser.data());
    CHECK(std::memcmp(g_par.data(), g_ser.data(), g_par.size() * sizeof(float)) == 0);

    std::vector<std::array<int, 2>> pos(static_cast<size_t>(m) * 2);
    Rng prng(33);
    for (auto& pr : pos) pr = {prng.uniform_int(0, 31), prng.uniform_int(0, 31)};
    const int rows = m * 2, dim = 48;
    auto x = random_vec(static_cast<size_t>(rows) * dim, 34);
    std::vector<float> ro_par(x.size()), ro_ser(x.size());
    kernels::set_parallel(true);
    kernels::rope_rows(rows, dim, x.data(), pos.data(), 10000.0f, false, ro_par.data());
    kernels::set_parallel(false);
    kernels::rope_rows(rows, dim, x.data(), pos.data(), 10000.0f, false, ro_ser.data());
    CHECK(std::memcmp(ro_par.data(), ro_ser.data(), ro_par.size() * sizeof(float)) == 0);
}

TEST_CASE("softmax rows sum to one") {
    const int rows = 40, cols = 33;
    auto x = random_vec(static_cast<size_t>(rows) * cols, 41);
    std::vector<float> y(x.size());
    kernels::softmax_rows(rows, cols, x.data(), 0.7f, y.data());
    for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols; ++j) s += y[i * cols + j];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
}
