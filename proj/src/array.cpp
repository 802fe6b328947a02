#include "vton/array.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "vton/kernels.hpp"

namespace vton {

namespace {

int64_t shape_size(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("Array: extents must be positive");
        n *= d;
    }
    return n;
}

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// rows x cols view of a rank>=1 array, folding leading dims into rows
std::pair<int, int> as_matrix(const Array& x) {
    require(x.rank() >= 1, "op: rank >= 1 required");
    int cols = x.dim(x.rank() - 1);
    int rows = static_cast<int>(x.size() / cols);
    return {rows, cols};
}

}  // namespace

Array::Array(std::vector<int> shape)
    : shape_(std::move(shape)), size_(shape_size(shape_)),
      data_(std::make_shared<std::vector<float>>(static_cast<size_t>(size_), 0.0f)) {}

Array::Array(std::vector<int> shape, std::vector<float> values)
    : shape_(std::move(shape)), size_(shape_size(shape_)),
      data_(std::make_shared<std::vector<float>>(std::move(values))) {
    if (static_cast<int64_t>(data_->size()) != size_)
        throw std::invalid_argument("Array: data length does not match shape");
}

Array Array::zeros(std::vector<int> shape) { return Array(std::move(shape)); }

Array Array::full(std::vector<int> shape, float value) {
    Array a(std::move(shape));
    for (int64_t i = 0; i < a.size(); ++i) a.at(i) = value;
    return a;
}

bool Array::all_finite() const {
    const float* p = data();
    for (int64_t i = 0; i < size_; ++i) {
        if (!std::isfinite(p[i])) return false;
    }
    return true;
}

void Array::check_finite(const char* what) const {
    if (!all_finite()) throw std::runtime_error(std::string(what) + ": non-finite values");
}

Array Array::clone() const {
    Array c(shape_, *data_);
    return c;
}

Array Array::reshaped(std::vector<int> shape) const {
    if (shape_size(shape) != size_) throw std::invalid_argument("reshaped: element count mismatch");
    Array v;
    v.shape_ = std::move(shape);
    v.size_ = size_;
    v.data_ = data_;
    return v;
}

// ---- Tape ----

Array Tape::watch(const Array& x) {
    Array tagged = x;
    tagged.node = record(x.size(), nullptr);
    return tagged;
}

int Tape::record(int64_t out_size, BackwardFn backward) {
    nodes_.push_back(Node{std::move(backward), out_size});
    grads_.emplace_back();
    return static_cast<int>(nodes_.size()) - 1;
}

float* Tape::accum(int node, int64_t size) {
    auto& g = grads_[static_cast<size_t>(node)];
    if (g.empty()) g.assign(static_cast<size_t>(size), 0.0f);
    return g.data();
}

void Tape::backward(const Array& scalar_output) {
    if (scalar_output.size() != 1) throw std::invalid_argument("backward: output must be a scalar");
    for (auto& g : grads_) g.clear();
    // a constant scalar depends on nothing: every adjoint is zero
    if (scalar_output.node < 0) return;
    accum(scalar_output.node, 1)[0] = 1.0f;
    for (int i = scalar_output.node; i >= 0; --i) {
        auto& g = grads_[static_cast<size_t>(i)];
        if (g.empty()) continue;
        auto& fn = nodes_[static_cast<size_t>(i)].backward;
        if (fn) fn(*this, g.data());
    }
}

Array Tape::grad_of(const Array& x) const {
    if (x.node < 0) throw std::invalid_argument("grad: input not on tape");
    Array g(x.shape());
    const auto& buf = grads_[static_cast<size_t>(x.node)];
    if (!buf.empty()) {
        for (int64_t i = 0; i < g.size(); ++i) g.at(i) = buf[static_cast<size_t>(i)];
    }
    return g;
}

std::vector<Array> Tape::grad(const Array& scalar_output, const std::vector<const Array*>& wrt) {
    for (const Array* x : wrt) {
        if (!x || x->node < 0) throw std::invalid_argument("grad: input not on tape");
    }
    backward(scalar_output);
    std::vector<Array> out;
    out.reserve(wrt.size());
    for (const Array* x : wrt) out.push_back(grad_of(*x));
    return out;
}

// ---- ops ----

namespace {

bool live(const Tape* tape, std::initializer_list<const Array*> ins) {
    if (!tape) return false;
    for (const Array* a : ins) {
        if (a->node >= 0) return true;
    }
    return false;
}

}  // namespace

Array add(Tape* tape, const Array& a, const Array& b) {
    require(a.same_shape(b), "add: shape mismatch");
    Array out(a.shape());
    kernels::add(a.size(), a.data(), b.data(), out.data());
    if (live(tape, {&a, &b})) {
        int na = a.node, nb = b.node;
        int64_t n = a.size();
        out.node = tape->record(n, [na, nb, n](Tape& t, const float* g) {
            if (na >= 0) kernels::axpy(n, g, 1.0f, t.accum(na, n));
            if (nb >= 0) kernels::axpy(n, g, 1.0f, t.accum(nb, n));
        });
    }
    return out;
}

Array sub(Tape* tape, const Array& a, const Array& b) {
    require(a.same_shape(b), "sub: shape mismatch");
    Array out(a.shape());
    kernels::sub(a.size(), a.data(), b.data(), out.data());
    if (live(tape, {&a, &b})) {
        int na = a.node, nb = b.node;
        int64_t n = a.size();
        out.node = tape->record(n, [na, nb, n](Tape& t, const float* g) {
            if (na >= 0) kernels::axpy(n, g, 1.0f, t.accum(na, n));
            if (nb >= 0) kernels::axpy(n, g, -1.0f, t.accum(nb, n));
        });
    }
    return out;
}

Array mul(Tape* tape, const Array& a, const Array& b) {
    require(a.same_shape(b), "mul: shape mismatch");
    Array out(a.shape());
    kernels::mul(a.size(), a.data(), b.data(), out.data());
    if (live(tape, {&a, &b})) {
        int na = a.node, nb = b.node;
        int64_t n = a.size();
        Array ca = a, cb = b;
        out.node = tape->record(n, [na, nb, n, ca, cb](Tape& t, const float* g) {
            if (na >= 0) kernels::mul_accum(n, g, cb.data(), t.accum(na, n));
            if (nb >= 0) kernels::mul_accum(n, g, ca.data(), t.accum(nb, n));
        });
    }
    return out;
}

Array scale(Tape* tape, const Array& a, float s) {
    Array out(a.shape());
    kernels::scale(a.size(), a.data(), s, out.data());
    if (live(tape, {&a})) {
        int na = a.node;
        int64_t n = a.size();
        out.node = tape->record(n, [na, n, s](Tape& t, const float* g) {
            kernels::axpy(n, g, s, t.accum(na, n));
        });
    }
    return out;
}

Array add_scalar(Tape* tape, const Array& a, float s) {
    Array out(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out.at(i) = a.at(i) + s;
    if (live(tape, {&a})) {
        int na = a.node;
        int64_t n = a.size();
        out.node = tape->record(n, [na, n](Tape& t, const float* g) {
            kernels::axpy(n, g, 1.0f, t.accum(na, n));
        });
    }
    return out;
}

Array matmul(Tape* tape, const Array& a, const Array& b) {
    require(a.rank() == 2 && b.rank() == 2, "matmul: rank-2 operands required");
    require(a.dim(1) == b.dim(0), "matmul: inner dimensions differ");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Array out({m, n});
    kernels::gemm_nn(m, n, k, a.data(), b.data(), out.data(), false);
    if (live(tape, {&a, &b})) {
        int na = a.node, nb = b.node;
        Array ca = a, cb = b;
        out.node = tape->record(out.size(), [na, nb, m, n, k, ca, cb](Tape& t, const float* g) {
            if (na >= 0) kernels::gemm_nt(m, k, n, g, cb.data(), t.accum(na, ca.size()), true);
            if (nb >= 0) kernels::gemm_tn(k, n, m, ca.data(), g, t.accum(nb, cb.size()), true);
        });
    }
    return out;
}

Array matmul_nt(Tape* tape, const Array& a, const Array& b) {
    require(a.rank() == 2 && b.rank() == 2, "matmul_nt: rank-2 operands required");
    require(a.dim(1) == b.dim(1), "matmul_nt: inner dimensions differ");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(0);
    Array out({m, n});
    kernels::gemm_nt(m, n, k, a.data(), b.data(), out.data(), false);
    if (live(tape, {&a, &b})) {
        int na = a.node, nb = b.node;
        Array ca = a, cb = b;
        out.node = tape->record(out.size(), [na, nb, m, n, k, ca, cb](Tape& t, const float* g) {
            // out = a * b^T; da = g * b, db = g^T * a
            if (na >= 0) kernels::gemm_nn(m, k, n, g, cb.data(), t.accum(na, ca.size()), true);
            if (nb >= 0) kernels::gemm_tn(n, k, m, g, ca.data(), t.accum(nb, cb.size()), true);
        });
    }
    return out;
}

Array add_bias(Tape* tape, const Array& x, const Array& bias) {
    auto [rows, cols] = as_matrix(x);
    require(bias.size() == cols, "add_bias: bias length mismatch");
    Array out(x.shape());
    const float* b = bias.data();
    for (int i = 0; i < rows; ++i) {
        const float* xi = x.data() + static_cast<int64_t>(i) * cols;
        float* oi = out.data() + static_cast<int64_t>(i) * cols;
        for (int j = 0; j < cols; ++j) oi[j] = xi[j] + b[j];
    }
    if (live(tape, {&x, &bias})) {
        int nx = x.node, nb = bias.node;
        int64_t xn = x.size(), bn = bias.size();
        int r = rows, c = cols;
        out.node = tape->record(x.size(), [nx, nb, xn, bn, r, c](Tape& t, const float* g) {
            if (nx >= 0) kernels::axpy(xn, g, 1.0f, t.accum(nx, xn));
            if (nb >= 0) kernels::colsum_accum(r, c, g, t.accum(nb, bn));
        });
    }
    return out;
}

Array rowwise_mul(Tape* tape, const Array& x, const Array& v) {
    auto [rows, cols] = as_matrix(x);
    require(v.size() == cols, "rowwise_mul: vector length mismatch");
    Array out(x.shape());
    const float* vp = v.data();
    for (int i = 0; i < rows; ++i) {
        const float* xi = x.data() + static_cast<int64_t>(i) * cols;
        float* oi = out.data() + static_cast<int64_t>(i) * cols;
        for (int j = 0; j < cols; ++j) oi[j] = xi[j] * vp[j];
    }
    if (live(tape, {&x, &v})) {
        int nx = x.node, nv = v.node;
        Array cx = x, cv = v;
        int r = rows, c = cols;
        out.node = tape->record(x.size(), [nx, nv, cx, cv, r, c](Tape& t, const float* g) {
            if (nx >= 0) {
                float* gx = t.accum(nx, cx.size());
                const float* vp2 = cv.data();
                for (int i = 0; i < r; ++i) {
                    int64_t off = static_cast<int64_t>(i) * c;
                    for (int j = 0; j < c; ++j) gx[off + j] += g[off + j] * vp2[j];
                }
            }
            if (nv >= 0) {
                float* gv = t.accum(nv, cv.size());
                const float* xp = cx.data();
                for (int i = 0; i < r; ++i) {
                    int64_t off = static_cast<int64_t>(i) * c;
                    for (int j = 0; j < c; ++j) gv[j] += g[off + j] * xp[off + j];
                }
            }
        });
    }
    return out;
}

Array layer_norm(Tape* tape, const Array& x, float eps) {
    auto [rows, cols] = as_matrix(x);
    require(cols >= 2, "layer_norm: at least 2 elements per row");
    Array out(x.shape());
    Array rstd({rows});
    kernels::layer_norm_rows(rows, cols, x.data(), eps, out.data(), rstd.data());
    if (live(tape, {&x})) {
        int nx = x.node;
        Array cy = out, crstd = rstd;
        int r = rows, c = cols;
        int64_t n = x.size();
        out.node = tape->record(n, [nx, cy, crstd, r, c, n](Tape& t, const float* g) {
            kernels::layer_norm_rows_backward(r, c, cy.data(), crstd.data(), g, t.accum(nx, n));
        });
    }
    return out;
}

Array gelu(Tape* tape, const Array& x) {
    Array out(x.shape());
    kernels::gelu(x.size(), x.data(), out.data());
    if (live(tape, {&x})) {
        int nx = x.node;
        Array cx = x;
        int64_t n = x.size();
        out.node = tape->record(n, [nx, cx, n](Tape& t, const float* g) {
            kernels::gelu_backward(n, cx.data(), g, t.accum(nx, n));
        });
    }
    return out;
}

Array softmax_scaled(Tape* tape, const Array& logits, float lambda) {
    if (!(lambda >= 0.0f) || !std::isfinite(lambda))
        throw std::domain_error("softmax_scaled: lambda must be finite and non-negative");
    if (!logits.all_finite()) throw std::domain_error("softmax_scaled: non-finite logits");
    auto [rows, cols] = as_matrix(logits);
    Array out(logits.shape());
    kernels::softmax_rows(rows, cols, logits.data(), lambda, out.data());
    if (live(tape, {&logits})) {
        int nx = logits.node;
        Array cy = out;
        int r = rows, c = cols;
        int64_t n = logits.size();
        out.node = tape->record(n, [nx, cy, r, c, n, lambda](Tape& t, const float* g) {
            kernels::softmax_rows_backward(r, c, cy.data(), g, lambda, t.accum(nx, n));
        });
    }
    return out;
}

Array rope_apply(Tape* tape, const Array& tokens, const std::vector<std::array<int, 2>>& positions, float base) {
    require(tokens.rank() == 2, "rope_apply: rank-2 tokens required");
    const int rows = tokens.dim(0), dim = tokens.dim(1);
    if (dim % 4 != 0) throw std::invalid_argument("rope_apply: channel count must be divisible by 4");
    require(static_cast<int>(positions.size()) == rows, "rope_apply: one position pair per token required");
    Array out(tokens.shape());
    kernels::rope_rows(rows, dim, tokens.data(), positions.data(), base, false, out.data());
    if (live(tape, {&tokens})) {
        int nx = tokens.node;
        auto pos = positions;
        int64_t n = tokens.size();
        out.node = tape->record(n, [nx, pos, rows, dim, base, n](Tape& t, const float* g) {
            // rotation is orthogonal: transpose == inverse rotation
            Array gx({rows, dim});
            kernels::rope_rows(rows, dim, g, pos.data(), base, true, gx.data());
            kernels::axpy(n, gx.data(), 1.0f, t.accum(nx, n));
        });
    }
    return out;
}

Array slice_cols(Tape* tape, const Array& x, int start, int len) {
    auto [rows, cols] = as_matrix(x);
    require(start >= 0 && len > 0 && start + len <= cols, "slice_cols: range out of bounds");
    Array out({rows, len});
    for (int i = 0; i < rows; ++i) {
        const float* xi = x.data() + static_cast<int64_t>(i) * cols + start;
        float* oi = out.data() + static_cast<int64_t>(i) * len;
        for (int j = 0; j < len; ++j) oi[j] = xi[j];
    }
    if (live(tape, {&x})) {
        int nx = x.node;
        int64_t n = x.size();
        int r = rows, c = cols;
        out.node = tape->record(out.size(), [nx, n, r, c, start, len](Tape& t, const float* g) {
            float* gx = t.accum(nx, n);
            for (int i = 0; i < r; ++i) {
                float* gi = gx + static_cast<int64_t>(i) * c + start;
                const float* gs = g + static_cast<int64_t>(i) * len;
                for (int j = 0; j < len; ++j) gi[j] += gs[j];
            }
        });
    }
    return out;
}

Array concat_cols(Tape* tape, const std::vector<Array>& parts) {
    require(!parts.empty(), "concat_cols: empty input");
    const int rows = parts[0].dim(0);
    int total = 0;
    bool any_live = false;
    for (const Array& p : parts) {
        require(p.rank() == 2 && p.dim(0) == rows, "concat_cols: row count mismatch");
        total += p.dim(1);
        if (tape && p.node >= 0) any_live = true;
    }
    Array out({rows, total});
    int off = 0;
    for (const Array& p : parts) {
        const int c = p.dim(1);
        for (int i = 0; i < rows; ++i) {
            const float* pi = p.data() + static_cast<int64_t>(i) * c;
            float* oi = out.data() + static_cast<int64_t>(i) * total + off;
            for (int j = 0; j < c; ++j) oi[j] = pi[j];
        }
        off += c;
    }
    if (any_live) {
        std::vector<int> ids;
        std::vector<int> widths;
        std::vector<int64_t> sizes;
        for (const Array& p : parts) {
            ids.push_back(p.node);
            widths.push_back(p.dim(1));
            sizes.push_back(p.size());
        }
        out.node = tape->record(out.size(), [ids, widths, sizes, rows, total](Tape& t, const float* g) {
            int o = 0;
            for (size_t pi = 0; pi < ids.size(); ++pi) {
                const int c = widths[pi];
                if (ids[pi] >= 0) {
                    float* gp = t.accum(ids[pi], sizes[pi]);
                    for (int i = 0; i < rows; ++i) {
                        const float* gi = g + static_cast<int64_t>(i) * total + o;
                        float* gpi = gp + static_cast<int64_t>(i) * c;
                        for (int j = 0; j < c; ++j) gpi[j] += gi[j];
                    }
                }
                o += c;
            }
        });
    }
    return out;
}

Array take_row(Tape* tape, const Array& x, int r) {
    auto [rows, cols] = as_matrix(x);
    require(r >= 0 && r < rows, "take_row: index out of bounds");
    Array out({1, cols});
    const float* xi = x.data() + static_cast<int64_t>(r) * cols;
    for (int j = 0; j < cols; ++j) out.at(j) = xi[j];
    if (live(tape, {&x})) {
        int nx = x.node;
        int64_t n = x.size();
        int c = cols;
        out.node = tape->record(cols, [nx, n, r, c](Tape& t, const float* g) {
            float* gx = t.accum(nx, n) + static_cast<int64_t>(r) * c;
            for (int j = 0; j < c; ++j) gx[j] += g[j];
        });
    }
    return out;
}

Array concat_channels(Tape* tape, const std::vector<Array>& grids) {
    require(!grids.empty(), "concat_channels: empty input");
    const int h = grids[0].dim(0), w = grids[0].dim(1);
    int total = 0;
    bool any_live = false;
    for (const Array& g : grids) {
        require(g.rank() == 3 && g.dim(0) == h && g.dim(1) == w, "concat_channels: spatial dims mismatch");
        total += g.dim(2);
        if (tape && g.node >= 0) any_live = true;
    }
    Array out({h, w, total});
    const int cells = h * w;
    int off = 0;
    for (const Array& g : grids) {
        const int c = g.dim(2);
        for (int i = 0; i < cells; ++i) {
            const float* gi = g.data() + static_cast<int64_t>(i) * c;
            float* oi = out.data() + static_cast<int64_t>(i) * total + off;
            for (int j = 0; j < c; ++j) oi[j] = gi[j];
        }
        off += c;
    }
    if (any_live) {
        std::vector<int> ids;
        std::vector<int> chans;
        std::vector<int64_t> sizes;
        for (const Array& g : grids) {
            ids.push_back(g.node);
            chans.push_back(g.dim(2));
            sizes.push_back(g.size());
        }
        out.node = tape->record(out.size(), [ids, chans, sizes, cells, total](Tape& t, const float* g) {
            int o = 0;
            for (size_t pi = 0; pi < ids.size(); ++pi) {
                const int c = chans[pi];
                if (ids[pi] >= 0) {
                    float* gp = t.accum(ids[pi], sizes[pi]);
                    for (int i = 0; i < cells; ++i) {
                        const float* gi = g + static_cast<int64_t>(i) * total + o;
                        float* gpi = gp + static_cast<int64_t>(i) * c;
                        for (int j = 0; j < c; ++j) gpi[j] += gi[j];
                    }
                }
                o += c;
            }
        });
    }
    return out;
}

namespace {

// index maps for the patchify permutation
inline int64_t grid_index(int r, int cidx, int ch, int w, int c) {
    return (static_cast<int64_t>(r) * w + cidx) * c + ch;
}

}  // namespace

Array patchify(Tape* tape, const Array& grid, int p) {
    require(grid.rank() == 3, "patchify: rank-3 grid required");
    const int h = grid.dim(0), w = grid.dim(1), c = grid.dim(2);
    require(p > 0 && h % p == 0 && w % p == 0, "patchify: dims not divisible by patch size");
    const int gr = h / p, gc = w / p;
    const int fdim = p * p * c;
    Array out({gr * gc, fdim});
    for (int r = 0; r < gr; ++r) {
        for (int q = 0; q < gc; ++q) {
            float* tok = out.data() + static_cast<int64_t>(r * gc + q) * fdim;
            int o = 0;
            for (int dy = 0; dy < p; ++dy) {
                for (int dx = 0; dx < p; ++dx) {
                    const float* src = grid.data() + grid_index(r * p + dy, q * p + dx, 0, w, c);
                    for (int ch = 0; ch < c; ++ch) tok[o++] = src[ch];
                }
            }
        }
    }
    if (live(tape, {&grid})) {
        int ng = grid.node;
        int64_t n = grid.size();
        out.node = tape->record(out.size(), [ng, n, h, w, c, p, gr, gc, fdim](Tape& t, const float* g) {
            float* gg = t.accum(ng, n);
            for (int r = 0; r < gr; ++r) {
                for (int q = 0; q < gc; ++q) {
                    const float* tok = g + static_cast<int64_t>(r * gc + q) * fdim;
                    int o = 0;
                    for (int dy = 0; dy < p; ++dy) {
                        for (int dx = 0; dx < p; ++dx) {
                            float* dst = gg + grid_index(r * p + dy, q * p + dx, 0, w, c);
                            for (int ch = 0; ch < c; ++ch) dst[ch] += tok[o++];
                        }
                    }
                }
            }
        });
    }
    return out;
}

Array unpatchify(Tape* tape, const Array& tokens, int h, int w, int c, int p) {
    require(tokens.rank() == 2, "unpatchify: rank-2 tokens required");
    require(p > 0 && h % p == 0 && w % p == 0, "unpatchify: dims not divisible by patch size");
    const int gr = h / p, gc = w / p;
    const int fdim = p * p * c;
    require(tokens.dim(0) == gr * gc && tokens.dim(1) == fdim, "unpatchify: token shape mismatch");
    Array out({h, w, c});
    for (int r = 0; r < gr; ++r) {
        for (int q = 0; q < gc; ++q) {
            const float* tok = tokens.data() + static_cast<int64_t>(r * gc + q) * fdim;
            int o = 0;
            for (int dy = 0; dy < p; ++dy) {
                for (int dx = 0; dx < p; ++dx) {
                    float* dst = out.data() + grid_index(r * p + dy, q * p + dx, 0, w, c);
                    for (int ch = 0; ch < c; ++ch) dst[ch] = tok[o++];
                }
            }
        }
    }
    if (live(tape, {&tokens})) {
        int nt = tokens.node;
        int64_t n = tokens.size();
        out.node = tape->record(out.size(), [nt, n, h, w, c, p, gr, gc, fdim](Tape& t, const float* g) {
            float* gt = t.accum(nt, n);
            for (int r = 0; r < gr; ++r) {
                for (int q = 0; q < gc; ++q) {
                    float* tok = gt + static_cast<int64_t>(r * gc + q) * fdim;
                    int o = 0;
                    for (int dy = 0; dy < p; ++dy) {
                        for (int dx = 0; dx < p; ++dx) {
                            const float* src = g + grid_index(r * p + dy, q * p + dx, 0, w, c);
                            for (int ch = 0; ch < c; ++ch) tok[o++] += src[ch];
                        }
                    }
                }
            }
        });
    }
    return out;
}

Array sum_all(Tape* tape, const Array& x) {
    Array out({1});
    out.at(0) = static_cast<float>(kernels::sum(x.size(), x.data()));
    if (live(tape, {&x})) {
        int nx = x.node;
        int64_t n = x.size();
        out.node = tape->record(1, [nx, n](Tape& t, const float* g) {
            float* gx = t.accum(nx, n);
            const float gv = g[0];
            for (int64_t i = 0; i < n; ++i) gx[i] += gv;
        });
    }
    return out;
}

Array mean_all(Tape* tape, const Array& x) {
    return scale(tape, sum_all(tape, x), 1.0f / static_cast<float>(x.size()));
}

Array reshape(Tape* tape, const Array& x, std::vector<int> shape) {
    Array out = x.reshaped(std::move(shape)).clone();
    if (live(tape, {&x})) {
        int nx = x.node;
        int64_t n = x.size();
        out.node = tape->record(n, [nx, n](Tape& t, const float* g) {
            kernels::axpy(n, g, 1.0f, t.accum(nx, n));
        });
    }
    return out;
}

}  // namespace vton
