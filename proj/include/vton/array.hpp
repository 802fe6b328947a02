#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace vton {

class Tape;

// Dense row-major float32 array. Data is shared on copy; module operations
// treat arrays as immutable values and always allocate fresh outputs.
class Array {
public:
    Array() = default;
    explicit Array(std::vector<int> shape);
    Array(std::vector<int> shape, std::vector<float> values);

    static Array zeros(std::vector<int> shape);
    static Array full(std::vector<int> shape, float value);

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int64_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    float* data() { return data_->data(); }
    const float* data() const { return data_->data(); }
    float& at(int64_t i) { return (*data_)[static_cast<size_t>(i)]; }
    float at(int64_t i) const { return (*data_)[static_cast<size_t>(i)]; }

    bool same_shape(const Array& o) const { return shape_ == o.shape_; }
    bool all_finite() const;
    // throws std::runtime_error naming `what` if any element is NaN/Inf
    void check_finite(const char* what) const;

    // deep copy, detached from any tape
    Array clone() const;
    // same buffer under a new shape (element count must match); detached
    Array reshaped(std::vector<int> shape) const;

    // id of the tape node that produced this array, -1 for constants
    int node = -1;

private:
    std::vector<int> shape_;
    int64_t size_ = 0;
    std::shared_ptr<std::vector<float>> data_;
};

// Reverse-mode tape. Records one forward execution; grad() propagates a
// scalar's adjoint back to any recorded input. A tape instance is confined
// to a single logical thread.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const float*)>;

    // registers x as a differentiable leaf; returns x tagged with a node id
    Array watch(const Array& x);

    // records an op output; backward receives the adjoint of the output
    int record(int64_t out_size, BackwardFn backward);

    // accumulation buffer for a node's adjoint (allocated zeroed on demand)
    float* accum(int node, int64_t size);

    // propagates from a scalar output; resets previous adjoints first
    void backward(const Array& scalar_output);

    // adjoint of x after backward(); zeros if x never received gradient
    Array grad_of(const Array& x) const;

    // convenience: backward + gather, per the module contract
    std::vector<Array> grad(const Array& scalar_output, const std::vector<const Array*>& wrt);

    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        BackwardFn backward;
        int64_t size = 0;
    };
    std::vector<Node> nodes_;
    std::vector<std::vector<float>> grads_;
};

// ---- differentiable primitives ----
// Every op computes eagerly; when `tape` is non-null and at least one input
// is recorded, the output is recorded with its backward rule. Constant
// inputs (node == -1) simply receive no gradient.

Array add(Tape* tape, const Array& a, const Array& b);
Array sub(Tape* tape, const Array& a, const Array& b);
Array mul(Tape* tape, const Array& a, const Array& b);
Array scale(Tape* tape, const Array& a, float s);
Array add_scalar(Tape* tape, const Array& a, float s);

// a[M,K] * b[K,N]
Array matmul(Tape* tape, const Array& a, const Array& b);
// a[M,K] * b[N,K]^T
Array matmul_nt(Tape* tape, const Array& a, const Array& b);

// x[R,C] + bias[C] per row (bias may be shaped [C] or [1,C])
Array add_bias(Tape* tape, const Array& x, const Array& bias);
// x[R,C] .* v[C] per row
Array rowwise_mul(Tape* tape, const Array& x, const Array& v);

// per-row normalization over the last dimension, no learned affine
Array layer_norm(Tape* tape, const Array& x, float eps = 1e-5f);

Array gelu(Tape* tape, const Array& x);

// softmax of lambda-scaled logits per row; lambda >= 0 and finite
Array softmax_scaled(Tape* tape, const Array& logits, float lambda);

// 2D rotary embedding; positions are (row, col) per token, dim % 4 == 0
Array rope_apply(Tape* tape, const Array& tokens, const std::vector<std::array<int, 2>>& positions,
                 float base = 10000.0f);

Array slice_cols(Tape* tape, const Array& x, int start, int len);
Array concat_cols(Tape* tape, const std::vector<Array>& parts);
// single row r of x[R,C] as [1,C]
Array take_row(Tape* tape, const Array& x, int r);

// [h,w,c] grids concatenated along the channel axis
Array concat_channels(Tape* tape, const std::vector<Array>& grids);
// [h,w,c] -> [(h/p)*(w/p), p*p*c], patches row-major, feature layout (dy,dx,ch)
Array patchify(Tape* tape, const Array& grid, int p);
// inverse of patchify
Array unpatchify(Tape* tape, const Array& tokens, int h, int w, int c, int p);

// total sum as a [1] scalar
Array sum_all(Tape* tape, const Array& x);
Array mean_all(Tape* tape, const Array& x);

Array reshape(Tape* tape, const Array& x, std::vector<int> shape);

}  // namespace vton
