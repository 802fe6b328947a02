#include "vton/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace vton {

OptimizerConfig OptimizerConfig::from_preset(const std::string& preset) {
    OptimizerConfig c;
    c.preset = preset;
    if (preset == "toy") {
        c.lr = 1e-4;
        c.weight_decay = 0.001;
    } else if (preset == "paper") {
        // reference configuration: lr 1e-5, weight decay 0.001, batch 128
        c.lr = 1e-5;
        c.weight_decay = 0.001;
    } else {
        throw std::invalid_argument("optimizer preset must be 'toy' or 'paper'");
    }
    return c;
}

void AdamW::step(ModelParams& params, const std::vector<int>& watched, const std::vector<Array>& grads) {
    if (watched.size() != grads.size()) throw std::invalid_argument("optimizer: grad count mismatch");
    if (m_.empty()) {
        m_.resize(params.tensors.size());
        v_.resize(params.tensors.size());
    }
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (size_t i = 0; i < watched.size(); ++i) {
        TensorInfo& tensor = params.tensors[static_cast<size_t>(watched[i])];
        if (!tensor.trainable) throw std::invalid_argument("optimizer: gradient for a frozen tensor");
        const Array& g = grads[i];
        if (g.size() != tensor.value.size()) throw std::invalid_argument("optimizer: gradient shape mismatch");
        auto& m = m_[static_cast<size_t>(watched[i])];
        auto& v = v_[static_cast<size_t>(watched[i])];
        if (m.empty()) {
            m.assign(static_cast<size_t>(g.size()), 0.0f);
            v.assign(static_cast<size_t>(g.size()), 0.0f);
        }
        float* p = tensor.value.data();
        for (int64_t j = 0; j < g.size(); ++j) {
            const double gj = g.at(j);
            m[static_cast<size_t>(j)] = static_cast<float>(b1 * m[static_cast<size_t>(j)] + (1.0 - b1) * gj);
            v[static_cast<size_t>(j)] = static_cast<float>(b2 * v[static_cast<size_t>(j)] + (1.0 - b2) * gj * gj);
            const double mhat = m[static_cast<size_t>(j)] / bc1;
            const double vhat = v[static_cast<size_t>(j)] / bc2;
            const double update = mhat / (std::sqrt(vhat) + config_.eps) + config_.weight_decay * p[j];
            p[j] = static_cast<float>(p[j] - config_.lr * update);
        }
    }
}

}  // namespace vton
