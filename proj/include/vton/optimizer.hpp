#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vton/model.hpp"

namespace vton {

struct OptimizerConfig {
    std::string preset = "toy";  // "toy" (from-scratch) or "paper" (reference settings)
    double lr = 1e-4;
    double weight_decay = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static OptimizerConfig from_preset(const std::string& preset);
};

// AdamW with decoupled weight decay. Frozen tensors are never touched, so
// they stay bit-identical across steps.
class AdamW {
public:
    explicit AdamW(OptimizerConfig config) : config_(std::move(config)) {}

    // grads[i] pairs with params.tensors[watched[i]]
    void step(ModelParams& params, const std::vector<int>& watched, const std::vector<Array>& grads);

    const OptimizerConfig& config() const { return config_; }

private:
    OptimizerConfig config_;
    int64_t t_ = 0;
    std::vector<std::vector<float>> m_;
    std::vector<std::vector<float>> v_;
};

}  // namespace vton
