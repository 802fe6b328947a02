#pragma once

#include <string>
#include <vector>

#include "vton/image.hpp"
#include "vton/model.hpp"

namespace vton {

// windowed SSIM, 8x8 uniform windows, stride 1, stabilization constants
// C1 = 0.01^2, C2 = 0.03^2 on the [0,1] range; channels averaged
double ssim(const Image& a, const Image& b);

struct MaskedError {
    double mse = 0.0;
    double psnr = 0.0;  // +inf sentinel when mse == 0
};

// statistics over mask>0 pixels only; mask is single-channel with a/b dims
MaskedError masked_error(const Image& a, const Image& b, const Image& mask);

// attention mass inside region_tokens plus its 1-token Chebyshev dilation.
// attn_row spans the real-token grid (rows x cols, row-major) and sums to 1.
double attn_localization(const std::vector<float>& attn_row, const std::vector<int>& region_tokens, int rows,
                         int cols);

// closed-form value for a uniform attention row over n keys
double uniform_localization_baseline(const std::vector<int>& region_tokens, int rows, int cols);

struct LayerDelta {
    std::string label;
    double delta = 0.0;  // ||theta' - theta|| / ||theta|| over the label's tensors
};

struct LayerUpdateReport {
    std::vector<LayerDelta> deltas;         // sorted descending by delta
    std::vector<std::string> excluded;      // labels with zero-norm reference
};

LayerUpdateReport layer_update_report(const ModelParams& before, const ModelParams& after);

}  // namespace vton
