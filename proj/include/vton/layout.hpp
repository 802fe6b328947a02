#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vton/array.hpp"
#include "vton/image.hpp"

namespace vton {

// [garment | person] composite, garment on the left of the split column.
struct Canvas {
    Image img;       // h x 2w x 3
    int split = 0;   // garment width w

    int height() const { return img.h; }
    int width() const { return img.w; }
};

// Binary h x 2w mask over a canvas; 1 marks the inpainting region.
struct MaskCanvas {
    int h = 0;
    int w = 0;  // full canvas width (2W)
    std::vector<float> m;

    MaskCanvas() = default;
    MaskCanvas(int h_, int w_, float fill = 0.0f) : h(h_), w(w_), m(static_cast<size_t>(h_) * w_, fill) {}
    float& at(int y, int x) { return m[static_cast<size_t>(y) * w + x]; }
    float at(int y, int x) const { return m[static_cast<size_t>(y) * w + x]; }
    double sum() const;
};

// Latent-resolution grid: [h/f, 2w/f, ch] array produced by the codec.
struct LatentGrid {
    int h = 0;
    int w = 0;
    int c = 0;
    Array data;  // shape {h, w, c}

    LatentGrid() = default;
    LatentGrid(int h_, int w_, int c_) : h(h_), w(w_), c(c_), data({h_, w_, c_}) {}
    LatentGrid(int h_, int w_, int c_, Array a) : h(h_), w(w_), c(c_), data(std::move(a)) {}
};

enum class TaskMode { on, off };
enum class GarmentCategory { upper, lower, full };

struct TaskToken {
    TaskMode mode = TaskMode::on;
    GarmentCategory category = GarmentCategory::upper;
};

TaskToken make_task_token(const std::string& mode, const std::string& category);
std::string to_string(TaskMode mode);
std::string to_string(GarmentCategory category);
std::optional<GarmentCategory> parse_category(const std::string& s);

// Tokenization bookkeeping for one canvas layout. Real tokens are the
// patches of the channel-concatenated latent grid in row-major order;
// the sequence is padded with invalid zero tokens up to n_max.
struct TokenSequence {
    int grid_h = 0, grid_w = 0;       // latent dims
    int rows = 0, cols = 0;           // token grid dims (grid/p)
    int patch = 0;
    int n_max = 0;
    int n_real = 0;
    int n_mask = 0;
    int n_garment = 0;
    int z_channels = 0;               // channels of z grids
    int mask_channels = 0;            // channels of the downsampled mask
    std::vector<std::array<int, 2>> positions;  // (row, col) per real token
    std::vector<uint8_t> valid;                 // length n_max
    std::vector<uint8_t> token_masked;          // per real token
    std::vector<uint8_t> token_garment;         // per real token (condition side)
    Array z_t, z_c, m_c;                        // grids {gh, gw, ch}

    int feature_dim() const { return patch * patch * (2 * z_channels + mask_channels); }
    // materialized [n_max, feature_dim] matrix with zero padding rows
    Array features_padded() const;
};

// X = [X_g | X_p]
Canvas concat_pair(const Image& garment, const Image& person);
// inverse crops of the two halves
Image crop_garment_half(const Canvas& canvas);
Image crop_person_half(const Canvas& canvas);

// try-on: [0 | M_on]; try-off: [1 | 0]. person_mask required for try-on.
MaskCanvas build_mask(const TaskToken& task, const Image* person_garment_mask);
// try-off variant with an explicit garment-side mask: [left | 0]
MaskCanvas build_mask_off(const Image& garment_side_mask);

// X .* (1 - M)
Canvas apply_mask(const Canvas& canvas, const MaskCanvas& mask);

// frozen codec: pixel-unshuffle with factor f. Channel layout of the latent
// is (dy*f + dx)*C + ch so decode(encode(x)) is the exact inverse.
LatentGrid encode_latent(const Canvas& canvas, int f);
Canvas decode_latent(const LatentGrid& latent, int f, int split);

// pixel-unshuffle of the mask itself: f*f channels per latent cell
LatentGrid downsample_mask(const MaskCanvas& mask, int f);

// z .* (1 - M_c), M_c broadcast over the color channels
Array mask_latent(Tape* tape, const Array& z, const LatentGrid& m_c, int color_channels);

TokenSequence tokenize(const LatentGrid& z_t, const LatentGrid& z_c, const LatentGrid& m_c, int patch, int n_max);

// reconstructs the channel-concatenated grid from padded token features
Array detokenize(const Array& features_padded, const TokenSequence& seq);

}  // namespace vton
