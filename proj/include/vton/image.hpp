#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vton {

// HxWxC float image, values in [0,1], row-major, C is 1 (gray) or 3 (RGB).
struct Image {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<float> px;

    Image() = default;
    Image(int h_, int w_, int c_, float fill = 0.0f)
        : h(h_), w(w_), c(c_), px(static_cast<size_t>(h_) * w_ * c_, fill) {}

    float& at(int y, int x, int ch) { return px[(static_cast<size_t>(y) * w + x) * c + ch]; }
    float at(int y, int x, int ch) const { return px[(static_cast<size_t>(y) * w + x) * c + ch]; }
    bool same_dims(const Image& o) const { return h == o.h && w == o.w && c == o.c; }
};

// Snaps every value onto the 8-bit grid k/255 so PNG round-trips are exact.
void quantize_image(Image& img);

// 8-bit PNG I/O; gray or RGB decided by Image::c. Values map linearly:
// byte = round(255 * clamp(v, 0, 1)), v = byte / 255.
void save_png(const std::string& path, const Image& img);
Image load_png(const std::string& path);

}  // namespace vton
