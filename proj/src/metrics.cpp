#include "vton/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_set>

namespace vton {

double ssim(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("ssim: dimension mismatch");
    if (a.h <= 0 || a.w <= 0) throw std::invalid_argument("ssim: empty image");
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const int win_h = std::min(8, a.h);
    const int win_w = std::min(8, a.w);
    const double n = static_cast<double>(win_h) * win_w;

    double total = 0.0;
    int64_t windows = 0;
    for (int ch = 0; ch < a.c; ++ch) {
        for (int y = 0; y + win_h <= a.h; ++y) {
            for (int x = 0; x + win_w <= a.w; ++x) {
                double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
                for (int dy = 0; dy < win_h; ++dy) {
                    for (int dx = 0; dx < win_w; ++dx) {
                        const double va = a.at(y + dy, x + dx, ch);
                        const double vb = b.at(y + dy, x + dx, ch);
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                    }
                }
                const double mu_a = sa / n;
                const double mu_b = sb / n;
                const double var_a = saa / n - mu_a * mu_a;
                const double var_b = sbb / n - mu_b * mu_b;
                const double cov = sab / n - mu_a * mu_b;
                const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
                const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
                total += num / den;
                ++windows;
            }
        }
    }
    return total / static_cast<double>(windows);
}

MaskedError masked_error(const Image& a, const Image& b, const Image& mask) {
    if (!a.same_dims(b)) throw std::invalid_argument("masked_error: image dimension mismatch");
    if (mask.h != a.h || mask.w != a.w || mask.c != 1)
        throw std::invalid_argument("masked_error: mask dimension mismatch");
    double acc = 0.0;
    int64_t count = 0;
    for (int y = 0; y < a.h; ++y) {
        for (int x = 0; x < a.w; ++x) {
            if (mask.at(y, x, 0) <= 0.0f) continue;
            for (int ch = 0; ch < a.c; ++ch) {
                const double d = static_cast<double>(a.at(y, x, ch)) - b.at(y, x, ch);
                acc += d * d;
                ++count;
            }
        }
    }
    if (count == 0) throw std::invalid_argument("masked_error: empty mask region");
    MaskedError out;
    out.mse = acc / static_cast<double>(count);
    out.psnr = out.mse > 0.0 ? 10.0 * std::log10(1.0 / out.mse) : std::numeric_limits<double>::infinity();
    return out;
}

namespace {

std::unordered_set<int> dilated_region(const std::vector<int>& region_tokens, int rows, int cols) {
    std::unordered_set<int> out;
    for (int id : region_tokens) {
        if (id < 0 || id >= rows * cols) throw std::invalid_argument("attn_localization: region token out of range");
        const int r = id / cols, c = id % cols;
        for (int dr = -1; dr <= 1; ++dr) {
            for (int dc = -1; dc <= 1; ++dc) {
                const int rr = r + dr, cc = c + dc;
                if (rr >= 0 && rr < rows && cc >= 0 && cc < cols) out.insert(rr * cols + cc);
            }
        }
    }
    return out;
}

}  // namespace

double attn_localization(const std::vector<float>& attn_row, const std::vector<int>& region_tokens, int rows,
                         int cols) {
    if (static_cast<int>(attn_row.size()) != rows * cols)
        throw std::invalid_argument("attn_localization: row length must match the token grid");
    if (region_tokens.empty()) throw std::invalid_argument("attn_localization: empty oracle region");
    const auto region = dilated_region(region_tokens, rows, cols);
    double mass = 0.0;
    for (int id : region) mass += attn_row[static_cast<size_t>(id)];
    return mass;
}

double uniform_localization_baseline(const std::vector<int>& region_tokens, int rows, int cols) {
    const auto region = dilated_region(region_tokens, rows, cols);
    return static_cast<double>(region.size()) / static_cast<double>(rows * cols);
}

LayerUpdateReport layer_update_report(const ModelParams& before, const ModelParams& after) {
    if (before.tensors.size() != after.tensors.size())
        throw std::invalid_argument("layer_update_report: tensor sets differ");
    std::map<std::string, std::pair<double, double>> acc;  // label -> (||theta||^2, ||theta'-theta||^2)
    for (size_t i = 0; i < before.tensors.size(); ++i) {
        const TensorInfo& tb = before.tensors[i];
        const TensorInfo& ta = after.tensors[i];
        if (tb.name != ta.name || tb.value.size() != ta.value.size())
            throw std::invalid_argument("layer_update_report: tensor sets differ at " + tb.name);
        auto& slot = acc[tb.label];
        for (int64_t j = 0; j < tb.value.size(); ++j) {
            const double v = tb.value.at(j);
            const double d = static_cast<double>(ta.value.at(j)) - v;
            slot.first += v * v;
            slot.second += d * d;
        }
    }
    LayerUpdateReport report;
    for (const auto& [label, sums] : acc) {
        if (sums.first <= 0.0) {
            report.excluded.push_back(label);
            continue;
        }
        report.deltas.push_back(LayerDelta{label, std::sqrt(sums.second) / std::sqrt(sums.first)});
    }
    std::sort(report.deltas.begin(), report.deltas.end(),
              [](const LayerDelta& a, const LayerDelta& b) { return a.delta > b.delta; });
    return report;
}

}  // namespace vton
