#include "vton/layout.hpp"

#include <cmath>
#include <stdexcept>

namespace vton {

double MaskCanvas::sum() const {
    double s = 0.0;
    for (float v : m) s += v;
    return s;
}

TaskToken make_task_token(const std::string& mode, const std::string& category) {
    TaskToken t;
    if (mode == "on") {
        t.mode = TaskMode::on;
    } else if (mode == "off") {
        t.mode = TaskMode::off;
    } else {
        throw std::invalid_argument("make_task_token: unknown mode '" + mode + "'");
    }
    auto cat = parse_category(category);
    if (!cat) throw std::invalid_argument("make_task_token: unknown category '" + category + "'");
    t.category = *cat;
    return t;
}

std::string to_string(TaskMode mode) { return mode == TaskMode::on ? "on" : "off"; }

std::string to_string(GarmentCategory category) {
    switch (category) {
        case GarmentCategory::upper: return "upper";
        case GarmentCategory::lower: return "lower";
        default: return "full";
    }
}

std::optional<GarmentCategory> parse_category(const std::string& s) {
    if (s == "upper") return GarmentCategory::upper;
    if (s == "lower") return GarmentCategory::lower;
    if (s == "full") return GarmentCategory::full;
    return std::nullopt;
}

Canvas concat_pair(const Image& garment, const Image& person) {
    if (!garment.same_dims(person)) throw std::invalid_argument("concat_pair: image dims mismatch");
    if (garment.c != 3) throw std::invalid_argument("concat_pair: RGB images required");
    Canvas canvas;
    canvas.split = garment.w;
    canvas.img = Image(garment.h, garment.w * 2, 3);
    for (int y = 0; y < garment.h; ++y) {
        for (int x = 0; x < garment.w; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                canvas.img.at(y, x, ch) = garment.at(y, x, ch);
                canvas.img.at(y, x + garment.w, ch) = person.at(y, x, ch);
            }
        }
    }
    return canvas;
}

Image crop_garment_half(const Canvas& canvas) {
    Image out(canvas.img.h, canvas.split, 3);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = canvas.img.at(y, x, ch);
    return out;
}

Image crop_person_half(const Canvas& canvas) {
    Image out(canvas.img.h, canvas.img.w - canvas.split, 3);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = canvas.img.at(y, x + canvas.split, ch);
    return out;
}

MaskCanvas build_mask(const TaskToken& task, const Image* person_garment_mask) {
    if (task.mode == TaskMode::on) {
        if (!person_garment_mask) throw std::invalid_argument("build_mask: try-on requires the person garment mask");
        const Image& m = *person_garment_mask;
        if (m.c != 1) throw std::invalid_argument("build_mask: mask must be single-channel");
        MaskCanvas out(m.h, m.w * 2, 0.0f);
        for (int y = 0; y < m.h; ++y)
            for (int x = 0; x < m.w; ++x) out.at(y, x + m.w) = m.at(y, x, 0) > 0.5f ? 1.0f : 0.0f;
        return out;
    }
    if (!person_garment_mask) throw std::invalid_argument("build_mask: try-off requires dims from the mask image");
    const Image& m = *person_garment_mask;
    MaskCanvas out(m.h, m.w * 2, 0.0f);
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x) out.at(y, x) = 1.0f;
    return out;
}

MaskCanvas build_mask_off(const Image& garment_side_mask) {
    if (garment_side_mask.c != 1) throw std::invalid_argument("build_mask_off: mask must be single-channel");
    MaskCanvas out(garment_side_mask.h, garment_side_mask.w * 2, 0.0f);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < garment_side_mask.w; ++x)
            out.at(y, x) = garment_side_mask.at(y, x, 0) > 0.5f ? 1.0f : 0.0f;
    return out;
}

Canvas apply_mask(const Canvas& canvas, const MaskCanvas& mask) {
    if (canvas.img.h != mask.h || canvas.img.w != mask.w)
        throw std::invalid_argument("apply_mask: dimension mismatch");
    Canvas out = canvas;
    for (int y = 0; y < mask.h; ++y) {
        for (int x = 0; x < mask.w; ++x) {
            if (mask.at(y, x) != 0.0f) {
                for (int ch = 0; ch < 3; ++ch) out.img.at(y, x, ch) = 0.0f;
            }
        }
    }
    return out;
}

LatentGrid encode_latent(const Canvas& canvas, int f) {
    const Image& img = canvas.img;
    if (f <= 0 || img.h % f != 0 || img.w % f != 0)
        throw std::invalid_argument("encode_latent: dims not divisible by codec factor");
    const int lh = img.h / f, lw = img.w / f, lc = img.c * f * f;
    LatentGrid z(lh, lw, lc);
    for (int y = 0; y < lh; ++y) {
        for (int x = 0; x < lw; ++x) {
            float* cell = z.data.data() + (static_cast<int64_t>(y) * lw + x) * lc;
            for (int dy = 0; dy < f; ++dy) {
                for (int dx = 0; dx < f; ++dx) {
                    for (int ch = 0; ch < img.c; ++ch) {
                        cell[(dy * f + dx) * img.c + ch] = img.at(y * f + dy, x * f + dx, ch);
                    }
                }
            }
        }
    }
    return z;
}

Canvas decode_latent(const LatentGrid& latent, int f, int split) {
    if (f <= 0 || latent.c % (f * f) != 0) throw std::invalid_argument("decode_latent: channel count not divisible");
    const int c = latent.c / (f * f);
    Canvas out;
    out.split = split;
    out.img = Image(latent.h * f, latent.w * f, c);
    for (int y = 0; y < latent.h; ++y) {
        for (int x = 0; x < latent.w; ++x) {
            const float* cell = latent.data.data() + (static_cast<int64_t>(y) * latent.w + x) * latent.c;
            for (int dy = 0; dy < f; ++dy) {
                for (int dx = 0; dx < f; ++dx) {
                    for (int ch = 0; ch < c; ++ch) {
                        out.img.at(y * f + dy, x * f + dx, ch) = cell[(dy * f + dx) * c + ch];
                    }
                }
            }
        }
    }
    return out;
}

LatentGrid downsample_mask(const MaskCanvas& mask, int f) {
    if (f <= 0 || mask.h % f != 0 || mask.w % f != 0)
        throw std::invalid_argument("downsample_mask: dims not divisible by codec factor");
    const int lh = mask.h / f, lw = mask.w / f, lc = f * f;
    LatentGrid out(lh, lw, lc);
    for (int y = 0; y < lh; ++y) {
        for (int x = 0; x < lw; ++x) {
            float* cell = out.data.data() + (static_cast<int64_t>(y) * lw + x) * lc;
            for (int dy = 0; dy < f; ++dy)
                for (int dx = 0; dx < f; ++dx) cell[dy * f + dx] = mask.at(y * f + dy, x * f + dx);
        }
    }
    return out;
}

Array mask_latent(Tape* tape, const Array& z, const LatentGrid& m_c, int color_channels) {
    if (z.rank() != 3 || z.dim(0) != m_c.h || z.dim(1) != m_c.w || z.dim(2) != m_c.c * color_channels)
        throw std::invalid_argument("mask_latent: shape mismatch");
    Array keep({m_c.h, m_c.w, z.dim(2)});
    for (int64_t cell = 0; cell < static_cast<int64_t>(m_c.h) * m_c.w; ++cell) {
        const float* mc = m_c.data.data() + cell * m_c.c;
        float* kc = keep.data() + cell * z.dim(2);
        for (int k = 0; k < m_c.c; ++k) {
            const float v = 1.0f - mc[k];
            for (int ch = 0; ch < color_channels; ++ch) kc[k * color_channels + ch] = v;
        }
    }
    return mul(tape, z, keep);
}

TokenSequence tokenize(const LatentGrid& z_t, const LatentGrid& z_c, const LatentGrid& m_c, int patch, int n_max) {
    if (z_t.h != z_c.h || z_t.w != z_c.w || z_t.h != m_c.h || z_t.w != m_c.w)
        throw std::invalid_argument("tokenize: grids must share spatial dims");
    if (z_t.c != z_c.c) throw std::invalid_argument("tokenize: z grids must share channels");
    if (patch <= 0 || z_t.h % patch != 0 || z_t.w % patch != 0)
        throw std::invalid_argument("tokenize: dims not divisible by patch size");

    TokenSequence seq;
    seq.grid_h = z_t.h;
    seq.grid_w = z_t.w;
    seq.patch = patch;
    seq.rows = z_t.h / patch;
    seq.cols = z_t.w / patch;
    seq.n_max = n_max;
    seq.n_real = seq.rows * seq.cols;
    seq.z_channels = z_t.c;
    seq.mask_channels = m_c.c;
    seq.z_t = z_t.data;
    seq.z_c = z_c.data;
    seq.m_c = m_c.data;
    if (seq.n_real > n_max) throw std::length_error("tokenize: token count exceeds N_max");

    seq.positions.resize(static_cast<size_t>(seq.n_real));
    seq.valid.assign(static_cast<size_t>(n_max), 0);
    seq.token_masked.assign(static_cast<size_t>(seq.n_real), 0);
    seq.token_garment.assign(static_cast<size_t>(seq.n_real), 0);

    // per-token mask mass
    double left_mass = 0.0, right_mass = 0.0;
    std::vector<double> token_mass(static_cast<size_t>(seq.n_real), 0.0);
    const int half_col = seq.cols / 2;
    for (int r = 0; r < seq.rows; ++r) {
        for (int q = 0; q < seq.cols; ++q) {
            double mass = 0.0;
            for (int dy = 0; dy < patch; ++dy) {
                for (int dx = 0; dx < patch; ++dx) {
                    const float* cell =
                        m_c.data.data() + (static_cast<int64_t>(r * patch + dy) * m_c.w + q * patch + dx) * m_c.c;
                    for (int k = 0; k < m_c.c; ++k) mass += cell[k];
                }
            }
            const int id = r * seq.cols + q;
            token_mass[static_cast<size_t>(id)] = mass;
            if (q < half_col) {
                left_mass += mass;
            } else {
                right_mass += mass;
            }
        }
    }
    // condition side is the half opposite the dominant mask mass
    const bool garment_side_left = left_mass <= right_mass;
    for (int r = 0; r < seq.rows; ++r) {
        for (int q = 0; q < seq.cols; ++q) {
            const int id = r * seq.cols + q;
            seq.positions[static_cast<size_t>(id)] = {r, q};
            seq.valid[static_cast<size_t>(id)] = 1;
            const bool masked = token_mass[static_cast<size_t>(id)] > 0.0;
            seq.token_masked[static_cast<size_t>(id)] = masked ? 1 : 0;
            const bool on_garment_side = garment_side_left ? (q < half_col) : (q >= half_col);
            if (on_garment_side && !masked) {
                seq.token_garment[static_cast<size_t>(id)] = 1;
                ++seq.n_garment;
            }
            if (masked) ++seq.n_mask;
        }
    }
    return seq;
}

Array TokenSequence::features_padded() const {
    LatentGrid zt(grid_h, grid_w, z_channels, z_t);
    LatentGrid zc(grid_h, grid_w, z_channels, z_c);
    LatentGrid mc(grid_h, grid_w, mask_channels, m_c);
    Array concat = concat_channels(nullptr, {zt.data, zc.data, mc.data});
    Array compact = patchify(nullptr, concat, patch);
    Array out({n_max, feature_dim()});
    for (int i = 0; i < n_real; ++i) {
        const float* src = compact.data() + static_cast<int64_t>(i) * feature_dim();
        float* dst = out.data() + static_cast<int64_t>(i) * feature_dim();
        for (int j = 0; j < feature_dim(); ++j) dst[j] = src[j];
    }
    return out;
}

Array detokenize(const Array& features_padded, const TokenSequence& seq) {
    const int fdim = seq.feature_dim();
    if (features_padded.rank() != 2 || features_padded.dim(0) != seq.n_max || features_padded.dim(1) != fdim)
        throw std::invalid_argument("detokenize: feature shape mismatch");
    Array compact({seq.n_real, fdim});
    for (int i = 0; i < seq.n_real; ++i) {
        const float* src = features_padded.data() + static_cast<int64_t>(i) * fdim;
        float* dst = compact.data() + static_cast<int64_t>(i) * fdim;
        for (int j = 0; j < fdim; ++j) dst[j] = src[j];
    }
    const int total_c = 2 * seq.z_channels + seq.mask_channels;
    return unpatchify(nullptr, compact, seq.grid_h, seq.grid_w, total_c, seq.patch);
}

}  // namespace vton
