#include "vton/synthwear.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "vton/rng.hpp"

namespace vton {

namespace {

struct Color {
    uint8_t r, g, b;
};

Color random_color(Rng& rng) {
    return Color{static_cast<uint8_t>(rng.uniform_int(20, 235)), static_cast<uint8_t>(rng.uniform_int(20, 235)),
                 static_cast<uint8_t>(rng.uniform_int(20, 235))};
}

int color_dist(Color a, Color b) {
    return std::abs(int(a.r) - int(b.r)) + std::abs(int(a.g) - int(b.g)) + std::abs(int(a.b) - int(b.b));
}

Color contrasting(Rng& rng, Color base) {
    Color c = random_color(rng);
    if (color_dist(c, base) < 150) {
        c = Color{static_cast<uint8_t>(255 - c.r), static_cast<uint8_t>(255 - c.g), static_cast<uint8_t>(255 - c.b)};
    }
    return c;
}

void put(Image& img, int y, int x, Color c) {
    img.at(y, x, 0) = static_cast<float>(c.r) / 255.0f;
    img.at(y, x, 1) = static_cast<float>(c.g) / 255.0f;
    img.at(y, x, 2) = static_cast<float>(c.b) / 255.0f;
}

void fill_rect(Image& img, int r0, int r1, int c0, int c1, Color c) {
    r0 = std::max(r0, 0);
    c0 = std::max(c0, 0);
    r1 = std::min(r1, img.h);
    c1 = std::min(c1, img.w);
    for (int y = r0; y < r1; ++y)
        for (int x = c0; x < c1; ++x) put(img, y, x, c);
}

void fill_rect_mask(Image& mask, int r0, int r1, int c0, int c1) {
    r0 = std::max(r0, 0);
    c0 = std::max(c0, 0);
    r1 = std::min(r1, mask.h);
    c1 = std::min(c1, mask.w);
    for (int y = r0; y < r1; ++y)
        for (int x = c0; x < c1; ++x) mask.at(y, x, 0) = 1.0f;
}

int frac_row(int h, double f) { return static_cast<int>(std::lround(f * h)); }
int frac_col(int w, double f) { return static_cast<int>(std::lround(f * w)); }

// garment silhouette as a binary single-channel image
Image make_silhouette(Rng& rng, GarmentCategory category, int h, int w) {
    Image sil(h, w, 1, 0.0f);
    auto jitter = [&](double f) { return f + rng.uniform(-0.03f, 0.03f); };
    switch (category) {
        case GarmentCategory::upper: {
            int r0 = frac_row(h, jitter(0.20)), r1 = frac_row(h, jitter(0.55));
            int c0 = frac_col(w, jitter(0.25)), c1 = frac_col(w, jitter(0.75));
            fill_rect_mask(sil, r0, r1, c0, c1);
            int sr1 = frac_row(h, jitter(0.38));
            fill_rect_mask(sil, r0, sr1, frac_col(w, jitter(0.10)), c0);
            fill_rect_mask(sil, r0, sr1, c1, frac_col(w, jitter(0.90)));
            break;
        }
        case GarmentCategory::lower: {
            int r0 = frac_row(h, jitter(0.22)), rm = frac_row(h, jitter(0.40)), r1 = frac_row(h, jitter(0.78));
            int c0 = frac_col(w, jitter(0.28)), c1 = frac_col(w, jitter(0.72));
            fill_rect_mask(sil, r0, rm, c0, c1);
            fill_rect_mask(sil, rm, r1, c0, frac_col(w, jitter(0.47)));
            fill_rect_mask(sil, rm, r1, frac_col(w, jitter(0.53)), c1);
            break;
        }
        case GarmentCategory::full: {
            int r0 = frac_row(h, jitter(0.15)), r1 = frac_row(h, jitter(0.82));
            double top = jitter(0.18), bot = jitter(0.34);
            for (int y = std::max(r0, 0); y < std::min(r1, h); ++y) {
                double t = (r1 > r0) ? static_cast<double>(y - r0) / (r1 - r0) : 0.0;
                int half = frac_col(w, top + (bot - top) * t);
                fill_rect_mask(sil, y, y + 1, w / 2 - half, w / 2 + half);
            }
            break;
        }
    }
    return sil;
}

void paint_texture(Rng& rng, Image& garment, const Image& sil) {
    Color c0 = random_color(rng);
    Color c1 = contrasting(rng, c0);
    int pattern = rng.uniform_int(0, 2);
    int period = rng.uniform_int(2, 4);
    for (int y = 0; y < garment.h; ++y) {
        for (int x = 0; x < garment.w; ++x) {
            if (sil.at(y, x, 0) == 0.0f) continue;
            bool a = false;
            switch (pattern) {
                case 0: a = (y / period) % 2 == 0; break;
                case 1: a = (x / period) % 2 == 0; break;
                default: a = ((y / period) + (x / period)) % 2 == 0; break;
            }
            put(garment, y, x, a ? c0 : c1);
        }
    }
    // logo glyph: filled block with a contrasting inner ring, seeded position
    Color logo = contrasting(rng, c0);
    int lw = std::max(2, frac_col(garment.w, 0.14));
    int lh = std::max(2, frac_row(garment.h, 0.10));
    // find silhouette bbox to place the logo inside
    int br0 = garment.h, br1 = 0, bc0 = garment.w, bc1 = 0;
    for (int y = 0; y < garment.h; ++y)
        for (int x = 0; x < garment.w; ++x)
            if (sil.at(y, x, 0) > 0.0f) {
                br0 = std::min(br0, y);
                br1 = std::max(br1, y + 1);
                bc0 = std::min(bc0, x);
                bc1 = std::max(bc1, x + 1);
            }
    if (br1 - br0 > lh + 2 && bc1 - bc0 > lw + 2) {
        int ly = br0 + 1 + rng.uniform_int(0, br1 - br0 - lh - 2);
        int lx = bc0 + 1 + rng.uniform_int(0, bc1 - bc0 - lw - 2);
        for (int y = ly; y < ly + lh; ++y)
            for (int x = lx; x < lx + lw; ++x)
                if (sil.at(y, x, 0) > 0.0f) put(garment, y, x, logo);
        if (lh >= 4 && lw >= 4) {
            for (int y = ly + 1; y < ly + lh - 1; ++y)
                for (int x = lx + 1; x < lx + lw - 1; ++x)
                    if (sil.at(y, x, 0) > 0.0f) put(garment, y, x, c0);
        }
    }
}

Image make_person_template(Rng& rng, int h, int w) {
    Image person(h, w, 3);
    Color bg{230, 230, 230};
    Color skin{static_cast<uint8_t>(200 + rng.uniform_int(-10, 10)), static_cast<uint8_t>(165 + rng.uniform_int(-10, 10)),
               static_cast<uint8_t>(140 + rng.uniform_int(-10, 10))};
    Color under{static_cast<uint8_t>(120 + rng.uniform_int(-15, 15)), static_cast<uint8_t>(120 + rng.uniform_int(-15, 15)),
                static_cast<uint8_t>(130 + rng.uniform_int(-15, 15))};
    Color leg{static_cast<uint8_t>(80 + rng.uniform_int(-15, 15)), static_cast<uint8_t>(80 + rng.uniform_int(-15, 15)),
              static_cast<uint8_t>(110 + rng.uniform_int(-15, 15))};
    fill_rect(person, 0, h, 0, w, bg);
    // head disc
    double cy = 0.09 * h, cx = 0.5 * w, rad = std::max(1.5, 0.055 * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double dy = y + 0.5 - cy, dx = x + 0.5 - cx;
            if (dy * dy + dx * dx <= rad * rad) put(person, y, x, skin);
        }
    // torso, arms, legs
    fill_rect(person, frac_row(h, 0.16), frac_row(h, 0.56), frac_col(w, 0.30), frac_col(w, 0.70), under);
    fill_rect(person, frac_row(h, 0.18), frac_row(h, 0.52), frac_col(w, 0.22), frac_col(w, 0.30), skin);
    fill_rect(person, frac_row(h, 0.18), frac_row(h, 0.52), frac_col(w, 0.70), frac_col(w, 0.78), skin);
    fill_rect(person, frac_row(h, 0.56), frac_row(h, 0.96), frac_col(w, 0.34), frac_col(w, 0.48), leg);
    fill_rect(person, frac_row(h, 0.56), frac_row(h, 0.96), frac_col(w, 0.52), frac_col(w, 0.66), leg);
    return person;
}

void category_band(GarmentCategory category, int h, int* r0, int* r1) {
    switch (category) {
        case GarmentCategory::upper:
            *r0 = frac_row(h, 0.18);
            *r1 = frac_row(h, 0.58);
            break;
        case GarmentCategory::lower:
            *r0 = frac_row(h, 0.50);
            *r1 = frac_row(h, 0.92);
            break;
        default:
            *r0 = frac_row(h, 0.18);
            *r1 = frac_row(h, 0.92);
            break;
    }
}

Image dilate_chebyshev(const Image& mask, int radius) {
    if (radius <= 0) return mask;
    Image tmp(mask.h, mask.w, 1, 0.0f);
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x) {
            float v = 0.0f;
            for (int d = -radius; d <= radius && v == 0.0f; ++d) {
                int xx = x + d;
                if (xx >= 0 && xx < mask.w && mask.at(y, xx, 0) > 0.0f) v = 1.0f;
            }
            tmp.at(y, x, 0) = v;
        }
    Image out(mask.h, mask.w, 1, 0.0f);
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x) {
            float v = 0.0f;
            for (int d = -radius; d <= radius && v == 0.0f; ++d) {
                int yy = y + d;
                if (yy >= 0 && yy < mask.h && tmp.at(yy, x, 0) > 0.0f) v = 1.0f;
            }
            out.at(y, x, 0) = v;
        }
    return out;
}

}  // namespace

void DatasetSpec::validate(int multiple) const {
    if (pair_count <= 0) throw std::invalid_argument("dataset.pair_count must be positive");
    double mix = upper + lower + full;
    if (std::abs(mix - 1.0) > 1e-6) throw std::invalid_argument("dataset category mix must sum to 1");
    if (sizes.empty()) throw std::invalid_argument("dataset.sizes must not be empty");
    double total = 0.0;
    for (const SizeSpec& s : sizes) {
        if (s.height <= 0 || s.width <= 0) throw std::invalid_argument("dataset size dims must be positive");
        if (s.height % multiple != 0 || s.width % multiple != 0)
            throw std::invalid_argument("dataset size dims must be divisible by codec_factor*patch");
        total += s.proportion;
    }
    if (std::abs(total - 1.0) > 1e-6) throw std::invalid_argument("dataset size proportions must sum to 1");
}

int head_band_rows(int h) { return static_cast<int>(std::ceil(0.16 * h)); }

SamplePair gen_pair(uint64_t seed, GarmentCategory category, int height, int width) {
    Rng rng(hash_combine(seed, 0x67656e70ull));
    SamplePair pair;
    pair.seed = seed;
    pair.category = category;
    pair.aspect_label = std::to_string(height) + "x" + std::to_string(width);

    Image sil = make_silhouette(rng, category, height, width);
    pair.garment = Image(height, width, 3);
    fill_rect(pair.garment, 0, height, 0, width, Color{255, 255, 255});
    paint_texture(rng, pair.garment, sil);
    pair.garment_tight = sil;

    pair.person = make_person_template(rng, height, width);
    pair.person_mask = Image(height, width, 1, 0.0f);
    pair.corr_y.assign(static_cast<size_t>(height) * width, -1);
    pair.corr_x.assign(static_cast<size_t>(height) * width, -1);

    // silhouette bbox
    int br0 = height, br1 = 0, bc0 = width, bc1 = 0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (sil.at(y, x, 0) > 0.0f) {
                br0 = std::min(br0, y);
                br1 = std::max(br1, y + 1);
                bc0 = std::min(bc0, x);
                bc1 = std::max(bc1, x + 1);
            }
    const double bh = std::max(1, br1 - br0), bw = std::max(1, bc1 - bc0);
    const double gy = 0.5 * (br0 + br1), gx = 0.5 * (bc0 + bc1);

    int band_r0 = 0, band_r1 = 0;
    category_band(category, height, &band_r0, &band_r1);
    const double band_h = band_r1 - band_r0;

    const double theta = rng.uniform(-0.3490658f, 0.3490658f);  // +-20 degrees
    const double ca = std::cos(theta), sa = std::sin(theta);
    const double aca = std::abs(ca), asa = std::abs(sa);
    double s = rng.uniform(0.7f, 1.2f);
    const double fit_h = 0.95 * band_h / (bh * aca + bw * asa);
    const double fit_w = 0.95 * width / (bw * aca + bh * asa);
    s = std::min({s, fit_h, fit_w});
    const double hh_rot = 0.5 * s * (bh * aca + bw * asa);
    const double hw_rot = 0.5 * s * (bw * aca + bh * asa);

    double cy_lo = band_r0 + hh_rot, cy_hi = band_r1 - hh_rot;
    double cy = cy_lo < cy_hi ? cy_lo + (cy_hi - cy_lo) * rng.uniform() : 0.5 * (band_r0 + band_r1);
    double cx_lo = std::max(hw_rot, 0.32 * width), cx_hi = std::min(width - hw_rot, 0.68 * width);
    double cx = cx_lo < cx_hi ? cx_lo + (cx_hi - cx_lo) * rng.uniform() : 0.5 * width;

    // person pixel -> garment pixel via the inverse affine map, nearest source
    for (int y = band_r0; y < band_r1; ++y) {
        for (int x = 0; x < width; ++x) {
            const double px = x + 0.5 - cx, py = y + 0.5 - cy;
            const double ux = (ca * px + sa * py) / s + gx;
            const double uy = (-sa * px + ca * py) / s + gy;
            const int sx = static_cast<int>(std::floor(ux));
            const int sy = static_cast<int>(std::floor(uy));
            if (sy < 0 || sy >= height || sx < 0 || sx >= width) continue;
            if (sil.at(sy, sx, 0) == 0.0f) continue;
            for (int ch = 0; ch < 3; ++ch) pair.person.at(y, x, ch) = pair.garment.at(sy, sx, ch);
            pair.person_mask.at(y, x, 0) = 1.0f;
            pair.corr_y[static_cast<size_t>(y) * width + x] = sy;
            pair.corr_x[static_cast<size_t>(y) * width + x] = sx;
        }
    }

    quantize_image(pair.garment);
    quantize_image(pair.person);
    return pair;
}

GarmentCategory dataset_category(const DatasetSpec& spec, int index) {
    Rng rng(hash_combine(spec.seed, hash_combine(0x63617467ull, static_cast<uint64_t>(index))));
    const float u = rng.uniform();
    if (u < spec.upper) return GarmentCategory::upper;
    if (u < spec.upper + spec.lower) return GarmentCategory::lower;
    return GarmentCategory::full;
}

SizeSpec dataset_size(const DatasetSpec& spec, int index) {
    Rng rng(hash_combine(spec.seed, hash_combine(0x73697a65ull, static_cast<uint64_t>(index))));
    const float u = rng.uniform();
    double acc = 0.0;
    for (const SizeSpec& s : spec.sizes) {
        acc += s.proportion;
        if (u < acc) return s;
    }
    return spec.sizes.back();
}

uint64_t dataset_pair_seed(const DatasetSpec& spec, int index) {
    return hash_combine(spec.seed, hash_combine(0x70616972ull, static_cast<uint64_t>(index)));
}

std::vector<SamplePair> generate_dataset(const DatasetSpec& spec) {
    std::vector<SamplePair> out;
    out.reserve(static_cast<size_t>(spec.pair_count));
    for (int i = 0; i < spec.pair_count; ++i) {
        const SizeSpec size = dataset_size(spec, i);
        out.push_back(gen_pair(dataset_pair_seed(spec, i), dataset_category(spec, i), size.height, size.width));
    }
    return out;
}

Image augment_mask(const Image& mask, uint64_t seed, AugmentMode mode, std::optional<float> growth) {
    if (mask.c != 1) throw std::invalid_argument("augment_mask: single-channel mask required");
    Rng rng(hash_combine(seed, 0x6175676dull));
    if (mode == AugmentMode::off) {
        const float g = growth ? *growth : rng.uniform();
        const int radius = static_cast<int>(std::lround(g * std::max(mask.h, mask.w)));
        return dilate_chebyshev(mask, radius);
    }
    // try-on: dilation plus random blocks, head band excluded, input preserved
    const int radius = rng.uniform_int(0, std::max(1, mask.h / 16));
    Image aug = dilate_chebyshev(mask, radius);
    const int blocks = rng.uniform_int(0, 2);
    for (int b = 0; b < blocks; ++b) {
        int y0 = rng.uniform_int(0, mask.h - 1);
        int x0 = rng.uniform_int(0, mask.w - 1);
        int bh = rng.uniform_int(1, std::max(1, mask.h / 6));
        int bw = rng.uniform_int(1, std::max(1, mask.w / 6));
        fill_rect_mask(aug, y0, y0 + bh, x0, x0 + bw);
    }
    const int head = head_band_rows(mask.h);
    for (int y = 0; y < std::min(head, mask.h); ++y)
        for (int x = 0; x < mask.w; ++x) aug.at(y, x, 0) = 0.0f;
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x)
            if (mask.at(y, x, 0) > 0.0f) aug.at(y, x, 0) = 1.0f;
    return aug;
}

std::vector<PairDirEntry> load_pair_dir(const std::string& path) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(path)) throw std::runtime_error("load_pair_dir: not a directory: " + path);
    const std::string gsuf = ".garment.png";
    std::vector<std::string> stems;
    for (const auto& e : fs::directory_iterator(path)) {
        if (!e.is_regular_file()) continue;
        const std::string name = e.path().filename().string();
        if (name.size() > gsuf.size() && name.compare(name.size() - gsuf.size(), gsuf.size(), gsuf) == 0) {
            stems.push_back(name.substr(0, name.size() - gsuf.size()));
        }
    }
    std::sort(stems.begin(), stems.end());
    std::vector<PairDirEntry> out;
    std::string missing;
    for (const std::string& stem : stems) {
        PairDirEntry entry;
        entry.stem = stem;
        entry.garment_path = (fs::path(path) / (stem + ".garment.png")).string();
        entry.person_path = (fs::path(path) / (stem + ".person.png")).string();
        const auto mask = fs::path(path) / (stem + ".mask.png");
        if (fs::exists(mask)) entry.mask_path = mask.string();
        if (!fs::exists(entry.person_path)) {
            missing += missing.empty() ? stem : ", " + stem;
            continue;
        }
        out.push_back(std::move(entry));
    }
    if (!missing.empty()) throw std::runtime_error("load_pair_dir: missing person image for: " + missing);
    return out;
}

LoadedPair load_entry(const PairDirEntry& entry) {
    LoadedPair pair;
    pair.garment = load_png(entry.garment_path);
    pair.person = load_png(entry.person_path);
    if (!entry.mask_path.empty()) pair.mask = load_png(entry.mask_path);
    return pair;
}

}  // namespace vton
