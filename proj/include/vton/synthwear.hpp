#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vton/image.hpp"
#include "vton/layout.hpp"

namespace vton {

// One synthetic garment/person record with exact ground truth. corr_y/corr_x
// give, for every masked person pixel, the source pixel on the garment image
// (-1 where the correspondence is undefined).
struct SamplePair {
    Image garment;        // H x W x 3
    Image person;         // H x W x 3
    Image person_mask;    // H x W x 1, garment region on the person (M_on)
    Image garment_tight;  // H x W x 1, garment silhouette on the garment image
    std::vector<int32_t> corr_y;
    std::vector<int32_t> corr_x;
    GarmentCategory category = GarmentCategory::upper;
    std::string aspect_label;
    uint64_t seed = 0;

    int32_t corr_src_y(int y, int x) const { return corr_y[static_cast<size_t>(y) * garment.w + x]; }
    int32_t corr_src_x(int y, int x) const { return corr_x[static_cast<size_t>(y) * garment.w + x]; }
};

struct SizeSpec {
    int height = 24;
    int width = 16;
    double proportion = 1.0;
};

struct DatasetSpec {
    int pair_count = 256;
    uint64_t seed = 0;
    double upper = 0.34;
    double lower = 0.33;
    double full = 0.33;
    std::vector<SizeSpec> sizes = {SizeSpec{}};

    // checks mix sums and dim divisibility by `multiple` (codec factor * patch)
    void validate(int multiple) const;
};

// rows [0, head_band_rows) on the person image are never masked by
// try-on augmentation (face band analog)
int head_band_rows(int h);

SamplePair gen_pair(uint64_t seed, GarmentCategory category, int height, int width);

// deterministic: category and size per index are pure functions of the spec
std::vector<SamplePair> generate_dataset(const DatasetSpec& spec);
GarmentCategory dataset_category(const DatasetSpec& spec, int index);
SizeSpec dataset_size(const DatasetSpec& spec, int index);
uint64_t dataset_pair_seed(const DatasetSpec& spec, int index);

enum class AugmentMode { on, off };

// try-on: seeded dilation + blocks, always a superset of the input, never
// touching the head band. try-off: dilation radius growth*max(h,w); growth 0
// returns the input unchanged, growth 1 covers (nearly) the full image.
Image augment_mask(const Image& mask, uint64_t seed, AugmentMode mode, std::optional<float> growth = std::nullopt);

// directory layout: <stem>.garment.png / <stem>.person.png / <stem>.mask.png
struct PairDirEntry {
    std::string stem;
    std::string garment_path;
    std::string person_path;
    std::string mask_path;  // empty if absent
};

std::vector<PairDirEntry> load_pair_dir(const std::string& path);

struct LoadedPair {
    Image garment;
    Image person;
    std::optional<Image> mask;
};

LoadedPair load_entry(const PairDirEntry& entry);

}  // namespace vton
