#pragma once

#include "boxseg/grid.hpp"
#include "boxseg/losses.hpp"
#include "boxseg/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace boxseg {

struct Sample {
    nn::Tensor3 image;             // 3×H×W, intensities in [0,1]
    std::optional<Grid> gt_mask;   // binary, evaluation / full supervision only
    std::vector<Box> boxes;        // tight boxes of gt components when gt exists
    std::string id;
};

struct SynthConfig {
    int count = 100;
    int image_size = 96;  // multiple of 32
    std::pair<int, int> blob_count_range{1, 3};
    std::pair<double, double> blob_scale_range{0.2, 0.4};  // blob diameter as image fraction
    double texture_noise = 0.06;
    double contrast = 0.3;  // foreground/background intensity separation
    uint64_t seed = 0;

    void validate() const;
};

// Tight inclusive box per 4-connected component, ordered by (row_min, col_min).
// An all-zero mask yields an empty annotation.
std::vector<Box> mask_to_boxes(const Grid& mask);

// Polyp-like blobs: rotated ellipses with a smooth closed random-walk radial
// perturbation, textured foreground/background, exact gt masks and derived
// boxes. Sample i depends only on (cfg.seed, i), so generation order or
// parallelism never changes the output.
std::vector<Sample> generate_synthetic(const SynthConfig& cfg);

struct LoadReport {
    std::vector<std::string> skipped;   // sample ids that failed to load
    std::vector<std::string> messages;  // one diagnostic per skipped sample
};

// Directory layout: images/ (*.ppm) plus masks/ (*.pgm) and/or boxes.txt.
// Samples are sorted by id; unreadable or unannotated images are skipped and
// listed in the report.
std::vector<Sample> load_directory(const std::filesystem::path& root, LoadReport* report = nullptr);

// Writes images/, masks/ (when gt is present) and boxes.txt.
void write_dataset(const std::filesystem::path& root, const std::vector<Sample>& samples);

// boxes.txt line format: <id> <n> <row_min col_min row_max col_max>*n
std::string format_boxes_line(const std::string& id, const std::vector<Box>& boxes);
std::pair<std::string, std::vector<Box>> parse_boxes_line(const std::string& line);

// Independent horizontal/vertical flips (p = 0.5 each) followed by a k*90°
// rotation, k uniform in {0,1,2,3}. gt is transformed identically; boxes are
// mapped through the same isometry. Deterministic in `seed`.
Sample augment(const Sample& sample, uint64_t seed);

// Isometries shared by augment() and its tests.
Grid hflip(const Grid& g);
Grid vflip(const Grid& g);
Grid rot90ccw(const Grid& g);
nn::Tensor3 hflip(const nn::Tensor3& t);
nn::Tensor3 vflip(const nn::Tensor3& t);
nn::Tensor3 rot90ccw(const nn::Tensor3& t);
Box hflip_box(const Box& b, int width);
Box vflip_box(const Box& b, int height);
Box rot90ccw_box(const Box& b, int width);

}  // namespace boxseg
