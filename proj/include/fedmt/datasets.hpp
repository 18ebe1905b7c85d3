#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedmt/tensor.hpp"

namespace fedmt {

struct LabeledImageSet {
    Tensor images{std::vector<uint32_t>{1, 1, 1, 1}};  // N x 1 x H x W, values in [0,1]
    std::vector<uint8_t> labels;                       // {0,1}, length N
    std::string task_name;

    uint32_t count() const { return images.dims()[0]; }
    uint32_t height() const { return images.dims()[2]; }
    uint32_t width() const { return images.dims()[3]; }
    // one sample as a 1 x 1 x H x W batch
    Tensor sample(uint32_t index) const;
};

struct DatasetSplit {
    LabeledImageSet train;
    LabeledImageSet validation;
    uint64_t split_seed = 0;
    double validation_fraction = 0.2;
};

enum class TaskKind { blob, ring };

TaskKind task_kind_from_string(const std::string& s);

// Synthetic binary image tasks. Positives carry the task's structure (blob:
// bright Gaussian spot at a random location; ring: bright annulus) over
// noise; negatives are noise only. Pure function of the arguments.
LabeledImageSet gen_synthetic_task(TaskKind kind, uint32_t n, uint32_t hw,
                                   double positive_rate, double noise_sigma, uint64_t seed,
                                   std::string task_name);

// Raw binary image/label files (.imgs/.lbls): images are magic u32, count
// u32, H u32, W u32 then one unsigned byte per pixel; labels are magic u32,
// count u32, one byte each. All integers little-endian. Pixels scale to
// [0,1] by /255.
LabeledImageSet load_idx_like(const std::string& images_path, const std::string& labels_path);
void save_idx_like(const LabeledImageSet& set, const std::string& images_path,
                   const std::string& labels_path);

// Stratified split; validation size = round(fraction * N), class counts
// within +-1 of proportional. Falls back to unstratified when a class has
// fewer than 2 samples.
DatasetSplit split_dataset(const LabeledImageSet& set, double fraction, uint64_t seed);

}  // namespace fedmt
