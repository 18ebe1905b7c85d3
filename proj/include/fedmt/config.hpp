#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedmt/fl.hpp"
#include "fedmt/model.hpp"

namespace fedmt {

// One dataset per task; either a synthetic generator or a pair of raw
// binary files.
struct TaskConfig {
    std::string name;
    bool from_files = false;
    // generator settings
    TaskKind kind = TaskKind::blob;
    uint32_t n = 2000;
    uint32_t hw = 16;
    double positive_rate = 0.3;
    double noise_sigma = 0.15;
    // file settings
    std::string images_path;
    std::string labels_path;
};

struct ExperimentConfig {
    uint64_t seed = 42;
    std::vector<TaskConfig> tasks;
    ModelSpec model;
    uint32_t baseline_epochs = 300;
    uint32_t fl_rounds = 300;
    uint32_t epochs_per_round = 1;
    double initial_lr = 1e-3;
    double lr_floor = 1e-5;
    LrSchedule lr_schedule = LrSchedule::cosine_to_floor;
    uint32_t batch_size = 32;
    Weighting aggregation_weighting = Weighting::samples;
    uint32_t bootstrap_replicates = 1000;
    TransportKind transport = TransportKind::in_process;
    double validation_fraction = 0.2;
    uint32_t gradcam_samples = 8;  // true positives rendered per task
    std::string output_dir = "run";

    void validate() const;  // throws ConfigError
};

// Flat line-oriented `key = value` file with `[task.<name>]` sections.
// Unknown keys, bad values, and misplaced lines report the line number.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

}  // namespace fedmt
