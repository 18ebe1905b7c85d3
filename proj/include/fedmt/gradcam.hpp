#pragma once

#include <cstdint>
#include <vector>

#include "fedmt/model.hpp"

namespace fedmt {

// Nonnegative spatial heat grid over the last conv layer's feature maps.
struct SaliencyMap {
    uint32_t h = 0;
    uint32_t w = 0;
    std::vector<double> grid;  // row-major, all entries >= 0
    bool normalized = false;   // max entry 1.0 unless identically zero
    uint32_t source_sample_id = 0;
};

// Grad-CAM over the last conv layer: per-channel weights are the spatial
// mean of the logit's gradient on that channel's feature map, the map is
// relu of the weighted activation sum, normalized to max 1 when nonzero.
SaliencyMap grad_cam(ComputationGraph& graph, const ParameterSet& params,
                     const Tensor& sample, uint32_t sample_id = 0);

// Binary PGM (P5) render, nearest-neighbor upscaled, value = round(255*entry).
std::vector<uint8_t> render_pgm(const SaliencyMap& map, uint32_t out_h, uint32_t out_w);

}  // namespace fedmt
