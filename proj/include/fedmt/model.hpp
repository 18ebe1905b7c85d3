#pragma once

#include <array>
#include <cstdint>
#include <memory>

#include "fedmt/graph.hpp"
#include "fedmt/params.hpp"

namespace fedmt {

// Architecture of the standard model: three conv->relu->pool stages feeding
// a two-layer sigmoid head. The conv stack is the representation block, the
// dense head the task block.
struct ModelSpec {
    uint32_t in_channels = 1;
    uint32_t in_h = 16;
    uint32_t in_w = 16;
    std::array<uint32_t, 3> conv_channels{8, 16, 32};
    uint32_t kernel_size = 3;  // odd
    uint32_t dense_width = 64;

    void validate() const;  // H,W divisible by 8, odd kernel
    std::size_t parameter_count() const;
};

struct BuiltModel {
    ComputationGraph graph;
    ParameterSet params;
};

// Seeded Glorot-uniform initialization; same seed gives bitwise-identical
// parameter sets. Conv parameters land in representation_keys, dense in
// task_keys.
BuiltModel build_standard_cnn(const ModelSpec& spec, uint64_t seed);

// Fresh graph for an existing parameter set (graphs cache per-batch state
// and are not shareable across concurrent users).
ComputationGraph build_graph(const ModelSpec& spec);

}  // namespace fedmt
