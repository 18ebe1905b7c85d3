#include "fedmt/model.hpp"

#include <cmath>

#include "fedmt/errors.hpp"
#include "fedmt/rng.hpp"

namespace fedmt {

void ModelSpec::validate() const {
    if (in_h % 8 != 0 || in_w % 8 != 0) {
        throw ShapeError("input spatial dims must be divisible by 8 (three 2x2 pools), got " +
                         std::to_string(in_h) + "x" + std::to_string(in_w));
    }
    if (kernel_size % 2 == 0) throw ShapeError("kernel size must be odd");
    for (uint32_t c : conv_channels) {
        if (c == 0) throw ShapeError("conv channel counts must be positive");
    }
    if (dense_width == 0) throw ShapeError("dense width must be positive");
}

std::size_t ModelSpec::parameter_count() const {
    std::size_t total = 0;
    uint32_t cin = in_channels;
    for (uint32_t cout : conv_channels) {
        total += static_cast<std::size_t>(cout) * cin * kernel_size * kernel_size + cout;
        cin = cout;
    }
    const std::size_t flat = static_cast<std::size_t>(conv_channels[2]) * (in_h / 8) * (in_w / 8);
    total += static_cast<std::size_t>(dense_width) * flat + dense_width;
    total += dense_width + 1;  // dense2: 1 x dense_width weight + 1 bias
    return total;
}

ComputationGraph build_graph(const ModelSpec& spec) {
    spec.validate();
    ComputationGraph g;
    int x = g.add_input();
    int labels = g.add_labels();
    for (int stage = 0; stage < 3; ++stage) {
        const std::string name = "conv" + std::to_string(stage + 1);
        x = g.add_conv2d(x, name + ".weight", spec.conv_channels[stage], spec.kernel_size);
        x = g.add_bias(x, name + ".bias");
        x = g.add_relu(x);
        if (stage == 2) g.mark_last_conv_feature(x);
        x = g.add_maxpool2x2(x);
    }
    x = g.add_flatten(x);
    x = g.add_dense(x, "dense1.weight", spec.dense_width);
    x = g.add_bias(x, "dense1.bias");
    x = g.add_relu(x);
    x = g.add_dense(x, "dense2.weight", 1);
    x = g.add_bias(x, "dense2.bias");
    g.mark_logit(x);
    int score = g.add_sigmoid(x);
    g.add_bce_loss(score, labels);
    return g;
}

namespace {

Tensor glorot_uniform(std::vector<uint32_t> dims, uint32_t fan_in, uint32_t fan_out, Rng& rng) {
    Tensor t(std::move(dims));
    const double bound = std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<float>(rng.uniform(-bound, bound));
    }
    return t;
}

}  // namespace

BuiltModel build_standard_cnn(const ModelSpec& spec, uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    ParameterSet params;

    uint32_t cin = spec.in_channels;
    const uint32_t k = spec.kernel_size;
    for (int stage = 0; stage < 3; ++stage) {
        const uint32_t cout = spec.conv_channels[stage];
        const std::string name = "conv" + std::to_string(stage + 1);
        const uint32_t fan_in = cin * k * k;
        const uint32_t fan_out = cout * k * k;
        params.entries.emplace(name + ".weight",
                               glorot_uniform({cout, cin, k, k}, fan_in, fan_out, rng));
        params.entries.emplace(name + ".bias", Tensor({cout}));
        params.partition.representation_keys.push_back(name + ".weight");
        params.partition.representation_keys.push_back(name + ".bias");
        cin = cout;
    }

    const uint32_t flat = spec.conv_channels[2] * (spec.in_h / 8) * (spec.in_w / 8);
    params.entries.emplace("dense1.weight",
                           glorot_uniform({spec.dense_width, flat}, flat, spec.dense_width, rng));
    params.entries.emplace("dense1.bias", Tensor({spec.dense_width}));
    params.entries.emplace("dense2.weight",
                           glorot_uniform({1, spec.dense_width}, spec.dense_width, 1, rng));
    params.entries.emplace("dense2.bias", Tensor({1}));
    params.partition.task_keys = {"dense1.weight", "dense1.bias", "dense2.weight", "dense2.bias"};
    params.partition.validate();

    return BuiltModel{build_graph(spec), std::move(params)};
}

}  // namespace fedmt
