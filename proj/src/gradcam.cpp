#include "fedmt/gradcam.hpp"

#include <cmath>
#include <string>

#include "fedmt/errors.hpp"

namespace fedmt {

SaliencyMap grad_cam(ComputationGraph& graph, const ParameterSet& params,
                     const Tensor& sample, uint32_t sample_id) {
    const int feature_id = graph.last_conv_feature_node();
    const int logit_id = graph.logit_node();
    if (feature_id < 0 || logit_id < 0) {
        throw StateError("graph has no marked conv feature layer");
    }
    if (sample.rank() != 4 || sample.dims()[0] != 1) {
        throw ShapeError("grad_cam expects a single 1xCxHxW sample, got " + sample.dims_str());
    }

    graph.forward(params, sample);
    // gradients are taken at the pre-sigmoid logit so the map scales
    // linearly with the head weights
    graph.backward_from(logit_id, params);

    const Tensor& features = graph.node(feature_id).value;  // 1 x K x H x W
    const Tensor& grads = graph.node(feature_id).grad;
    const uint32_t channels = features.dims()[1];
    const uint32_t h = features.dims()[2];
    const uint32_t w = features.dims()[3];
    const std::size_t plane = static_cast<std::size_t>(h) * w;

    std::vector<double> alpha(channels, 0.0);
    for (uint32_t k = 0; k < channels; ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < plane; ++i) sum += grads[k * plane + i];
        alpha[k] = sum / static_cast<double>(plane);
    }

    SaliencyMap map;
    map.h = h;
    map.w = w;
    map.source_sample_id = sample_id;
    map.grid.assign(plane, 0.0);
    for (std::size_t i = 0; i < plane; ++i) {
        double v = 0.0;
        for (uint32_t k = 0; k < channels; ++k) {
            v += alpha[k] * static_cast<double>(features[k * plane + i]);
        }
        map.grid[i] = v > 0.0 ? v : 0.0;
    }

    double peak = 0.0;
    for (double v : map.grid) peak = std::max(peak, v);
    if (peak > 0.0) {
        for (double& v : map.grid) v /= peak;
        map.normalized = true;
    }
    return map;
}

std::vector<uint8_t> render_pgm(const SaliencyMap& map, uint32_t out_h, uint32_t out_w) {
    if (!map.normalized) throw StateError("render_pgm requires a normalized map");
    if (map.h == 0 || map.w == 0 || out_h == 0 || out_w == 0) {
        throw DomainError("render_pgm: empty map or target size");
    }
    const std::string header =
        "P5\n" + std::to_string(out_w) + " " + std::to_string(out_h) + "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + static_cast<std::size_t>(out_h) * out_w);
    for (uint32_t y = 0; y < out_h; ++y) {
        const uint32_t sy = y * map.h / out_h;
        for (uint32_t x = 0; x < out_w; ++x) {
            const uint32_t sx = x * map.w / out_w;
            const double v = map.grid[static_cast<std::size_t>(sy) * map.w + sx];
            out.push_back(static_cast<uint8_t>(std::lround(255.0 * v)));
        }
    }
    return out;
}

}  // namespace fedmt
