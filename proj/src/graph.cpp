#include "fedmt/graph.hpp"

#include <algorithm>
#include <cmath>

#include "fedmt/errors.hpp"
#include "fedmt/kernels.hpp"

namespace fedmt {

namespace {
constexpr double kBceClamp = 1e-7;
}

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::input: return "input";
        case OpKind::conv2d: return "conv2d";
        case OpKind::maxpool2x2: return "maxpool2x2";
        case OpKind::relu: return "relu";
        case OpKind::dense: return "dense";
        case OpKind::sigmoid: return "sigmoid";
        case OpKind::bce_loss: return "bce-loss";
        case OpKind::add_bias: return "add-bias";
        case OpKind::flatten: return "flatten";
    }
    return "?";
}

double bce_loss(const Tensor& scores, const Tensor& labels) {
    if (scores.size() == 0 || scores.size() != labels.size()) {
        throw DomainError("bce_loss: scores/labels must be non-empty and equal length");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double s = std::clamp(static_cast<double>(scores[i]), kBceClamp, 1.0 - kBceClamp);
        const double y = static_cast<double>(labels[i]);
        acc += -(y * std::log(s) + (1.0 - y) * std::log(1.0 - s));
    }
    return acc / static_cast<double>(scores.size());
}

int ComputationGraph::add_node(OpKind kind, std::vector<int> inputs, std::string param,
                               uint32_t meta0, uint32_t meta1) {
    for (int in : inputs) {
        if (in < 0 || in >= static_cast<int>(nodes_.size())) {
            throw StateError("graph node references unknown input id");
        }
    }
    GraphNode n;
    n.kind = kind;
    n.inputs = std::move(inputs);
    n.param = std::move(param);
    nodes_.push_back(std::move(n));
    meta_.push_back({meta0, meta1});
    return static_cast<int>(nodes_.size()) - 1;
}

int ComputationGraph::add_input() {
    input_id_ = add_node(OpKind::input, {});
    return input_id_;
}

int ComputationGraph::add_labels() {
    labels_id_ = add_node(OpKind::input, {});
    return labels_id_;
}

int ComputationGraph::add_conv2d(int input, std::string weight_name, uint32_t cout, uint32_t k) {
    if (k % 2 == 0) throw ShapeError("conv2d kernel size must be odd");
    return add_node(OpKind::conv2d, {input}, std::move(weight_name), cout, k);
}

int ComputationGraph::add_bias(int input, std::string bias_name) {
    return add_node(OpKind::add_bias, {input}, std::move(bias_name));
}

int ComputationGraph::add_relu(int input) { return add_node(OpKind::relu, {input}); }

int ComputationGraph::add_maxpool2x2(int input) {
    return add_node(OpKind::maxpool2x2, {input});
}

int ComputationGraph::add_flatten(int input) { return add_node(OpKind::flatten, {input}); }

int ComputationGraph::add_dense(int input, std::string weight_name, uint32_t out) {
    return add_node(OpKind::dense, {input}, std::move(weight_name), out);
}

int ComputationGraph::add_sigmoid(int input) {
    score_id_ = add_node(OpKind::sigmoid, {input});
    return score_id_;
}

int ComputationGraph::add_bce_loss(int scores, int labels) {
    loss_id_ = add_node(OpKind::bce_loss, {scores, labels});
    return loss_id_;
}

const Tensor& ComputationGraph::param_tensor(const ParameterSet& params,
                                             const GraphNode& n) const {
    auto it = params.entries.find(n.param);
    if (it == params.entries.end()) {
        throw IntegrityError(std::string(op_name(n.kind)) + " layer references missing parameter '" +
                             n.param + "'");
    }
    return it->second;
}

void ComputationGraph::eval_node(int id, const ParameterSet& params) {
    GraphNode& n = nodes_[id];
    switch (n.kind) {
        case OpKind::input:
            break;  // value assigned externally
        case OpKind::conv2d: {
            const Tensor& x = nodes_[n.inputs[0]].value;
            if (x.rank() != 4) {
                throw ShapeError("conv2d layer '" + n.param + "' expects NxCxHxW, got " +
                                 x.dims_str());
            }
            kernels::Conv2dShape s{x.dims()[0], x.dims()[1], x.dims()[2], x.dims()[3],
                                   meta_[id].first, meta_[id].second};
            const Tensor& w = param_tensor(params, n);
            if (w.dims() != std::vector<uint32_t>{s.cout, s.cin, s.k, s.k}) {
                throw ShapeError("conv2d weight '" + n.param + "' has dims " + w.dims_str() +
                                 ", expected [" + std::to_string(s.cout) + "x" +
                                 std::to_string(s.cin) + "x" + std::to_string(s.k) + "x" +
                                 std::to_string(s.k) + "]");
            }
            n.value = Tensor({s.n, s.cout, s.h, s.w});
            kernels::conv2d_forward(x.data(), w.data(), n.value.data(), s);
            break;
        }
        case OpKind::add_bias: {
            const Tensor& x = nodes_[n.inputs[0]].value;
            const Tensor& b = param_tensor(params, n);
            n.value = Tensor(x.dims());
            if (x.rank() == 4) {
                if (b.dims() != std::vector<uint32_t>{x.dims()[1]}) {
                    throw ShapeError("add-bias '" + n.param + "' dims " + b.dims_str() +
                                     " do not match channel count of " + x.dims_str());
                }
                kernels::ref::bias_forward_4d(x.data(), b.data(), n.value.data(), x.dims()[0],
                                              x.dims()[1], x.dims()[2] * x.dims()[3]);
            } else if (x.rank() == 2) {
                if (b.dims() != std::vector<uint32_t>{x.dims()[1]}) {
                    throw ShapeError("add-bias '" + n.param + "' dims " + b.dims_str() +
                                     " do not match feature count of " + x.dims_str());
                }
                kernels::ref::bias_forward_2d(x.data(), b.data(), n.value.data(), x.dims()[0],
                                              x.dims()[1]);
            } else {
                throw ShapeError("add-bias expects rank 2 or 4 input, got " + x.dims_str());
            }
            break;
        }
        case OpKind::relu: {
            const Tensor& x = nodes_[n.inputs[0]].value;
            n.value = Tensor(x.dims());
            kernels::ref::relu_forward(x.data(), n.value.data(), x.size());
            break;
        }
        case OpKind::maxpool2x2: {
            const Tensor& x = nodes_[n.inputs[0]].value;
            if (x.rank() != 4 || x.dims()[2] % 2 != 0 || x.dims()[3] % 2 != 0) {
                throw ShapeError("maxpool2x2 needs NxCxHxW with even H,W, got " + x.dims_str());
            }
            n.value = Tensor({x.dims()[0], x.dims()[1], x.dims()[2] / 2, x.dims()[3] / 2});
            n.scratch.assign(n.value.size(), 0);
            kernels::ref::maxpool2x2_forward(x.data(), n.value.data(), n.scratch.data(),
                                             x.dims()[0] * x.dims()[1], x.dims()[2], x.dims()[3]);
            break;
        }
        case OpKind::flatten: {
            const Tensor& x = nodes_[n.inputs[0]].value;
            if (x.rank() != 4) throw ShapeError("flatten expects NxCxHxW, got " + x.dims_str());
            n.value = Tensor({x.dims()[0], x.dims()[1] * x.dims()[2] * x.dims()[3]}, x.vec());
            break;
        }
        case OpKind::dense: {
            const Tensor& x = nodes_[n.inputs[0]].value;
            if (x.rank() != 2) {
                throw ShapeError("dense layer '" + n.param + "' expects NxF input, got " +
                                 x.dims_str());
            }
            const uint32_t out = meta_[id].first;
            const Tensor& w = param_tensor(params, n);
            if (w.dims() != std::vector<uint32_t>{out, x.dims()[1]}) {
                throw ShapeError("dense weight '" + n.param + "' has dims " + w.dims_str() +
                                 ", expected [" + std::to_string(out) + "x" +
                                 std::to_string(x.dims()[1]) + "]");
            }
            n.value = Tensor({x.dims()[0], out});
            kernels::dense_forward(x.data(), w.data(), n.value.data(), x.dims()[0], x.dims()[1],
                                   out);
            break;
        }
        case OpKind::sigmoid: {
            const Tensor& x = nodes_[n.inputs[0]].value;
            n.value = Tensor(x.dims());
            kernels::ref::sigmoid_forward(x.data(), n.value.data(), x.size());
            break;
        }
        case OpKind::bce_loss: {
            const Tensor& s = nodes_[n.inputs[0]].value;
            const Tensor& y = nodes_[n.inputs[1]].value;
            n.value = Tensor::scalar(static_cast<float>(bce_loss(s, y)));
            break;
        }
    }
    n.has_value = true;
}

Tensor ComputationGraph::forward(const ParameterSet& params, const Tensor& batch) {
    if (input_id_ < 0 || score_id_ < 0) throw StateError("graph has no input or score node");
    nodes_[input_id_].value = batch;
    nodes_[input_id_].has_value = true;
    for (int id = 0; id < static_cast<int>(nodes_.size()); ++id) {
        if (nodes_[id].kind == OpKind::input) continue;
        if (nodes_[id].kind == OpKind::bce_loss) continue;  // only in forward_loss
        eval_node(id, params);
    }
    forward_done_ = true;
    const Tensor& score = nodes_[score_id_].value;
    return Tensor({static_cast<uint32_t>(score.size())}, score.vec());
}

float ComputationGraph::forward_loss(const ParameterSet& params, const Tensor& batch,
                                     const Tensor& labels) {
    if (labels_id_ < 0 || loss_id_ < 0) throw StateError("graph has no labels or loss node");
    nodes_[labels_id_].value = labels;
    nodes_[labels_id_].has_value = true;
    forward(params, batch);
    eval_node(loss_id_, params);
    return nodes_[loss_id_].value[0];
}

void ComputationGraph::backprop_node(int id, const ParameterSet& params, GradientMap& grads) {
    GraphNode& n = nodes_[id];
    const Tensor& gy = n.grad;
    switch (n.kind) {
        case OpKind::input:
            break;
        case OpKind::conv2d: {
            GraphNode& xn = nodes_[n.inputs[0]];
            const Tensor& x = xn.value;
            kernels::Conv2dShape s{x.dims()[0], x.dims()[1], x.dims()[2], x.dims()[3],
                                   meta_[id].first, meta_[id].second};
            const Tensor& w = param_tensor(params, n);
            Tensor gx(x.dims());
            kernels::conv2d_backward_input(gy.data(), w.data(), gx.data(), s);
            for (std::size_t i = 0; i < gx.size(); ++i) xn.grad[i] += gx[i];
            Tensor gw(w.dims());
            kernels::conv2d_backward_weight(x.data(), gy.data(), gw.data(), s);
            Tensor& acc = grads.at(n.param);
            for (std::size_t i = 0; i < gw.size(); ++i) acc[i] += gw[i];
            break;
        }
        case OpKind::add_bias: {
            GraphNode& xn = nodes_[n.inputs[0]];
            for (std::size_t i = 0; i < gy.size(); ++i) xn.grad[i] += gy[i];
            const Tensor& b = param_tensor(params, n);
            Tensor gb(b.dims());
            if (xn.value.rank() == 4) {
                kernels::ref::bias_backward_4d(gy.data(), gb.data(), xn.value.dims()[0],
                                               xn.value.dims()[1],
                                               xn.value.dims()[2] * xn.value.dims()[3]);
            } else {
                kernels::ref::bias_backward_2d(gy.data(), gb.data(), xn.value.dims()[0],
                                               xn.value.dims()[1]);
            }
            Tensor& acc = grads.at(n.param);
            for (std::size_t i = 0; i < gb.size(); ++i) acc[i] += gb[i];
            break;
        }
        case OpKind::relu: {
            GraphNode& xn = nodes_[n.inputs[0]];
            Tensor gx(xn.value.dims());
            kernels::ref::relu_backward(xn.value.data(), gy.data(), gx.data(), gx.size());
            for (std::size_t i = 0; i < gx.size(); ++i) xn.grad[i] += gx[i];
            break;
        }
        case OpKind::maxpool2x2: {
            GraphNode& xn = nodes_[n.inputs[0]];
            Tensor gx(xn.value.dims());
            kernels::ref::maxpool2x2_backward(gy.data(), n.scratch.data(), gx.data(),
                                              xn.value.dims()[0] * xn.value.dims()[1],
                                              xn.value.dims()[2], xn.value.dims()[3]);
            for (std::size_t i = 0; i < gx.size(); ++i) xn.grad[i] += gx[i];
            break;
        }
        case OpKind::flatten: {
            GraphNode& xn = nodes_[n.inputs[0]];
            for (std::size_t i = 0; i < gy.size(); ++i) xn.grad[i] += gy[i];
            break;
        }
        case OpKind::dense: {
            GraphNode& xn = nodes_[n.inputs[0]];
            const Tensor& x = xn.value;
            const uint32_t out = meta_[id].first;
            const Tensor& w = param_tensor(params, n);
            Tensor gx(x.dims());
            kernels::dense_backward_input(gy.data(), w.data(), gx.data(), x.dims()[0],
                                          x.dims()[1], out);
            for (std::size_t i = 0; i < gx.size(); ++i) xn.grad[i] += gx[i];
            Tensor gw(w.dims());
            kernels::dense_backward_weight(x.data(), gy.data(), gw.data(), x.dims()[0],
                                           x.dims()[1], out);
            Tensor& acc = grads.at(n.param);
            for (std::size_t i = 0; i < gw.size(); ++i) acc[i] += gw[i];
            break;
        }
        case OpKind::sigmoid: {
            GraphNode& xn = nodes_[n.inputs[0]];
            Tensor gx(xn.value.dims());
            kernels::ref::sigmoid_backward(n.value.data(), gy.data(), gx.data(), gx.size());
            for (std::size_t i = 0; i < gx.size(); ++i) xn.grad[i] += gx[i];
            break;
        }
        case OpKind::bce_loss: {
            GraphNode& sn = nodes_[n.inputs[0]];
            const Tensor& s = sn.value;
            const Tensor& y = nodes_[n.inputs[1]].value;
            const double inv_n = 1.0 / static_cast<double>(s.size());
            const double seed = static_cast<double>(gy[0]);
            for (std::size_t i = 0; i < s.size(); ++i) {
                const double si = static_cast<double>(s[i]);
                if (si <= kBceClamp || si >= 1.0 - kBceClamp) continue;  // clamp saturates
                const double yi = static_cast<double>(y[i]);
                sn.grad[i] += static_cast<float>(seed * inv_n * (-yi / si + (1.0 - yi) / (1.0 - si)));
            }
            break;
        }
    }
}

GradientMap ComputationGraph::run_backward(int from, const ParameterSet& params) {
    if (!forward_done_ || !nodes_[from].has_value) {
        throw StateError("backward called before forward");
    }
    for (GraphNode& n : nodes_) {
        n.grad = Tensor(n.has_value ? n.value.dims() : std::vector<uint32_t>{1});
    }
    GradientMap grads;
    for (const GraphNode& n : nodes_) {
        if (!n.param.empty() && !grads.count(n.param)) {
            grads.emplace(n.param, Tensor(param_tensor(params, n).dims()));
        }
    }
    // seed with ones at the starting node
    for (std::size_t i = 0; i < nodes_[from].grad.size(); ++i) nodes_[from].grad[i] = 1.0f;
    for (int id = from; id >= 0; --id) {
        if (!nodes_[id].has_value) continue;
        backprop_node(id, params, grads);
    }
    return grads;
}

GradientMap ComputationGraph::backward(const ParameterSet& params) {
    if (loss_id_ < 0) throw StateError("graph has no loss node");
    if (!nodes_[loss_id_].has_value) throw StateError("backward called before forward");
    return run_backward(loss_id_, params);
}

GradientMap ComputationGraph::backward_from(int node_id, const ParameterSet& params) {
    if (node_id < 0 || node_id >= static_cast<int>(nodes_.size())) {
        throw StateError("backward_from: unknown node id");
    }
    return run_backward(node_id, params);
}

}  // namespace fedmt
