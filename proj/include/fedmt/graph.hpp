#pragma once

#include <string>
#include <vector>

#include "fedmt/params.hpp"
#include "fedmt/tensor.hpp"

namespace fedmt {

enum class OpKind {
    input,
    conv2d,
    maxpool2x2,
    relu,
    dense,
    sigmoid,
    bce_loss,
    add_bias,
    flatten,
};

const char* op_name(OpKind k);

struct GraphNode {
    OpKind kind;
    std::vector<int> inputs;  // node ids, already topologically ordered
    std::string param;        // weight/bias name for conv2d/dense/add_bias
    Tensor value;
    Tensor grad;
    std::vector<uint32_t> scratch;  // maxpool argmax
    bool has_value = false;
};

// Fixed-layer-set reverse-mode autodiff tape. Nodes are appended in build
// order, which is a valid topological order; forward caches every
// intermediate value and backward walks the tape in reverse.
class ComputationGraph {
  public:
    int add_input();
    int add_labels();
    int add_conv2d(int input, std::string weight_name, uint32_t cout, uint32_t k);
    int add_bias(int input, std::string bias_name);
    int add_relu(int input);
    int add_maxpool2x2(int input);
    int add_flatten(int input);
    int add_dense(int input, std::string weight_name, uint32_t out);
    int add_sigmoid(int input);
    int add_bce_loss(int scores, int labels);

    // Runs the graph on one batch (N x C x H x W), returns the per-sample
    // sigmoid scores. Intermediate values stay cached for backward.
    Tensor forward(const ParameterSet& params, const Tensor& batch);

    // forward plus loss evaluation; labels is a length-N tensor of {0,1}.
    float forward_loss(const ParameterSet& params, const Tensor& batch,
                       const Tensor& labels);

    // Gradients of the loss node for every trainable parameter. Requires a
    // prior forward_loss on this instance.
    GradientMap backward(const ParameterSet& params);

    // Gradients of an arbitrary node's summed output (seed gradient of
    // ones); used for saliency. Node values/grads stay readable afterwards.
    GradientMap backward_from(int node_id, const ParameterSet& params);

    const GraphNode& node(int id) const { return nodes_.at(id); }
    int score_node() const { return score_id_; }
    int loss_node() const { return loss_id_; }
    int input_node() const { return input_id_; }

    // Model-zoo marks the node whose feature maps saliency is computed on
    // and the pre-sigmoid logit.
    void mark_last_conv_feature(int id) { last_conv_feature_id_ = id; }
    void mark_logit(int id) { logit_id_ = id; }
    int last_conv_feature_node() const { return last_conv_feature_id_; }
    int logit_node() const { return logit_id_; }

  private:
    int add_node(OpKind kind, std::vector<int> inputs, std::string param = {},
                 uint32_t meta0 = 0, uint32_t meta1 = 0);
    void eval_node(int id, const ParameterSet& params);
    void backprop_node(int id, const ParameterSet& params, GradientMap& grads);
    GradientMap run_backward(int from, const ParameterSet& params);
    const Tensor& param_tensor(const ParameterSet& params, const GraphNode& n) const;

    std::vector<GraphNode> nodes_;
    std::vector<std::pair<uint32_t, uint32_t>> meta_;  // per node: (cout/out, k)
    int input_id_ = -1;
    int labels_id_ = -1;
    int score_id_ = -1;
    int loss_id_ = -1;
    int last_conv_feature_id_ = -1;
    int logit_id_ = -1;
    bool forward_done_ = false;
};

// Mean binary cross entropy with scores clamped to [1e-7, 1-1e-7];
// accumulates in double.
double bce_loss(const Tensor& scores, const Tensor& labels);

}  // namespace fedmt
