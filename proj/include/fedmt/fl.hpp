#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fedmt/datasets.hpp"
#include "fedmt/model.hpp"
#include "fedmt/sgd.hpp"
#include "fedmt/train.hpp"
#include "fedmt/transport.hpp"

namespace fedmt {

enum class Weighting { samples, equal };
enum class TransportKind { in_process, stream };

struct NodeState {
    std::string node_id;
    std::string task_name;
    ParameterSet local_params;
    uint64_t sample_count = 0;  // training-set size
    uint32_t epochs_per_round = 1;
};

struct FederationConfig {
    uint32_t total_rounds = 1;
    SgdConfig sgd;  // total_epochs covers the whole federation (rounds x epochs-per-round)
    uint32_t batch_size = 32;
    Weighting weighting = Weighting::samples;
    TransportKind transport = TransportKind::in_process;
    uint64_t experiment_seed = 0;
};

struct GlobalMetaModel {
    ParameterSet shared_representation;                // representation block only
    std::map<std::string, ParameterSet> task_heads;    // task name -> task block
};

struct RoundLogEntry {
    uint32_t round = 0;
    std::string node_id;
    double mean_loss = 0.0;
};

struct FederationResult {
    GlobalMetaModel model;
    std::vector<RoundLogEntry> round_log;
    std::shared_ptr<MessageTrace> trace;  // every frame the server sent or received
    std::vector<ParameterSet> final_node_params;
};

struct LocalRoundResult {
    ParameterSet representation;  // representation block of the updated params
    uint64_t sample_count = 0;
    double mean_loss = 0.0;
};

// One node-side round: merge the broadcast representation into the local
// parameters, train epochs_per_round epochs, hand back the updated
// representation block. The task block stays in node.local_params.
LocalRoundResult local_round(NodeState& node, const ParameterSet& global_rep,
                             const LabeledImageSet& train, ComputationGraph& graph,
                             const FederationConfig& cfg, uint32_t round_index);

// Sample-count-weighted elementwise mean (64-bit accumulation, stored back
// as float32). All updates must share keys and dims.
ParameterSet fedavg_aggregate(const std::vector<std::pair<ParameterSet, uint64_t>>& updates,
                              Weighting weighting = Weighting::samples);

// Full synchronous federation: broadcast -> local_round on every node ->
// aggregate, for total_rounds rounds, then collect task heads. Nodes run on
// threads; the server is the calling thread. The same protocol bytes flow
// over either transport.
FederationResult run_federation(std::vector<NodeState> nodes,
                                const std::vector<LabeledImageSet>& train_sets,
                                const ModelSpec& spec, const FederationConfig& cfg);

}  // namespace fedmt
