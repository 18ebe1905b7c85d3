#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedmt/datasets.hpp"
#include "fedmt/model.hpp"
#include "fedmt/sgd.hpp"

namespace fedmt {

struct TrainOptions {
    SgdConfig sgd;
    uint32_t batch_size = 32;
    uint64_t experiment_seed = 0;
    std::string shuffle_scope;  // node id or baseline name; part of the shuffle seed
};

struct EpochResult {
    ParameterSet params;
    double mean_loss = 0.0;  // over the epoch's batches
};

// One pass over the training set: seeded shuffle, minibatch SGD. The shuffle
// seed derives from (experiment seed, scope, epoch) so a federated node at
// round r and a centralized run at epoch r draw identical batch orders.
EpochResult train_epoch(ComputationGraph& graph, const ParameterSet& params,
                        const LabeledImageSet& train, const TrainOptions& opts,
                        uint32_t epoch);

// epochs [first, first+count)
EpochResult train_epochs(ComputationGraph& graph, ParameterSet params,
                         const LabeledImageSet& train, const TrainOptions& opts,
                         uint32_t first_epoch, uint32_t count);

// Per-sample scores over a whole set, batched.
std::vector<double> predict(ComputationGraph& graph, const ParameterSet& params,
                            const LabeledImageSet& set, uint32_t batch_size = 64);

}  // namespace fedmt
