#include "fedmt/train.hpp"

#include <cstring>
#include <numeric>

#include "fedmt/errors.hpp"
#include "fedmt/rng.hpp"

namespace fedmt {

namespace {

Tensor gather_batch(const LabeledImageSet& set, const std::vector<uint32_t>& order,
                    std::size_t first, std::size_t count, Tensor& labels_out) {
    const std::size_t pixels = static_cast<std::size_t>(set.height()) * set.width();
    Tensor batch({static_cast<uint32_t>(count), 1, set.height(), set.width()});
    labels_out = Tensor({static_cast<uint32_t>(count)});
    for (std::size_t i = 0; i < count; ++i) {
        const uint32_t idx = order[first + i];
        std::memcpy(batch.data() + i * pixels, set.images.data() + idx * pixels,
                    pixels * sizeof(float));
        labels_out[i] = static_cast<float>(set.labels[idx]);
    }
    return batch;
}

}  // namespace

EpochResult train_epoch(ComputationGraph& graph, const ParameterSet& params,
                        const LabeledImageSet& train, const TrainOptions& opts,
                        uint32_t epoch) {
    if (train.count() == 0) throw DomainError("training set is empty");
    std::vector<uint32_t> order(train.count());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(opts.experiment_seed, hash_str(opts.shuffle_scope), epoch));
    shuffle(order, rng);

    EpochResult res;
    res.params = params;
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < order.size(); first += opts.batch_size) {
        const std::size_t count = std::min<std::size_t>(opts.batch_size, order.size() - first);
        Tensor labels;
        Tensor batch = gather_batch(train, order, first, count, labels);
        loss_sum += graph.forward_loss(res.params, batch, labels);
        GradientMap grads = graph.backward(res.params);
        res.params = sgd_step(res.params, grads, opts.sgd, epoch);
        ++batches;
    }
    res.mean_loss = loss_sum / static_cast<double>(batches);
    return res;
}

EpochResult train_epochs(ComputationGraph& graph, ParameterSet params,
                         const LabeledImageSet& train, const TrainOptions& opts,
                         uint32_t first_epoch, uint32_t count) {
    EpochResult res;
    res.params = std::move(params);
    for (uint32_t e = 0; e < count; ++e) {
        res = train_epoch(graph, res.params, train, opts, first_epoch + e);
    }
    return res;
}

std::vector<double> predict(ComputationGraph& graph, const ParameterSet& params,
                            const LabeledImageSet& set, uint32_t batch_size) {
    std::vector<uint32_t> order(set.count());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> scores;
    scores.reserve(set.count());
    for (std::size_t first = 0; first < order.size(); first += batch_size) {
        const std::size_t count = std::min<std::size_t>(batch_size, order.size() - first);
        Tensor labels;
        Tensor batch = gather_batch(set, order, first, count, labels);
        Tensor s = graph.forward(params, batch);
        for (std::size_t i = 0; i < s.size(); ++i) scores.push_back(s[i]);
    }
    return scores;
}

}  // namespace fedmt
