#pragma once

#include <cstdint>
#include <vector>

#include "saliency/dataset.hpp"
#include "saliency/network.hpp"

namespace saliency {

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
};

struct TrainReport {
    std::vector<double> epoch_losses;        // mean cross-entropy per epoch
    double final_train_accuracy = 0.0;       // valid only when epochs >= 1
};

/// Mini-batch SGD on softmax cross-entropy, in place. Sample order is a
/// seeded shuffle per epoch; results are a pure function of (net, dataset,
/// cfg). Layers with bias_enabled == false keep their biases at exactly 0.
/// Throws when the loss goes non-finite.
TrainReport train(Network& net, const LabeledDataset& ds, const TrainConfig& cfg);

double evaluate_accuracy(const Network& net, const LabeledDataset& ds);

/// Numerically stable softmax of a logit vector.
std::vector<double> softmax(const Tensor& logits);

} // namespace saliency
