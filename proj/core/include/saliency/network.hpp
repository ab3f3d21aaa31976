#pragma once

#include <cstdint>
#include <vector>

#include "saliency/layer.hpp"
#include "saliency/tensor.hpp"

namespace saliency {

/// Feedforward net computing logits for num_classes outputs. No softmax layer
/// is stored; softmax enters only through the training loss.
struct Network {
    std::vector<Layer> layers;
    Shape input_shape;
    std::size_t num_classes = 0;

    /// Checks that layer shapes compose from input_shape to (num_classes).
    void validate() const;

    std::vector<std::size_t> parameterized_indices() const;
    std::size_t input_size() const { return shape_product(input_shape); }
};

/// Activations recorded during one forward pass; inputs[i]/outputs[i] belong
/// to layer i. Needed by per-logit backprop and relevance propagation.
struct ForwardTrace {
    std::vector<Tensor> inputs;
    std::vector<Tensor> outputs;

    const Tensor& logits() const { return outputs.back(); }
};

Tensor layer_forward(const Layer& layer, const Tensor& x, std::size_t layer_index);

/// Gradient w.r.t. the layer input given gradient w.r.t. its output.
/// ReLU uses derivative 0 at exactly 0.
Tensor layer_backward_input(const Layer& layer, const Tensor& input, const Tensor& grad_out);

Tensor forward(const Network& net, const Tensor& x);
ForwardTrace forward_trace(const Network& net, const Tensor& x);

/// Row c is the gradient of logit c w.r.t. the (flattened) input; shape {C, d}.
Tensor logit_gradients(const Network& net, const Tensor& x);

/// Single gradient row from an existing trace, shaped like the input.
Tensor input_gradient(const Network& net, const ForwardTrace& trace, std::size_t node);

std::size_t argmax_logit(const Tensor& logits);

/// Fresh parameters: weights ~ uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)),
/// biases zero. Each parameterized layer draws from a stream derived from
/// (seed, layer ordinal counted from the input), so re-initializing any
/// subset of layers with the same seed reproduces the same per-layer values.
void initialize_parameters(Network& net, std::uint64_t seed);

/// Copy of net with one parameterized layer re-drawn from the initialization
/// distribution. layer_index addresses the full layer list.
Network randomize_layer(const Network& net, std::size_t layer_index, std::uint64_t seed);

/// Copy with the top_k parameterized layers nearest the output re-drawn,
/// walking from the output toward the input. top_k equal to the total
/// parameterized count reproduces initialize_parameters(seed) exactly.
Network cascading_randomize(const Network& net, std::size_t top_k, std::uint64_t seed);

} // namespace saliency
