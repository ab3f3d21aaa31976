#include "saliency/network.hpp"

#include <cmath>
#include <string>

#include "saliency/rng.hpp"

namespace saliency {

void Network::validate() const {
    if (num_classes == 0) throw Error("network: num_classes must be positive");
    if (layers.empty()) throw Error("network: no layers");
    Shape cur = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].validate(i);
        cur = layers[i].output_shape(cur, i);
    }
    if (cur.size() != 1 || cur[0] != num_classes) {
        throw Error("network: final output shape " + shape_str(cur) + " is not (" +
                    std::to_string(num_classes) + ")");
    }
}

std::vector<std::size_t> Network::parameterized_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].parameterized()) idx.push_back(i);
    }
    return idx;
}

Tensor layer_forward(const Layer& layer, const Tensor& x, std::size_t layer_index) {
    const Shape out_shape = layer.output_shape(x.shape, layer_index);
    switch (layer.kind) {
        case LayerKind::Dense: {
            const std::size_t out = layer.weights.shape[0];
            const std::size_t in = layer.weights.shape[1];
            Tensor y = Tensor::zeros(out_shape);
            const double* w = layer.weights.data.data();
            for (std::size_t k = 0; k < out; ++k) {
                double acc = layer.bias[k];
                const double* row = w + k * in;
                for (std::size_t j = 0; j < in; ++j) acc += row[j] * x[j];
                y[k] = acc;
            }
            return y;
        }
        case LayerKind::Conv2D: {
            const std::size_t oc = layer.weights.shape[0];
            const std::size_t ic = layer.weights.shape[1];
            const std::size_t kh = layer.weights.shape[2];
            const std::size_t kw = layer.weights.shape[3];
            const std::size_t ih = x.shape[1], iw = x.shape[2];
            const std::size_t oh = out_shape[1], ow = out_shape[2];
            Tensor y = Tensor::zeros(out_shape);
            for (std::size_t o = 0; o < oc; ++o) {
                for (std::size_t i = 0; i < oh; ++i) {
                    for (std::size_t j = 0; j < ow; ++j) {
                        double acc = layer.bias[o];
                        for (std::size_t c = 0; c < ic; ++c) {
                            for (std::size_t di = 0; di < kh; ++di) {
                                const double* xrow = &x.data[(c * ih + i + di) * iw + j];
                                const double* krow =
                                    &layer.weights.data[((o * ic + c) * kh + di) * kw];
                                for (std::size_t dj = 0; dj < kw; ++dj) {
                                    acc += krow[dj] * xrow[dj];
                                }
                            }
                        }
                        y.data[(o * oh + i) * ow + j] = acc;
                    }
                }
            }
            return y;
        }
        case LayerKind::ReLU: {
            Tensor y = x;
            for (double& v : y.data) {
                if (v < 0.0) v = 0.0;
            }
            return y;
        }
        case LayerKind::Flatten:
            return x.reshaped(out_shape);
    }
    throw Error("unreachable layer kind");
}

Tensor layer_backward_input(const Layer& layer, const Tensor& input, const Tensor& grad_out) {
    switch (layer.kind) {
        case LayerKind::Dense: {
            const std::size_t out = layer.weights.shape[0];
            const std::size_t in = layer.weights.shape[1];
            Tensor g = Tensor::zeros(input.shape);
            const double* w = layer.weights.data.data();
            for (std::size_t k = 0; k < out; ++k) {
                const double gk = grad_out[k];
                if (gk == 0.0) continue;
                const double* row = w + k * in;
                for (std::size_t j = 0; j < in; ++j) g[j] += row[j] * gk;
            }
            return g;
        }
        case LayerKind::Conv2D: {
            const std::size_t oc = layer.weights.shape[0];
            const std::size_t ic = layer.weights.shape[1];
            const std::size_t kh = layer.weights.shape[2];
            const std::size_t kw = layer.weights.shape[3];
            const std::size_t ih = input.shape[1], iw = input.shape[2];
            const std::size_t oh = grad_out.shape[1], ow = grad_out.shape[2];
            Tensor g = Tensor::zeros(input.shape);
            for (std::size_t o = 0; o < oc; ++o) {
                for (std::size_t i = 0; i < oh; ++i) {
                    for (std::size_t j = 0; j < ow; ++j) {
                        const double go = grad_out.data[(o * oh + i) * ow + j];
                        if (go == 0.0) continue;
                        for (std::size_t c = 0; c < ic; ++c) {
                            for (std::size_t di = 0; di < kh; ++di) {
                                double* grow = &g.data[(c * ih + i + di) * iw + j];
                                const double* krow =
                                    &layer.weights.data[((o * ic + c) * kh + di) * kw];
                                for (std::size_t dj = 0; dj < kw; ++dj) {
                                    grow[dj] += krow[dj] * go;
                                }
                            }
                        }
                    }
                }
            }
            return g;
        }
        case LayerKind::ReLU: {
            Tensor g = grad_out;
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (input[i] <= 0.0) g[i] = 0.0; // subgradient at 0 is 0
            }
            return g;
        }
        case LayerKind::Flatten:
            return grad_out.reshaped(input.shape);
    }
    throw Error("unreachable layer kind");
}

Tensor forward(const Network& net, const Tensor& x) {
    if (!same_shape(x.shape, net.input_shape)) {
        throw Error("forward: input shape " + shape_str(x.shape) + " does not match network input " +
                    shape_str(net.input_shape));
    }
    Tensor cur = x;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        cur = layer_forward(net.layers[i], cur, i);
    }
    ensure_finite(cur, "forward");
    return cur;
}

ForwardTrace forward_trace(const Network& net, const Tensor& x) {
    if (!same_shape(x.shape, net.input_shape)) {
        throw Error("forward: input shape " + shape_str(x.shape) + " does not match network input " +
                    shape_str(net.input_shape));
    }
    ForwardTrace trace;
    trace.inputs.reserve(net.layers.size());
    trace.outputs.reserve(net.layers.size());
    Tensor cur = x;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        trace.inputs.push_back(cur);
        cur = layer_forward(net.layers[i], cur, i);
        trace.outputs.push_back(cur);
    }
    ensure_finite(cur, "forward");
    return trace;
}

Tensor input_gradient(const Network& net, const ForwardTrace& trace, std::size_t node) {
    if (node >= net.num_classes) {
        throw Error("input_gradient: node " + std::to_string(node) + " out of range");
    }
    Tensor grad = Tensor::zeros({net.num_classes});
    grad[node] = 1.0;
    for (std::size_t i = net.layers.size(); i-- > 0;) {
        grad = layer_backward_input(net.layers[i], trace.inputs[i], grad);
    }
    return grad;
}

Tensor logit_gradients(const Network& net, const Tensor& x) {
    const ForwardTrace trace = forward_trace(net, x);
    const std::size_t d = net.input_size();
    Tensor g = Tensor::zeros({net.num_classes, d});
    for (std::size_t c = 0; c < net.num_classes; ++c) {
        const Tensor row = input_gradient(net, trace, c);
        for (std::size_t j = 0; j < d; ++j) g.data[c * d + j] = row.data[j];
    }
    ensure_finite(g, "logit_gradients");
    return g;
}

std::size_t argmax_logit(const Tensor& logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) best = i;
    }
    return best;
}

namespace {

void reinitialize(Layer& layer, std::uint64_t seed, std::size_t ordinal) {
    Rng rng(derive_seed(seed, ordinal));
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.fan_in()));
    for (double& w : layer.weights.data) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias.data) b = 0.0;
}

} // namespace

void initialize_parameters(Network& net, std::uint64_t seed) {
    std::size_t ordinal = 0;
    for (Layer& layer : net.layers) {
        if (layer.parameterized()) reinitialize(layer, seed, ordinal++);
    }
}

Network randomize_layer(const Network& net, std::size_t layer_index, std::uint64_t seed) {
    if (layer_index >= net.layers.size()) {
        throw Error("randomize_layer: index " + std::to_string(layer_index) + " out of range");
    }
    if (!net.layers[layer_index].parameterized()) {
        throw Error("randomize_layer: layer " + std::to_string(layer_index) + " (" +
                    layer_kind_name(net.layers[layer_index].kind) + ") has no parameters");
    }
    Network copy = net;
    std::size_t ordinal = 0;
    for (std::size_t i = 0; i < layer_index; ++i) {
        if (net.layers[i].parameterized()) ++ordinal;
    }
    reinitialize(copy.layers[layer_index], seed, ordinal);
    return copy;
}

Network cascading_randomize(const Network& net, std::size_t top_k, std::uint64_t seed) {
    const std::vector<std::size_t> params = net.parameterized_indices();
    if (top_k < 1 || top_k > params.size()) {
        throw Error("cascading_randomize: top_k " + std::to_string(top_k) +
                    " out of range [1, " + std::to_string(params.size()) + "]");
    }
    Network copy = net;
    for (std::size_t j = 0; j < top_k; ++j) {
        const std::size_t ordinal = params.size() - 1 - j; // output toward input
        reinitialize(copy.layers[params[ordinal]], seed, ordinal);
    }
    return copy;
}

} // namespace saliency
