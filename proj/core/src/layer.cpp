#include "saliency/layer.hpp"

#include <string>

namespace saliency {

namespace {

std::string layer_tag(std::size_t index, LayerKind kind) {
    return "layer " + std::to_string(index) + " (" + layer_kind_name(kind) + ")";
}

} // namespace

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Dense: return "dense";
        case LayerKind::Conv2D: return "conv2d";
        case LayerKind::ReLU: return "relu";
        case LayerKind::Flatten: return "flatten";
    }
    return "?";
}

Layer Layer::dense(std::size_t out, std::size_t in, bool bias_enabled) {
    Layer l;
    l.kind = LayerKind::Dense;
    l.weights = Tensor::zeros({out, in});
    l.bias = Tensor::zeros({out});
    l.bias_enabled = bias_enabled;
    return l;
}

Layer Layer::dense(Tensor weights, Tensor bias, bool bias_enabled) {
    Layer l;
    l.kind = LayerKind::Dense;
    l.weights = std::move(weights);
    l.bias = std::move(bias);
    l.bias_enabled = bias_enabled;
    l.validate(0);
    return l;
}

Layer Layer::conv2d(std::size_t out_ch, std::size_t in_ch, std::size_t kh, std::size_t kw,
                    bool bias_enabled) {
    Layer l;
    l.kind = LayerKind::Conv2D;
    l.weights = Tensor::zeros({out_ch, in_ch, kh, kw});
    l.bias = Tensor::zeros({out_ch});
    l.bias_enabled = bias_enabled;
    return l;
}

Layer Layer::conv2d(Tensor kernels, Tensor bias, bool bias_enabled) {
    Layer l;
    l.kind = LayerKind::Conv2D;
    l.weights = std::move(kernels);
    l.bias = std::move(bias);
    l.bias_enabled = bias_enabled;
    l.validate(0);
    return l;
}

Layer Layer::relu() {
    Layer l;
    l.kind = LayerKind::ReLU;
    return l;
}

Layer Layer::flatten() {
    Layer l;
    l.kind = LayerKind::Flatten;
    return l;
}

std::size_t Layer::fan_in() const {
    switch (kind) {
        case LayerKind::Dense: return weights.shape[1];
        case LayerKind::Conv2D: return weights.shape[1] * weights.shape[2] * weights.shape[3];
        default: return 0;
    }
}

Shape Layer::output_shape(const Shape& in, std::size_t layer_index) const {
    switch (kind) {
        case LayerKind::Dense: {
            if (in.size() != 1 || in[0] != weights.shape[1]) {
                throw Error(layer_tag(layer_index, kind) + ": expects input (" +
                            std::to_string(weights.shape[1]) + "), got " + shape_str(in));
            }
            return {weights.shape[0]};
        }
        case LayerKind::Conv2D: {
            const std::size_t in_ch = weights.shape[1];
            const std::size_t kh = weights.shape[2];
            const std::size_t kw = weights.shape[3];
            if (in.size() != 3 || in[0] != in_ch || in[1] < kh || in[2] < kw) {
                throw Error(layer_tag(layer_index, kind) + ": expects input (" +
                            std::to_string(in_ch) + ",>=" + std::to_string(kh) + ",>=" +
                            std::to_string(kw) + "), got " + shape_str(in));
            }
            return {weights.shape[0], in[1] - kh + 1, in[2] - kw + 1};
        }
        case LayerKind::ReLU:
            return in;
        case LayerKind::Flatten:
            return {shape_product(in)};
    }
    throw Error("unreachable layer kind");
}

void Layer::validate(std::size_t layer_index) const {
    if (kind == LayerKind::Dense) {
        if (weights.rank() != 2 || bias.rank() != 1 || weights.shape[0] != bias.shape[0]) {
            throw Error(layer_tag(layer_index, kind) + ": weight rows must match bias length");
        }
    } else if (kind == LayerKind::Conv2D) {
        if (weights.rank() != 4 || bias.rank() != 1 || weights.shape[0] != bias.shape[0]) {
            throw Error(layer_tag(layer_index, kind) + ": out channels must match bias length");
        }
    }
    if (parameterized() && !bias_enabled) {
        for (double b : bias.data) {
            if (b != 0.0) {
                throw Error(layer_tag(layer_index, kind) +
                            ": bias_enabled is false but bias has nonzero entries");
            }
        }
    }
}

} // namespace saliency
