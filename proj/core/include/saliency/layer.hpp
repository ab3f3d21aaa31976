#pragma once

#include <cstddef>

#include "saliency/tensor.hpp"

namespace saliency {

enum class LayerKind { Dense, Conv2D, ReLU, Flatten };

const char* layer_kind_name(LayerKind kind);

/// One network layer. Dense holds weights {out, in} and bias {out};
/// Conv2D holds kernels {out_ch, in_ch, kh, kw} and bias {out_ch}, valid
/// padding, stride 1. ReLU/Flatten carry no parameters.
/// bias_enabled == false pins every bias entry to exactly 0.
struct Layer {
    LayerKind kind = LayerKind::ReLU;
    Tensor weights;
    Tensor bias;
    bool bias_enabled = true;

    static Layer dense(std::size_t out, std::size_t in, bool bias_enabled = true);
    static Layer dense(Tensor weights, Tensor bias, bool bias_enabled = true);
    static Layer conv2d(std::size_t out_ch, std::size_t in_ch, std::size_t kh, std::size_t kw,
                        bool bias_enabled = true);
    static Layer conv2d(Tensor kernels, Tensor bias, bool bias_enabled = true);
    static Layer relu();
    static Layer flatten();

    bool parameterized() const {
        return kind == LayerKind::Dense || kind == LayerKind::Conv2D;
    }

    std::size_t fan_in() const;

    /// Output shape for a given input shape; throws Error on mismatch.
    Shape output_shape(const Shape& in, std::size_t layer_index) const;

    void validate(std::size_t layer_index) const;
};

} // namespace saliency
