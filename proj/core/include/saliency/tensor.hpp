#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "saliency/error.hpp"

namespace saliency {

using Shape = std::vector<std::size_t>;

std::size_t shape_product(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor of 64-bit reals. Invariant: data.size() equals the
/// product of shape, every dimension positive.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> d);

    static Tensor zeros(const Shape& s);

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    std::size_t rank() const { return shape.size(); }

    /// Same data, new shape; element counts must agree.
    Tensor reshaped(const Shape& s) const;

    bool all_finite() const;
};

bool same_shape(const Shape& a, const Shape& b);

/// Throws if t contains NaN/Inf; context names the operation for the message.
void ensure_finite(const Tensor& t, const std::string& context);

} // namespace saliency
