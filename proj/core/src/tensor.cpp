#include "saliency/tensor.hpp"

#include <cmath>
#include <sstream>

namespace saliency {

std::size_t shape_product(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    for (std::size_t dim : shape) {
        if (dim == 0) throw Error("tensor: zero dimension in shape " + shape_str(shape));
    }
    if (shape_product(shape) != data.size()) {
        throw Error("tensor: shape " + shape_str(shape) + " does not match " +
                    std::to_string(data.size()) + " elements");
    }
}

Tensor Tensor::zeros(const Shape& s) {
    return Tensor(s, std::vector<double>(shape_product(s), 0.0));
}

Tensor Tensor::reshaped(const Shape& s) const {
    if (shape_product(s) != data.size()) {
        throw Error("tensor: cannot reshape " + shape_str(shape) + " to " + shape_str(s));
    }
    return Tensor(s, data);
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

bool same_shape(const Shape& a, const Shape& b) {
    return a == b;
}

void ensure_finite(const Tensor& t, const std::string& context) {
    if (!t.all_finite()) throw Error(context + ": non-finite values");
}

} // namespace saliency
