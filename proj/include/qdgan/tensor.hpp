#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "qdgan/errors.hpp"

namespace qdgan {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

// Dense row-major tensor of 64-bit reals.
struct Tensor {
    Shape shape;
    std::vector<double> values;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
        if (shape_numel(shape) != values.size())
            throw usage_error("tensor shape " + shape_str(shape) + " does not match " +
                              std::to_string(values.size()) + " values");
    }

    static Tensor zeros(Shape s) {
        std::size_t n = shape_numel(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }

    std::size_t size() const { return values.size(); }

    // Reinterpret the buffer under a new shape with equal element count.
    Tensor reshaped(Shape s) const {
        if (shape_numel(s) != values.size())
            throw usage_error("cannot reshape " + shape_str(shape) + " to " + shape_str(s));
        return Tensor(std::move(s), values);
    }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

}  // namespace qdgan
