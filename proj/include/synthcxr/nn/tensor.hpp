#pragma once

#include <string>
#include <vector>

#include "synthcxr/core/error.hpp"

namespace synthcxr::nn {

/// Dense row-major tensor of doubles. Activations use NCHW layout.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(count(shape), 0.0);
    }

    static std::size_t count(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d < 0) fail("negative tensor dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t size() const { return data.size(); }
    int dim(std::size_t i) const { return shape.at(i); }
    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }

    void zero() { std::fill(data.begin(), data.end(), 0.0); }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            s += std::to_string(shape[i]);
            if (i + 1 < shape.size()) s += ",";
        }
        return s + ")";
    }
};

/// Named trainable parameter with its gradient accumulator.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, std::vector<int> shape)
        : name(std::move(n)), value(shape), grad(std::move(shape)) {}
};

}  // namespace synthcxr::nn
