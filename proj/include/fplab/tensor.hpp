#pragma once

#include <numeric>
#include <vector>

namespace fplab {

// Row-major tensor in the network's 32-bit working precision.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {}

    int numel() const {
        return std::accumulate(shape.begin(), shape.end(), 1, std::multiplies<int>());
    }

    static Tensor zeros(std::vector<int> s) {
        Tensor t;
        t.shape = std::move(s);
        t.data.assign(t.numel_of(t.shape), 0.0f);
        return t;
    }

private:
    static int numel_of(const std::vector<int>& s) {
        return std::accumulate(s.begin(), s.end(), 1, std::multiplies<int>());
    }
};

}  // namespace fplab
