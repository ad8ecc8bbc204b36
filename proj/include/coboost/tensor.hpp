#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace coboost {

// Dense row-major float tensor. Shape conventions used throughout:
// batches of images are {B,C,H,W}, batches of vectors/logits are {B,D}.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel_of(shape)), 0.0f);
    }
    Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<int64_t>(data.size()) != numel_of(shape))
            throw std::invalid_argument("Tensor: data size does not match shape");
    }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape.at(static_cast<size_t>(i)); }

    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    Tensor reshaped(std::vector<int> s) const {
        if (numel_of(s) != numel()) throw std::invalid_argument("Tensor::reshaped: numel mismatch");
        Tensor t;
        t.shape = std::move(s);
        t.data = data;
        return t;
    }

    // Rows x cols view of a 2-D (or flattened-to-2-D) tensor.
    int rows() const { return shape.empty() ? 0 : shape[0]; }
    int cols() const {
        if (shape.empty()) return 0;
        int64_t c = 1;
        for (size_t i = 1; i < shape.size(); ++i) c *= shape[i];
        return static_cast<int>(c);
    }

    std::string shape_str() const {
        std::string s = "(";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + ")";
    }
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(where) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
}

inline void add_inplace(Tensor& dst, const Tensor& src) {
    check_same_shape(dst, src, "add_inplace");
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

inline void scale_inplace(Tensor& t, float s) {
    for (auto& v : t.data) v *= s;
}

}  // namespace coboost
