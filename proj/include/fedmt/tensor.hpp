#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "fedmt/errors.hpp"

namespace fedmt {

// Dense row-major float32 tensor. dims is non-empty, every dim >= 1 and
// data.size() == product(dims) at all times.
class Tensor {
  public:
    Tensor() : dims_{1}, data_(1, 0.0f) {}

    explicit Tensor(std::vector<uint32_t> dims, float fill = 0.0f)
        : dims_(std::move(dims)) {
        check_dims(dims_);
        data_.assign(numel(dims_), fill);
    }

    Tensor(std::vector<uint32_t> dims, std::vector<float> data)
        : dims_(std::move(dims)), data_(std::move(data)) {
        check_dims(dims_);
        if (data_.size() != numel(dims_)) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match dims product " +
                             std::to_string(numel(dims_)));
        }
    }

    static Tensor scalar(float v) { return Tensor({1}, {v}); }

    const std::vector<uint32_t>& dims() const { return dims_; }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return dims_.size(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& vec() { return data_; }
    const std::vector<float>& vec() const { return data_; }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }

    bool operator==(const Tensor& other) const {
        return dims_ == other.dims_ && data_ == other.data_;
    }

    std::string dims_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(dims_[i]);
        }
        return s + "]";
    }

    static std::size_t numel(const std::vector<uint32_t>& dims) {
        std::size_t n = 1;
        for (uint32_t d : dims) n *= d;
        return n;
    }

  private:
    static void check_dims(const std::vector<uint32_t>& dims) {
        if (dims.empty()) throw ShapeError("tensor dims must be non-empty");
        for (uint32_t d : dims) {
            if (d == 0) throw ShapeError("tensor dims must all be >= 1");
        }
    }

    std::vector<uint32_t> dims_;
    std::vector<float> data_;
};

}  // namespace fedmt
