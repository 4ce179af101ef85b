#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fedoui/errors.hpp"

namespace fedoui {

// Dense n-dimensional array of doubles, row-major.
class Tensor {
  public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(count_(shape_), fill) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count_(shape_) != data_.size())
            throw input_error("tensor: shape product " + std::to_string(count_(shape_)) +
                              " does not match data length " + std::to_string(data_.size()));
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // 2-d accessors (rows x cols)
    double& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    Tensor& operator+=(const Tensor& o) {
        check_shape_(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Tensor& operator-=(const Tensor& o) {
        check_shape_(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Tensor& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }
    // this += s * o
    Tensor& axpy(double s, const Tensor& o) {
        check_shape_(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
        return *this;
    }

    friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
    friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
    friend Tensor operator*(double s, Tensor a) { return a *= s; }

    bool operator==(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

  private:
    static std::size_t count_(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }
    void check_shape_(const Tensor& o) const {
        if (shape_ != o.shape_) throw input_error("tensor: shape mismatch in arithmetic");
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Ordered, named collection of parameter tensors.  Closed under add,
// subtract and scale so client deltas and momentum buffers can be
// manipulated as vectors.
class ModelParams {
  public:
    struct Entry {
        std::string name;
        Tensor tensor;
    };

    ModelParams() = default;

    void add_layer(std::string name, Tensor t) { entries_.push_back({std::move(name), std::move(t)}); }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    Entry& operator[](std::size_t i) { return entries_[i]; }
    const Entry& operator[](std::size_t i) const { return entries_[i]; }

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    bool same_shapes(const ModelParams& o) const {
        if (entries_.size() != o.entries_.size()) return false;
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (!entries_[i].tensor.same_shape(o.entries_[i].tensor)) return false;
        return true;
    }

    ModelParams& operator+=(const ModelParams& o) {
        check_shapes_(o);
        for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].tensor += o.entries_[i].tensor;
        return *this;
    }
    ModelParams& operator-=(const ModelParams& o) {
        check_shapes_(o);
        for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].tensor -= o.entries_[i].tensor;
        return *this;
    }
    ModelParams& operator*=(double s) {
        for (auto& e : entries_) e.tensor *= s;
        return *this;
    }
    ModelParams& axpy(double s, const ModelParams& o) {
        check_shapes_(o);
        for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].tensor.axpy(s, o.entries_[i].tensor);
        return *this;
    }

    friend ModelParams operator+(ModelParams a, const ModelParams& b) { return a += b; }
    friend ModelParams operator-(ModelParams a, const ModelParams& b) { return a -= b; }
    friend ModelParams operator*(double s, ModelParams a) { return a *= s; }

    bool operator==(const ModelParams& o) const {
        if (entries_.size() != o.entries_.size()) return false;
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (entries_[i].name != o.entries_[i].name || !(entries_[i].tensor == o.entries_[i].tensor))
                return false;
        return true;
    }

    // zero-filled copy with the same layout
    ModelParams zeros_like() const {
        ModelParams z;
        for (const auto& e : entries_) z.add_layer(e.name, Tensor(e.tensor.shape()));
        return z;
    }

    double dot(const ModelParams& o) const {
        check_shapes_(o);
        double s = 0.0;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const auto& a = entries_[i].tensor.values();
            const auto& b = o.entries_[i].tensor.values();
            for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
        }
        return s;
    }

    double norm2() const { return std::sqrt(dot(*this)); }

    std::size_t total_values() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.tensor.size();
        return n;
    }

  private:
    void check_shapes_(const ModelParams& o) const {
        if (!same_shapes(o)) throw input_error("model params: layer shapes do not match");
    }

    std::vector<Entry> entries_;
};

}  // namespace fedoui
