#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace clifford {

// Dense row-major real tensor. The workhorse container for fields, kernels
// and autodiff values; shape arithmetic only, no math of its own.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}
    Tensor(std::vector<std::int64_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<std::int64_t>(data_.size()) != checked_numel(shape_))
            throw std::invalid_argument("Tensor: data size does not match shape");
    }

    static Tensor zeros(std::vector<std::int64_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::int64_t> shape, double v) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }

    const std::vector<std::int64_t>& shape() const { return shape_; }
    std::int64_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t rank() const { return shape_.size(); }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    template <typename... Ix>
    double& at(Ix... ix) { return data_[flat_index({static_cast<std::int64_t>(ix)...})]; }
    template <typename... Ix>
    double at(Ix... ix) const { return data_[flat_index({static_cast<std::int64_t>(ix)...})]; }

    std::int64_t flat_index(std::initializer_list<std::int64_t> idx) const {
        if (idx.size() != shape_.size()) throw std::invalid_argument("Tensor: index rank mismatch");
        std::int64_t flat = 0;
        std::size_t d = 0;
        for (std::int64_t i : idx) {
            flat = flat * shape_[d] + i;
            ++d;
        }
        return flat;
    }

    Tensor reshaped(std::vector<std::int64_t> new_shape) const {
        if (checked_numel(new_shape) != numel())
            throw std::invalid_argument("Tensor: reshape changes element count");
        return Tensor(std::move(new_shape), data_);
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    Tensor& operator+=(const Tensor& o) {
        require_same_shape(o, "+=");
        for (std::int64_t i = 0; i < numel(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Tensor& operator-=(const Tensor& o) {
        require_same_shape(o, "-=");
        for (std::int64_t i = 0; i < numel(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Tensor& operator*=(double s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
    friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
    friend Tensor operator*(Tensor a, double s) { return a *= s; }
    friend Tensor operator*(double s, Tensor a) { return a *= s; }

    static std::int64_t checked_numel(const std::vector<std::int64_t>& shape) {
        std::int64_t n = 1;
        for (auto d : shape) {
            if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
            n *= d;
        }
        return n;
    }

private:
    void require_same_shape(const Tensor& o, const char* op) const {
        if (!same_shape(o)) throw std::invalid_argument(std::string("Tensor: shape mismatch in ") + op);
    }

    std::vector<std::int64_t> shape_;
    std::vector<double> data_;
};

inline double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
    return s;
}

inline double max_abs(const Tensor& a) {
    double m = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i]));
    return m;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double rel_l2_diff(const Tensor& a, const Tensor& b) {
    double num = 0.0, den = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        const double d = a[i] - b[i];
        num += d * d;
        den += b[i] * b[i];
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace clifford
