#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "bgnn/errors.hpp"

namespace bgnn::ad {

/// Dense row-major fp64 matrix. Vectors are 1xN or Nx1, scalars 1x1.
/// Values are expected to stay finite; call check_finite() at module
/// boundaries where NaN/Inf must be rejected rather than propagated.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {
        if (rows < 0 || cols < 0) throw ShapeError("negative dimension");
    }
    Tensor(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != static_cast<std::size_t>(rows) * cols)
            throw ShapeError("value count does not match shape");
    }
    static Tensor scalar(double v) { return Tensor(1, 1, {v}); }
    static Tensor row(std::initializer_list<double> v) {
        return Tensor(1, static_cast<int>(v.size()), std::vector<double>(v));
    }
    static Tensor col(std::initializer_list<double> v) {
        return Tensor(static_cast<int>(v.size()), 1, std::vector<double>(v));
    }
    static Tensor full(int rows, int cols, double v) {
        Tensor t(rows, cols);
        for (auto& x : t.data_) x = v;
        return t;
    }
    static Tensor identity(int n) {
        Tensor t(n, n);
        for (int i = 0; i < n; ++i) t(i, i) = 1.0;
        return t;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool is_scalar() const { return rows_ == 1 && cols_ == 1; }

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }

    double scalar_value() const {
        if (!is_scalar()) throw ContractError("tensor is not scalar");
        return data_[0];
    }

    void check_finite(const char* what) const {
        for (double v : data_)
            if (!std::isfinite(v)) throw NumericError(std::string(what) + " contains non-finite value");
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

} // namespace bgnn::ad
