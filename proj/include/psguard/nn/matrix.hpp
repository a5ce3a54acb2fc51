#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace psguard::nn {

/// Dense row-major matrix of doubles. Vectors are n x 1 matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    [[nodiscard]] std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    [[nodiscard]] std::span<double> values() { return data_; }
    [[nodiscard]] std::span<const double> values() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

namespace detail {
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
inline Eigen::Map<const RowMajor> view(const Matrix& a) {
    return {a.values().data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols())};
}
inline Eigen::Map<RowMajor> view(Matrix& a) {
    return {a.values().data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols())};
}
inline Eigen::Map<const Eigen::VectorXd> view(std::span<const double> v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}
inline Eigen::Map<Eigen::VectorXd> view(std::span<double> v) { return {v.data(), static_cast<Eigen::Index>(v.size())}; }
}  // namespace detail

/// y += A x
inline void gemv_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
    assert(x.size() == a.cols() && y.size() == a.rows());
    if (a.empty()) return;
    detail::view(y).noalias() += detail::view(a) * detail::view(x);
}

/// y += A^T x
inline void gemv_t_add(const Matrix& a, std::span<const double> x, std::span<double> y) {
    assert(x.size() == a.rows() && y.size() == a.cols());
    if (a.empty()) return;
    detail::view(y).noalias() += detail::view(a).transpose() * detail::view(x);
}

/// A += u v^T
inline void outer_add(Matrix& a, std::span<const double> u, std::span<const double> v) {
    assert(u.size() == a.rows() && v.size() == a.cols());
    if (a.empty()) return;
    detail::view(a).noalias() += detail::view(u) * detail::view(v).transpose();
}

}  // namespace psguard::nn
