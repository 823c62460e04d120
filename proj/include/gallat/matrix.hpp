#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace gallat {

/// Dense row-major matrix of doubles. Vectors are n x 1 (column) or
/// 1 x n (row) matrices; there is no separate vector type.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    std::string shape_str() const;
    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    void fill(double v);
    bool all_finite() const;
    double max_abs() const;

    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols, 0.0); }
    static Matrix ones(std::size_t rows, std::size_t cols) { return Matrix(rows, cols, 1.0); }
    static Matrix identity(std::size_t n);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Plain (non-differentiating) kernels shared by the graph ops and a few
// value-only callers. All throw DimensionError on shape mismatch.
Matrix matmul_values(const Matrix& a, const Matrix& b);
Matrix transpose_values(const Matrix& a);
Matrix add_values(const Matrix& a, const Matrix& b);
Matrix hadamard_values(const Matrix& a, const Matrix& b);

} // namespace gallat
