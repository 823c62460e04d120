#include "gallat/matrix.hpp"

#include <cmath>
#include <cstdlib>

#include "gallat/errors.hpp"

namespace gallat {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                             " does not match " + shape_str());
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw DimensionError("Matrix: ragged initializer rows");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

std::string Matrix::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void Matrix::fill(double v) {
    for (double& x : data_) x = v;
}

bool Matrix::all_finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::fabs(x));
    return m;
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix matmul_values(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: " + a.shape_str() + " by " + b.shape_str());
    }
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    Matrix out(n, m, 0.0);
    // i-k-j order keeps the inner loop contiguous over b and out.
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            if (aik == 0.0) continue;
            const double* brow = b.row(kk);
            for (std::size_t j = 0; j < m; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

Matrix transpose_values(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out(j, i) = a(i, j);
        }
    }
    return out;
}

Matrix add_values(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("add: " + a.shape_str() + " vs " + b.shape_str());
    }
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

Matrix hadamard_values(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("mul: " + a.shape_str() + " vs " + b.shape_str());
    }
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
    return out;
}

} // namespace gallat
