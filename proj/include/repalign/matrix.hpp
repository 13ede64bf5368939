#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "repalign/errors.hpp"

namespace repalign {

// Dense row-major matrix of 64-bit floats. Values are immutable in spirit:
// operations return fresh matrices, mutation is limited to construction and
// training code that owns its parameters.
class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
        check_dims(rows, cols);
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        check_dims(rows, cols);
        if (data_.size() != rows_ * cols_)
            throw dim_error("Matrix: data length " + std::to_string(data_.size()) +
                            " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    static void check_dims(std::size_t rows, std::size_t cols) {
        if (rows == 0 || cols == 0)
            throw dim_error("Matrix: rows and cols must be >= 1");
    }

    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw dim_error("matmul: " + a.shape_str() + " * " + b.shape_str());
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

// C = A^T * B
inline Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw dim_error("matmul_at_b: " + a.shape_str() + " vs " + b.shape_str());
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* ak = a.row_ptr(k);
        const double* bk = b.row_ptr(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* ci = c.row_ptr(i);
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

// C = A * B^T
inline Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw dim_error("matmul_a_bt: " + a.shape_str() + " vs " + b.shape_str());
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row_ptr(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* bj = b.row_ptr(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
            c(i, j) = s;
        }
    }
    return c;
}

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::fabs(v));
    return m;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

inline double row_norm(const Matrix& a, std::size_t r) {
    const double* p = a.row_ptr(r);
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += p[j] * p[j];
    return std::sqrt(s);
}

inline double row_dot(const Matrix& a, std::size_t ra, const Matrix& b, std::size_t rb) {
    const double* pa = a.row_ptr(ra);
    const double* pb = b.row_ptr(rb);
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += pa[j] * pb[j];
    return s;
}

// Subtracts the per-column mean; returns the centered matrix and the means.
inline std::pair<Matrix, std::vector<double>> center_columns(const Matrix& m) {
    std::vector<double> mean(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* p = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols(); ++j) mean[j] += p[j];
    }
    for (double& v : mean) v /= static_cast<double>(m.rows());
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) - mean[j];
    return {std::move(out), std::move(mean)};
}

// Rows of `m` listed in `rows`, in that order.
inline Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    if (rows.empty()) throw dim_error("take_rows: empty row selection");
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= m.rows())
            throw value_error("take_rows: row index " + std::to_string(rows[i]) +
                              " out of range for " + m.shape_str());
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(rows[i], j);
    }
    return out;
}

}  // namespace repalign
