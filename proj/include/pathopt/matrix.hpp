#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace pathopt {

/// Dense row-major matrix of doubles. Sized for the small state spaces the
/// filters work with; no expression templates.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);
    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }
    std::vector<std::vector<double>> to_rows() const;

    double sum() const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);

/// Row vector times matrix.
std::vector<double> left_multiply(std::span<const double> v, const Matrix& m);

Matrix matrix_power(const Matrix& m, std::size_t n);

/// Total-variation distance 0.5 * sum |p - q|.
double total_variation(std::span<const double> p, std::span<const double> q);

} // namespace pathopt
