#include "pathopt/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace pathopt {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_)
            throw std::invalid_argument("ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows)
{
    Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols())
            throw std::invalid_argument("ragged matrix: row " + std::to_string(i) + " has "
                                        + std::to_string(rows[i].size()) + " entries, expected "
                                        + std::to_string(m.cols()));
        for (std::size_t j = 0; j < m.cols(); ++j)
            m(i, j) = rows[i][j];
    }
    return m;
}

Matrix Matrix::identity(std::size_t n)
{
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

std::vector<std::vector<double>> Matrix::to_rows() const
{
    std::vector<std::vector<double>> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        out[i].assign(row(i).begin(), row(i).end());
    return out;
}

double Matrix::sum() const
{
    double s = 0.0;
    for (double v : data_)
        s += v;
    return s;
}

Matrix operator*(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.rows())
        throw std::invalid_argument("matrix product: dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0)
                continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                c(i, j) += aik * b(k, j);
        }
    return c;
}

std::vector<double> left_multiply(std::span<const double> v, const Matrix& m)
{
    if (v.size() != m.rows())
        throw std::invalid_argument("vector-matrix product: dimension mismatch");
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (v[i] == 0.0)
            continue;
        for (std::size_t j = 0; j < m.cols(); ++j)
            out[j] += v[i] * m(i, j);
    }
    return out;
}

Matrix matrix_power(const Matrix& m, std::size_t n)
{
    Matrix result = Matrix::identity(m.rows());
    Matrix base = m;
    while (n > 0) {
        if (n & 1)
            result = result * base;
        n >>= 1;
        if (n)
            base = base * base;
    }
    return result;
}

double total_variation(std::span<const double> p, std::span<const double> q)
{
    if (p.size() != q.size())
        throw std::invalid_argument("total_variation: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

} // namespace pathopt
