#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace agl {

// Dense row-major matrix of doubles. Zero-column matrices are legal; they
// stand in for absent gene blocks (e.g. a model with no auxiliary head).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }

    bool empty() const { return rows == 0 || cols == 0; }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;
};

Matrix matmul(const Matrix& a, const Matrix& b);     // a(m,k) * b(k,n)
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a(k,m)^T * b(k,n)
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a(m,k) * b(n,k)^T
Matrix transpose(const Matrix& a);
std::vector<double> column_sums(const Matrix& a);

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> rows);
Matrix gather(const Matrix& src, std::span<const std::size_t> rows, std::span<const std::size_t> cols);

}  // namespace agl
