#include "agl/matrix.hpp"

#include <cmath>

#include "agl/errors.hpp"

namespace agl {

bool Matrix::all_finite() const {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw ConfigError("matmul: inner dimensions do not match");
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.v.data() + i * a.cols;
        double* orow = out.v.data() + i * out.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.v.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw ConfigError("matmul_tn: leading dimensions do not match");
    Matrix out(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.v.data() + k * a.cols;
        const double* brow = b.v.data() + k * b.cols;
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            double* orow = out.v.data() + i * out.cols;
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw ConfigError("matmul_nt: trailing dimensions do not match");
    Matrix out(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.v.data() + i * a.cols;
        double* orow = out.v.data() + i * out.cols;
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.v.data() + j * b.cols;
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            orow[j] = s;
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

std::vector<double> column_sums(const Matrix& a) {
    std::vector<double> s(a.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.v.data() + i * a.cols;
        for (std::size_t j = 0; j < a.cols; ++j) s[j] += arow[j];
    }
    return s;
}

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), src.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= src.rows) throw ConfigError("gather_rows: row index out of range");
        const double* from = src.v.data() + rows[i] * src.cols;
        double* to = out.v.data() + i * out.cols;
        for (std::size_t j = 0; j < src.cols; ++j) to[j] = from[j];
    }
    return out;
}

Matrix gather(const Matrix& src, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
    Matrix out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= src.rows) throw ConfigError("gather: row index out of range");
        const double* from = src.v.data() + rows[i] * src.cols;
        double* to = out.v.data() + i * out.cols;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (cols[j] >= src.cols) throw ConfigError("gather: column index out of range");
            to[j] = from[cols[j]];
        }
    }
    return out;
}

}  // namespace agl
