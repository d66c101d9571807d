#pragma once

#include <cstddef>
#include <vector>

namespace lesets {

/// Dense row-major matrix of doubles. Vectors are 1 x n or n x 1.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return v.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline Matrix row_vector(const std::vector<double>& x) {
    Matrix m(1, static_cast<int>(x.size()));
    m.v = x;
    return m;
}

} // namespace lesets
