#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wsnet {

// Thrown when inputs violate a documented precondition (bad geometry,
// malformed config/file contents). Maps to CLI exit code 2.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a run fails after validation (e.g. training divergence).
// Maps to CLI exit code 3.
struct runtime_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense row-major matrix of doubles. Feature maps are (T, channels),
// condensed filters are (condensed_len, condensed_channels).
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {}

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    size_t size() const { return data.size(); }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

// (d0, d1, d2) tensor, d2 contiguous. Filter banks are (L, M, N) with the
// filter index innermost so per-position updates vectorize over filters.
struct Tensor3 {
    int d0 = 0, d1 = 0, d2 = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(int a, int b, int c, double fill = 0.0)
        : d0(a), d1(b), d2(c),
          data(static_cast<size_t>(a) * static_cast<size_t>(b) * static_cast<size_t>(c), fill) {}

    double& at(int i, int j, int k) {
        return data[(static_cast<size_t>(i) * d1 + j) * d2 + k];
    }
    double at(int i, int j, int k) const {
        return data[(static_cast<size_t>(i) * d1 + j) * d2 + k];
    }
    double* ptr(int i, int j) { return data.data() + (static_cast<size_t>(i) * d1 + j) * d2; }
    const double* ptr(int i, int j) const {
        return data.data() + (static_cast<size_t>(i) * d1 + j) * d2;
    }
    size_t size() const { return data.size(); }
};

// A 1D activation map: rows = spatial positions, cols = channels.
using FeatureMap = Matrix;

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw validation_error(msg);
}

} // namespace wsnet
