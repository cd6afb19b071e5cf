#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tdval {

/// Non-owning row-major matrix.
struct MatrixView {
    std::span<const double> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
};

/// Owning row-major matrix.
struct DenseMatrix {
    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t cols = 0;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : values(r * c, fill), rows(r), cols(c) {}
    DenseMatrix(std::vector<double> v, std::size_t r, std::size_t c)
        : values(std::move(v)), rows(r), cols(c) {}

    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(values).subspan(r * cols, cols);
    }
    MatrixView view() const { return {values, rows, cols}; }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;
};

}  // namespace tdval
