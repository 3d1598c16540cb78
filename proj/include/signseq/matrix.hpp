#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace signseq {

/// Dense row-major sample matrix, one sample per row.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
    std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
};

}  // namespace signseq
