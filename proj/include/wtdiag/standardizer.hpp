#pragma once

#include <vector>

namespace wtdiag {

using Matrix = std::vector<std::vector<double>>;

/// Per-column z-scoring fitted on training data only.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;      // 1 for constant columns
    std::vector<bool> constant;     // column had zero variance in training

    static Standardizer fit(const Matrix& x);
    std::size_t dimension() const { return mean.size(); }
    std::vector<double> apply(const std::vector<double>& row) const;
    Matrix apply(const Matrix& x) const;
    bool operator==(const Standardizer&) const = default;
};

}  // namespace wtdiag
