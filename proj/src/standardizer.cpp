#include "wtdiag/standardizer.hpp"

#include <algorithm>
#include <cmath>

#include "wtdiag/error.hpp"

namespace wtdiag {

Standardizer Standardizer::fit(const Matrix& x) {
    if (x.empty()) throw DomainError("cannot fit a standardizer on zero rows");
    const std::size_t d = x.front().size();
    const double n = static_cast<double>(x.size());
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    s.constant.assign(d, false);
    for (const auto& row : x) {
        if (row.size() != d) throw DomainError("ragged feature matrix");
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
    }
    for (auto& m : s.mean) m /= n;
    std::vector<double> var(d, 0.0);
    for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j) var[j] += (row[j] - s.mean[j]) * (row[j] - s.mean[j]);
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(var[j] / n);
        if (sd > 1e-12 * std::max(1.0, std::abs(s.mean[j]))) {
            s.scale[j] = sd;
        } else {
            s.constant[j] = true;
        }
    }
    return s;
}

std::vector<double> Standardizer::apply(const std::vector<double>& row) const {
    if (row.size() != mean.size())
        throw DomainError("feature vector has " + std::to_string(row.size()) + " entries, expected " +
                          std::to_string(mean.size()));
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j)
        out[j] = constant[j] ? 0.0 : (row[j] - mean[j]) / scale[j];
    return out;
}

Matrix Standardizer::apply(const Matrix& x) const {
    Matrix out;
    out.reserve(x.size());
    for (const auto& row : x) out.push_back(apply(row));
    return out;
}

}  // namespace wtdiag
