#pragma once

// Soft-margin support vector machines solved by sequential minimal
// optimization: working pairs chosen by second-order gain, kernel rows cached.

#include <cstddef>
#include <string>
#include <vector>

#include "wtdiag/standardizer.hpp"

namespace wtdiag {

enum class KernelType { linear, rbf };

std::string to_string(KernelType k);
KernelType kernel_from_string(const std::string& s);

struct SvmParams {
    KernelType kernel = KernelType::rbf;
    double c = 10.0;
    double rbf_gamma = 0.0;  // 0 selects 1 / dimension
    double epsilon = 0.01;   // regression tube half-width
    double tolerance = 1e-3;
    std::size_t max_iterations = 0;  // 0 selects max(1e7, 100 n)
    std::size_t cache_mb = 256;

    void validate() const;
};

struct SvmModel {
    KernelType kernel = KernelType::rbf;
    double gamma = 1.0;
    Matrix support;             // support vectors
    std::vector<double> coef;   // alpha_i y_i (classification) or alpha_i - alpha_i* (regression)
    double bias = 0.0;
    std::size_t iterations = 0;

    double decision(const std::vector<double>& x) const;
    bool operator==(const SvmModel&) const = default;
};

double kernel_value(KernelType k, double gamma, const std::vector<double>& a,
                    const std::vector<double>& b);

/// y in {-1, +1}; both classes required. `alpha` receives the dual variables.
SvmModel train_svc(const Matrix& x, const std::vector<int>& y, const SvmParams& p,
                   std::vector<double>* alpha = nullptr);

SvmModel train_svr(const Matrix& x, const std::vector<double>& y, const SvmParams& p);

/// Largest violation of the soft-margin KKT conditions by a trained classifier
/// given its dual variables: y f = 1 on free vectors, y f >= 1 at alpha = 0,
/// y f <= 1 at alpha = C.
double svc_kkt_violation(const SvmModel& m, const Matrix& x, const std::vector<int>& y,
                         const std::vector<double>& alpha, double c);

}  // namespace wtdiag
