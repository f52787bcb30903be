#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wtdiag {

struct ClassificationMetrics {
    double detection = 0.0;    // true-positive rate
    double false_alarm = 0.0;  // false-positive rate
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

struct RegressionMetrics {
    double mse = 0.0;
    double slope = 0.0;      // least-squares fit of predicted on actual
    double intercept = 0.0;
    double r2 = 0.0;         // 1 - SS_res / SS_tot of predicted against actual
    std::size_t count = 0;
};

ClassificationMetrics classification_metrics(std::span<const int> predicted, std::span<const int> actual);
RegressionMetrics regression_metrics(std::span<const double> predicted, std::span<const double> actual);

/// Detection rate at the score threshold that yields at most `fa` false alarms.
double detection_at_false_alarm(std::span<const double> scores, std::span<const int> actual, double fa);

}  // namespace wtdiag
