#include "wtdiag/metrics.hpp"

#include <algorithm>
#include <functional>
#include <limits>

#include "wtdiag/error.hpp"

namespace wtdiag {

ClassificationMetrics classification_metrics(std::span<const int> predicted, std::span<const int> actual) {
    if (predicted.size() != actual.size()) throw DomainError("prediction and label counts differ");
    ClassificationMetrics m;
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (actual[i] > 0) {
            ++m.positives;
            if (predicted[i] > 0) ++tp;
        } else {
            ++m.negatives;
            if (predicted[i] > 0) ++fp;
        }
    }
    if (m.positives) m.detection = static_cast<double>(tp) / static_cast<double>(m.positives);
    if (m.negatives) m.false_alarm = static_cast<double>(fp) / static_cast<double>(m.negatives);
    return m;
}

RegressionMetrics regression_metrics(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size()) throw DomainError("prediction and label counts differ");
    if (actual.empty()) throw DomainError("regression metrics of an empty set");
    RegressionMetrics m;
    m.count = actual.size();
    const double n = static_cast<double>(m.count);
    double ma = 0.0, mp = 0.0;
    for (std::size_t i = 0; i < m.count; ++i) ma += actual[i], mp += predicted[i];
    ma /= n;
    mp /= n;
    double saa = 0.0, sap = 0.0, res = 0.0;
    for (std::size_t i = 0; i < m.count; ++i) {
        const double da = actual[i] - ma;
        saa += da * da;
        sap += da * (predicted[i] - mp);
        res += (predicted[i] - actual[i]) * (predicted[i] - actual[i]);
    }
    m.mse = res / n;
    m.slope = saa > 0.0 ? sap / saa : 0.0;
    m.intercept = mp - m.slope * ma;
    m.r2 = saa > 0.0 ? 1.0 - res / saa : (res == 0.0 ? 1.0 : 0.0);
    return m;
}

double detection_at_false_alarm(std::span<const double> scores, std::span<const int> actual, double fa) {
    if (scores.size() != actual.size()) throw DomainError("score and label counts differ");
    std::vector<double> neg, pos;
    for (std::size_t i = 0; i < scores.size(); ++i) (actual[i] > 0 ? pos : neg).push_back(scores[i]);
    if (pos.empty() || neg.empty()) throw DomainError("detection at fixed false alarm needs both classes");
    std::sort(neg.begin(), neg.end(), std::greater<>());
    const auto k = static_cast<std::size_t>(fa * static_cast<double>(neg.size()));
    const double thr = k < neg.size() ? neg[k] : -std::numeric_limits<double>::infinity();
    const auto hits = std::count_if(pos.begin(), pos.end(), [&](double s) { return s > thr; });
    return static_cast<double>(hits) / static_cast<double>(pos.size());
}

}  // namespace wtdiag
