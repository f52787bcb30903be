#include "wtdiag/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wtdiag/error.hpp"

namespace wtdiag {

namespace {

constexpr double kMinError = 1e-10;

void check_rows(const Matrix& x, std::size_t n_targets) {
    if (x.empty()) throw DomainError("boosting needs at least one sample");
    if (x.size() != n_targets) throw DomainError("feature matrix and targets differ in length");
    const std::size_t d = x.front().size();
    for (const auto& r : x)
        if (r.size() != d) throw DomainError("ragged feature matrix");
}

std::vector<std::size_t> order_by(const Matrix& x, std::vector<std::size_t> idx, std::size_t f) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
    return idx;
}

struct BestStump {
    Stump stump;
    double error = 1.0;
};

BestStump best_stump(const Matrix& x, const std::vector<int>& y, const std::vector<double>& w,
                     const std::vector<std::vector<std::size_t>>& sorted) {
    BestStump best;
    double neg_weight = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] < 0) neg_weight += w[i];
    const std::size_t d = sorted.size();
    for (std::size_t f = 0; f < d; ++f) {
        const auto& ord = sorted[f];
        // Threshold below every value: polarity +1 predicts +1 everywhere.
        double err = neg_weight;
        auto consider = [&](double e, double thr) {
            e = std::clamp(e, 0.0, 1.0);
            if (e < best.error) best = {{f, thr, 1}, e};
            if (1.0 - e < best.error) best = {{f, thr, -1}, 1.0 - e};
        };
        consider(err, x[ord.front()][f] - 1.0);
        for (std::size_t k = 0; k < ord.size(); ++k) {
            const std::size_t i = ord[k];
            err += y[i] > 0 ? w[i] : -w[i];
            if (k + 1 < ord.size() && x[ord[k + 1]][f] == x[i][f]) continue;
            const double thr = k + 1 < ord.size() ? 0.5 * (x[i][f] + x[ord[k + 1]][f]) : x[i][f] + 1.0;
            consider(err, thr);
        }
    }
    return best;
}

struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

int build_node(RegressionTree& tree, const Matrix& x, const std::vector<double>& y,
               const std::vector<std::size_t>& idx, std::size_t depth, std::size_t min_leaf) {
    double sum = 0.0;
    for (auto i : idx) sum += y[i];
    const double n = static_cast<double>(idx.size());
    const double mean = sum / n;
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({-1, 0.0, -1, -1, mean});
    if (depth == 0 || idx.size() < 2 * min_leaf) return id;

    Split best;
    const double parent = sum * sum / n;
    const std::size_t d = x.front().size();
    for (std::size_t f = 0; f < d; ++f) {
        const auto ord = order_by(x, idx, f);
        double left = 0.0;
        for (std::size_t k = 0; k + 1 < ord.size(); ++k) {
            left += y[ord[k]];
            const std::size_t nl = k + 1, nr = ord.size() - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double a = x[ord[k]][f], b = x[ord[k + 1]][f];
            if (a == b) continue;
            const double right = sum - left;
            const double gain = left * left / static_cast<double>(nl) +
                                right * right / static_cast<double>(nr) - parent;
            if (gain > best.gain + 1e-12 * std::abs(parent) || (!best.found && gain > 0.0)) {
                best = {true, f, 0.5 * (a + b), gain};
            }
        }
    }
    if (!best.found) return id;

    std::vector<std::size_t> li, ri;
    for (auto i : idx) (x[i][best.feature] <= best.threshold ? li : ri).push_back(i);
    const int l = build_node(tree, x, y, li, depth - 1, min_leaf);
    const int r = build_node(tree, x, y, ri, depth - 1, min_leaf);
    tree.nodes[id].feature = static_cast<int>(best.feature);
    tree.nodes[id].threshold = best.threshold;
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
}

double mse(const std::vector<double>& y, const std::vector<double>& f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += (y[i] - f[i]) * (y[i] - f[i]);
    return acc / static_cast<double>(y.size());
}

}  // namespace

void AdaBoostParams::validate() const {
    if (rounds == 0) throw ValidationError("adaboost.rounds must be positive");
}

double AdaBoostModel::decision(const std::vector<double>& x) const {
    double f = 0.0;
    for (std::size_t t = 0; t < stumps.size(); ++t) f += weights[t] * stumps[t].predict(x);
    return f;
}

AdaBoostModel train_adaboost(const Matrix& x, const std::vector<int>& y, const AdaBoostParams& p) {
    p.validate();
    check_rows(x, y.size());
    bool pos = false, neg = false;
    for (int v : y) {
        if (v == 1) pos = true;
        else if (v == -1) neg = true;
        else throw DomainError("classification labels must be -1 or +1");
    }
    if (!pos || !neg) throw DomainError("AdaBoost needs both classes in the training set");

    const std::size_t n = x.size(), d = x.front().size();
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::vector<std::vector<std::size_t>> sorted(d);
    for (std::size_t f = 0; f < d; ++f) sorted[f] = order_by(x, all, f);

    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    AdaBoostModel m;
    double bound = 1.0;
    for (std::size_t t = 0; t < p.rounds; ++t) {
        const auto best = best_stump(x, y, w, sorted);
        if (best.error >= 0.5) break;
        const double e = std::max(best.error, kMinError);
        const double alpha = 0.5 * std::log((1.0 - e) / e);
        bound *= 2.0 * std::sqrt(best.error * (1.0 - best.error));
        m.stumps.push_back(best.stump);
        m.weights.push_back(alpha);
        m.errors.push_back(best.error);
        m.bound.push_back(bound);
        if (best.error <= 0.0) break;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] *= std::exp(-alpha * y[i] * best.stump.predict(x[i]));
            total += w[i];
        }
        for (auto& wi : w) wi /= total;
    }
    return m;
}

double RegressionTree::predict(const std::vector<double>& x) const {
    int k = 0;
    while (nodes[k].feature >= 0) k = x[nodes[k].feature] <= nodes[k].threshold ? nodes[k].left : nodes[k].right;
    return nodes[k].value;
}

RegressionTree fit_tree(const Matrix& x, const std::vector<double>& y, std::size_t depth,
                        std::size_t min_leaf) {
    check_rows(x, y.size());
    RegressionTree t;
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    build_node(t, x, y, idx, depth, std::max<std::size_t>(min_leaf, 1));
    return t;
}

void L2BoostParams::validate() const {
    if (stages == 0) throw ValidationError("l2boost.stages must be positive");
    if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw ValidationError("l2boost.shrinkage must lie in (0,1]");
    if (depth == 0) throw ValidationError("l2boost.depth must be positive");
    if (min_leaf == 0) throw ValidationError("l2boost.min_leaf must be positive");
}

double L2BoostModel::predict(const std::vector<double>& x) const {
    double f = base;
    for (const auto& t : trees) f += shrinkage * t.predict(x);
    return f;
}

L2BoostModel train_l2boost(const Matrix& x, const std::vector<double>& y, const L2BoostParams& p) {
    p.validate();
    check_rows(x, y.size());
    const std::size_t n = x.size();
    L2BoostModel m;
    m.shrinkage = p.shrinkage;
    m.base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    std::vector<double> f(n, m.base), r(n);
    m.train_mse.push_back(mse(y, f));
    for (std::size_t s = 0; s < p.stages; ++s) {
        for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - f[i];
        auto tree = fit_tree(x, r, p.depth, p.min_leaf);
        for (std::size_t i = 0; i < n; ++i) f[i] += p.shrinkage * tree.predict(x[i]);
        m.trees.push_back(std::move(tree));
        m.train_mse.push_back(mse(y, f));
    }
    return m;
}

}  // namespace wtdiag
