#include "wtdiag/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "wtdiag/error.hpp"

namespace wtdiag {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// LRU cache of kernel rows over the n base points.
class KernelCache {
public:
    KernelCache(const Matrix& x, KernelType kernel, double gamma, std::size_t budget_mb)
        : x_(x), kernel_(kernel), gamma_(gamma) {
        const std::size_t row_bytes = std::max<std::size_t>(1, x.size() * sizeof(double));
        capacity_ = std::max<std::size_t>(2, budget_mb * 1024 * 1024 / row_bytes);
        diag_.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) diag_[i] = kernel_value(kernel, gamma, x[i], x[i]);
    }

    const std::vector<double>& row(std::size_t i) {
        auto it = index_.find(i);
        if (it != index_.end()) {
            order_.splice(order_.begin(), order_, it->second);
            return it->second->second;
        }
        if (index_.size() >= capacity_) {
            index_.erase(order_.back().first);
            order_.pop_back();
        }
        std::vector<double> r(x_.size());
        for (std::size_t j = 0; j < x_.size(); ++j) r[j] = kernel_value(kernel_, gamma_, x_[i], x_[j]);
        order_.emplace_front(i, std::move(r));
        index_[i] = order_.begin();
        return order_.front().second;
    }

    double diag(std::size_t i) const { return diag_[i]; }

private:
    const Matrix& x_;
    KernelType kernel_;
    double gamma_;
    std::size_t capacity_;
    std::vector<double> diag_;
    std::list<std::pair<std::size_t, std::vector<double>>> order_;
    std::unordered_map<std::size_t, decltype(order_)::iterator> index_;
};

// min 1/2 a'Qa + p'a  s.t. y'a = 0, 0 <= a <= C, with Q_ij = y_i y_j K(b_i, b_j)
// and b_i the base point of variable i.
struct DualProblem {
    std::vector<double> p;
    std::vector<int> y;
    std::vector<std::size_t> base;
};

struct DualSolution {
    std::vector<double> alpha;
    double rho = 0.0;
    std::size_t iterations = 0;
};

DualSolution solve_dual(const DualProblem& prob, KernelCache& cache, double c, double eps,
                        std::size_t max_iter) {
    const std::size_t l = prob.p.size();
    const auto& y = prob.y;
    std::vector<double> alpha(l, 0.0);
    std::vector<double> g = prob.p;
    auto upper = [&](std::size_t t) { return alpha[t] >= c; };
    auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
    auto qd = [&](std::size_t t) { return cache.diag(prob.base[t]); };

    std::size_t iter = 0;
    for (; iter < max_iter; ++iter) {
        double gmax = -kInf;
        std::size_t i = l;
        for (std::size_t t = 0; t < l; ++t) {
            if (y[t] == +1) {
                if (!upper(t) && -g[t] >= gmax) gmax = -g[t], i = t;
            } else {
                if (!lower(t) && g[t] >= gmax) gmax = g[t], i = t;
            }
        }
        if (i == l) break;
        const auto& ki = cache.row(prob.base[i]);
        double gmax2 = -kInf;
        double best = kInf;
        std::size_t j = l;
        for (std::size_t t = 0; t < l; ++t) {
            const double kit = ki[prob.base[t]];
            if (y[t] == +1) {
                if (lower(t)) continue;
                const double diff = gmax + g[t];
                gmax2 = std::max(gmax2, g[t]);
                if (diff > 0.0) {
                    double quad = qd(i) + qd(t) - 2.0 * kit;
                    if (quad <= 0.0) quad = kTau;
                    const double obj = -diff * diff / quad;
                    if (obj <= best) best = obj, j = t;
                }
            } else {
                if (upper(t)) continue;
                const double diff = gmax - g[t];
                gmax2 = std::max(gmax2, -g[t]);
                if (diff > 0.0) {
                    double quad = qd(i) + qd(t) - 2.0 * kit;
                    if (quad <= 0.0) quad = kTau;
                    const double obj = -diff * diff / quad;
                    if (obj <= best) best = obj, j = t;
                }
            }
        }
        if (gmax + gmax2 < eps || j == l) break;

        const double qij = y[i] * y[j] * ki[prob.base[j]];
        const double old_i = alpha[i], old_j = alpha[j];
        if (y[i] != y[j]) {
            double quad = qd(i) + qd(j) + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-g[i] - g[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) alpha[j] = 0.0, alpha[i] = diff;
            } else {
                if (alpha[i] < 0.0) alpha[i] = 0.0, alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > c) alpha[i] = c, alpha[j] = c - diff;
            } else {
                if (alpha[j] > c) alpha[j] = c, alpha[i] = c + diff;
            }
        } else {
            double quad = qd(i) + qd(j) - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (g[i] - g[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) alpha[i] = c, alpha[j] = sum - c;
                if (alpha[j] > c) alpha[j] = c, alpha[i] = sum - c;
            } else {
                if (alpha[j] < 0.0) alpha[j] = 0.0, alpha[i] = sum;
                if (alpha[i] < 0.0) alpha[i] = 0.0, alpha[j] = sum;
            }
        }
        const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
        const auto& ri = cache.row(prob.base[i]);
        const auto& rj = cache.row(prob.base[j]);
        for (std::size_t t = 0; t < l; ++t)
            g[t] += y[t] * (y[i] * ri[prob.base[t]] * di + y[j] * rj[prob.base[t]] * dj);
    }
    if (iter >= max_iter)
        throw DomainError("SMO did not reach the KKT tolerance within " + std::to_string(max_iter) +
                          " iterations");

    double ub = kInf, lb = -kInf, sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < l; ++t) {
        const double yg = y[t] * g[t];
        if (upper(t)) {
            if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (y[t] == +1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    DualSolution s;
    s.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
    s.alpha = std::move(alpha);
    s.iterations = iter;
    return s;
}

void check_matrix(const Matrix& x, std::size_t n_targets) {
    if (x.size() < 2) throw DomainError("SVM training needs at least 2 samples");
    if (x.size() != n_targets) throw DomainError("feature matrix and targets differ in length");
    const std::size_t d = x.front().size();
    for (const auto& r : x)
        if (r.size() != d) throw DomainError("ragged feature matrix");
}

double resolve_gamma(const SvmParams& p, std::size_t dim) {
    return p.rbf_gamma > 0.0 ? p.rbf_gamma : 1.0 / static_cast<double>(std::max<std::size_t>(dim, 1));
}

std::size_t resolve_iter(const SvmParams& p, std::size_t n) {
    return p.max_iterations > 0 ? p.max_iterations : std::max<std::size_t>(10'000'000, 100 * n);
}

}  // namespace

std::string to_string(KernelType k) { return k == KernelType::linear ? "linear" : "rbf"; }

KernelType kernel_from_string(const std::string& s) {
    if (s == "linear") return KernelType::linear;
    if (s == "rbf") return KernelType::rbf;
    throw ValidationError("unknown kernel '" + s + "' (expected linear, rbf)");
}

void SvmParams::validate() const {
    if (!(c > 0.0)) throw ValidationError("svm.c must be positive");
    if (!(rbf_gamma >= 0.0)) throw ValidationError("svm.rbf_gamma must be non-negative");
    if (!(epsilon >= 0.0)) throw ValidationError("svm.epsilon must be non-negative");
    if (!(tolerance > 0.0)) throw ValidationError("svm.tolerance must be positive");
}

double kernel_value(KernelType k, double gamma, const std::vector<double>& a,
                    const std::vector<double>& b) {
    double acc = 0.0;
    if (k == KernelType::linear) {
        for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
        return acc;
    }
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::exp(-gamma * acc);
}

double SvmModel::decision(const std::vector<double>& x) const {
    double f = bias;
    for (std::size_t i = 0; i < support.size(); ++i) f += coef[i] * kernel_value(kernel, gamma, support[i], x);
    return f;
}

SvmModel train_svc(const Matrix& x, const std::vector<int>& y, const SvmParams& p,
                   std::vector<double>* alpha_out) {
    p.validate();
    check_matrix(x, y.size());
    bool pos = false, neg = false;
    for (int v : y) {
        if (v == 1) pos = true;
        else if (v == -1) neg = true;
        else throw DomainError("classification labels must be -1 or +1");
    }
    if (!pos || !neg) throw DomainError("SVM classification needs both classes in the training set");

    const double gamma = resolve_gamma(p, x.front().size());
    KernelCache cache(x, p.kernel, gamma, p.cache_mb);
    DualProblem prob;
    prob.p.assign(x.size(), -1.0);
    prob.y = y;
    prob.base.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) prob.base[i] = i;
    const auto sol = solve_dual(prob, cache, p.c, p.tolerance, resolve_iter(p, x.size()));

    SvmModel m;
    m.kernel = p.kernel;
    m.gamma = gamma;
    m.bias = -sol.rho;
    m.iterations = sol.iterations;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (sol.alpha[i] > 0.0) {
            m.support.push_back(x[i]);
            m.coef.push_back(sol.alpha[i] * y[i]);
        }
    }
    if (alpha_out) *alpha_out = sol.alpha;
    return m;
}

SvmModel train_svr(const Matrix& x, const std::vector<double>& y, const SvmParams& p) {
    p.validate();
    check_matrix(x, y.size());
    const std::size_t n = x.size();
    const double gamma = resolve_gamma(p, x.front().size());
    KernelCache cache(x, p.kernel, gamma, p.cache_mb);
    DualProblem prob;
    prob.p.resize(2 * n);
    prob.y.resize(2 * n);
    prob.base.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        prob.p[i] = p.epsilon - y[i];
        prob.y[i] = +1;
        prob.base[i] = i;
        prob.p[i + n] = p.epsilon + y[i];
        prob.y[i + n] = -1;
        prob.base[i + n] = i;
    }
    const auto sol = solve_dual(prob, cache, p.c, p.tolerance, resolve_iter(p, 2 * n));

    SvmModel m;
    m.kernel = p.kernel;
    m.gamma = gamma;
    m.bias = -sol.rho;
    m.iterations = sol.iterations;
    for (std::size_t i = 0; i < n; ++i) {
        const double beta = sol.alpha[i] - sol.alpha[i + n];
        if (beta != 0.0) {
            m.support.push_back(x[i]);
            m.coef.push_back(beta);
        }
    }
    return m;
}

double svc_kkt_violation(const SvmModel& m, const Matrix& x, const std::vector<int>& y,
                         const std::vector<double>& alpha, double c) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double yf = y[i] * m.decision(x[i]);
        double v = 0.0;
        if (alpha[i] <= 0.0) v = std::max(0.0, 1.0 - yf);
        else if (alpha[i] >= c) v = std::max(0.0, yf - 1.0);
        else v = std::abs(yf - 1.0);
        worst = std::max(worst, v);
    }
    return worst;
}

}  // namespace wtdiag
