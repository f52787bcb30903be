#pragma once

// Independent reference implementations used as test oracles.

#include <cmath>
#include <complex>
#include <algorithm>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "wtdiag/netmodel.hpp"

namespace oracle {

using wtdiag::Complex;

inline std::vector<double> direct_convolve(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

inline std::vector<double> direct_correlate(std::span<const double> ref, std::span<const double> sig) {
    std::vector<double> out(sig.size(), 0.0);
    for (std::size_t t = 0; t < sig.size(); ++t)
        for (std::size_t tau = 0; tau < ref.size() && t + tau < sig.size(); ++tau)
            out[t] += ref[tau] * sig[t + tau];
    return out;
}

inline std::vector<Complex> direct_dft(std::span<const Complex> x) {
    const std::size_t n = x.size();
    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t m = 0; m < n; ++m)
            out[k] += x[m] * std::polar(1.0, -2.0 * M_PI * double(k * m % n) / double(n));
    return out;
}

/// Gaussian elimination with partial pivoting on a dense complex system.
inline std::vector<Complex> solve_dense(std::vector<std::vector<Complex>> a, std::vector<Complex> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        if (std::abs(a[p][c]) == 0.0) throw std::runtime_error("singular nodal matrix");
        std::swap(a[p], a[c]);
        std::swap(b[p], b[c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const Complex f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<Complex> x(n);
    for (std::size_t i = n; i-- > 0;) {
        Complex s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

/// Edge two-port built by cascading telegrapher sections directly.
inline wtdiag::Abcd edge_cascade(const wtdiag::Edge& e, const wtdiag::LineContext& ctx, double f) {
    wtdiag::Abcd m;
    for (const auto& s : e.segments) {
        const Complex eps = wtdiag::total_permittivity(s.gamma, f, ctx.material, ctx.perturbation);
        const auto pul = wtdiag::pul_parameters(ctx.cable, eps, f);
        const double w = 2.0 * M_PI * f;
        const Complex z{pul.r, w * pul.l}, y{pul.g, w * pul.c};
        const Complex g = std::sqrt(z * y) * s.length, zc = std::sqrt(z / y);
        m = m * wtdiag::Abcd{std::cosh(g), zc * std::sinh(g), std::sinh(g) / zc, std::cosh(g)};
    }
    return m;
}

/// Nodal-admittance solution of a tree network: unit EMF behind Z_plm at the
/// source, Z_plm at the other modem nodes, shunt loads as given.
inline wtdiag::PortResponse nodal_solve(const wtdiag::Topology& t, const wtdiag::LineContext& ctx,
                                        const wtdiag::FrequencyGrid& grid, int source, int receiver) {
    const std::size_t n = static_cast<std::size_t>(t.node_count);
    wtdiag::PortResponse out;
    for (std::size_t k = 0; k < grid.count; ++k) {
        const double f = grid.frequency(k);
        std::vector<std::vector<Complex>> y(n, std::vector<Complex>(n));
        std::vector<Complex> i(n);
        for (const auto& e : t.edges) {
            const auto m = edge_cascade(e, ctx, f);
            // Line sections are reciprocal, so det = 1 exactly.
            y[e.from][e.from] += m.d / m.b;
            y[e.from][e.to] += -1.0 / m.b;
            y[e.to][e.from] += -1.0 / m.b;
            y[e.to][e.to] += m.a / m.b;
        }
        for (std::size_t v = 0; v < n; ++v)
            if (t.shunt[v]) y[v][v] += 1.0 / *t.shunt[v];
        for (int m : t.modem_nodes) y[m][m] += 1.0 / ctx.z_plm;
        i[source] = 1.0 / ctx.z_plm;
        const auto v = solve_dense(y, i);
        out.z_in.push_back(v[source] * ctx.z_plm / (1.0 - v[source]));
        out.h_f.push_back(v[receiver]);
    }
    return out;
}

/// Random tree with 3-7 nodes, multi-segment edges and at least two modems.
inline wtdiag::Topology random_tree(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> nodes(3, 7), segs(1, 3), coin(0, 1);
    std::uniform_real_distribution<double> len(10.0, 300.0), gam(0.0, 1.0), re(1.0, 100.0), im(-50.0, 50.0);
    wtdiag::Topology t;
    t.node_count = nodes(rng);
    for (int v = 1; v < t.node_count; ++v) {
        const int u = std::uniform_int_distribution<int>(0, v - 1)(rng);
        wtdiag::Edge e{coin(rng) ? u : v, 0, {}};
        e.to = e.from == u ? v : u;
        const int n = segs(rng);
        for (int s = 0; s < n; ++s) e.segments.push_back({len(rng), s == 1 ? gam(rng) : 0.05 * gam(rng)});
        t.edges.push_back(e);
    }
    t.shunt.resize(t.node_count);
    for (auto& s : t.shunt)
        if (coin(rng)) s = Complex{re(rng), im(rng)};
    std::vector<int> ids(t.node_count);
    for (int i = 0; i < t.node_count; ++i) ids[i] = i;
    std::shuffle(ids.begin(), ids.end(), rng);
    t.modem_nodes.assign(ids.begin(), ids.begin() + 2 + coin(rng) * (t.node_count > 3));
    return t;
}

inline double rel_err(Complex a, Complex b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace oracle
