#include "wtdiag/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "wtdiag/error.hpp"
#include "wtdiag/spectral.hpp"

namespace wtdiag {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double geometry_factor(const CableSpec& spec) {
    if (!(spec.r_cond > 0.0) || !(spec.d_cond > 2.0 * spec.r_cond))
        throw GeometryError("two-wire line needs d_cond > 2 r_cond");
    return std::acosh(spec.d_cond / (2.0 * spec.r_cond));
}

}  // namespace

PulParams pul_parameters(const CableSpec& spec, Complex eps_total, double f) {
    const double acosh_ratio = geometry_factor(spec);
    if (!(f > 0.0)) throw DomainError("frequency must be positive");
    if (!(eps_total.real() > 0.0)) throw DomainError("Re(eps_total) must be positive");
    PulParams p;
    p.c = std::numbers::pi * constants::vacuum_permittivity * eps_total.real() / acosh_ratio;
    p.l = constants::mu0 / std::numbers::pi * acosh_ratio;
    p.g = kTwoPi * f * p.c * (std::abs(eps_total.imag()) / eps_total.real());
    p.r = std::sqrt(std::numbers::pi * f * constants::mu0 / constants::copper_conductivity) /
          (std::numbers::pi * spec.r_cond);
    return p;
}

Abcd abcd_section(const PulParams& pul, double length, double f) {
    if (!(length >= 0.0)) throw DomainError("section length must be >= 0");
    if (length == 0.0) return Abcd::identity();
    const double w = kTwoPi * f;
    const Complex z{pul.r, w * pul.l};
    const Complex y{pul.g, w * pul.c};
    const Complex gamma = std::sqrt(z * y);
    const Complex zc = std::sqrt(z / y);
    const Complex gl = gamma * length;
    if (gl.real() > 700.0) throw DomainError("section attenuation overflows (Re(gamma l) > 700)");
    const Complex ch = std::cosh(gl);
    const Complex sh = std::sinh(gl);
    return {ch, zc * sh, sh / zc, ch};
}

FrequencyGrid FrequencyGrid::plc_band() {
    const TimeGrid t;
    const double df = t.bin_spacing();
    const auto first = static_cast<std::size_t>(std::ceil(2.0e6 / df));
    const auto last = static_cast<std::size_t>(std::floor(30.0e6 / df));
    return {static_cast<double>(first) * df, df, last - first + 1};
}

void FrequencyGrid::validate() const {
    if (!(f_start > 0.0) || !(delta_f > 0.0)) throw DomainError("frequency grid must be positive");
    if (count < 2) throw DomainError("frequency grid needs at least two points");
}

void Topology::validate() const {
    if (node_count <= 0) throw GeometryError("topology has no nodes");
    if (static_cast<int>(shunt.size()) != node_count)
        throw GeometryError("shunt list must have one entry per node");
    if (static_cast<int>(edges.size()) != node_count - 1)
        throw GeometryError("topology must be a tree (edges = nodes - 1)");
    std::vector<int> parent(node_count);
    for (int i = 0; i < node_count; ++i) parent[i] = i;
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& e : edges) {
        if (e.from < 0 || e.to < 0 || e.from >= node_count || e.to >= node_count || e.from == e.to)
            throw GeometryError("edge endpoint out of range");
        const int a = find(e.from), b = find(e.to);
        if (a == b) throw GeometryError("topology contains a loop");
        parent[a] = b;
        for (const auto& s : e.segments)
            if (!(s.length >= 0.0)) throw GeometryError("negative segment length");
    }
    for (int m : modem_nodes)
        if (m < 0 || m >= node_count) throw GeometryError("modem node out of range");
}

NetworkSolver::NetworkSolver(Topology topology, LineContext ctx, FrequencyGrid grid)
    : topo_(std::move(topology)), ctx_(std::move(ctx)), grid_(grid) {
    topo_.validate();
    grid_.validate();
    ctx_.cable.validate();
    if (!(ctx_.z_plm.real() > 0.0)) throw DomainError("modem impedance must have positive real part");

    incident_.resize(topo_.node_count);
    for (std::size_t e = 0; e < topo_.edges.size(); ++e) {
        incident_[topo_.edges[e].from].push_back(static_cast<int>(e));
        incident_[topo_.edges[e].to].push_back(static_cast<int>(e));
    }

    edge_abcd_.resize(topo_.edges.size() * grid_.count);
    std::map<double, Complex> eps_cache;
    for (std::size_t k = 0; k < grid_.count; ++k) {
        const double f = grid_.frequency(k);
        eps_cache.clear();
        for (std::size_t e = 0; e < topo_.edges.size(); ++e) {
            Abcd m = Abcd::identity();
            for (const auto& seg : topo_.edges[e].segments) {
                if (seg.length == 0.0) continue;
                auto it = eps_cache.find(seg.gamma);
                if (it == eps_cache.end())
                    it = eps_cache
                             .emplace(seg.gamma, total_permittivity(seg.gamma, f, ctx_.material,
                                                                    ctx_.perturbation))
                             .first;
                m = m * abcd_section(pul_parameters(ctx_.cable, it->second, f), seg.length, f);
            }
            edge_abcd_[e * grid_.count + k] = m;
        }
    }
}

// Admittance looking from `node` into everything except `via_edge`.
Complex NetworkSolver::admittance_away(int node, int via_edge, std::size_t k, int source) const {
    Complex y{0.0};
    if (const auto& z = topo_.shunt[node]) {
        if (std::abs(*z) == 0.0) throw SingularityError("short-circuit shunt load");
        y += 1.0 / *z;
    }
    if (node != source)
        for (int m : topo_.modem_nodes)
            if (m == node) y += 1.0 / ctx_.z_plm;
    for (int e : incident_[node]) {
        if (e == via_edge) continue;
        const Edge& edge = topo_.edges[e];
        const bool forward = edge.from == node;
        const int far = forward ? edge.to : edge.from;
        const Abcd& raw = edge_matrix(e, k);
        const Abcd m = forward ? raw : raw.reversed();
        const Complex yl = admittance_away(far, e, k, source);
        const Complex den = m.a + m.b * yl;
        if (std::abs(den) == 0.0)
            throw SingularityError("singular cascade at frequency index " + std::to_string(k));
        y += (m.c + m.d * yl) / den;
    }
    return y;
}

PortResponse NetworkSolver::solve(int source, int receiver) const {
    if (source < 0 || source >= topo_.node_count || receiver < 0 || receiver >= topo_.node_count)
        throw DomainError("port node out of range");

    // Path source -> receiver as a list of (edge, next node).
    std::vector<int> parent_edge(topo_.node_count, -1), parent_node(topo_.node_count, -1);
    std::vector<int> stack{source};
    std::vector<bool> seen(topo_.node_count, false);
    seen[source] = true;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int e : incident_[u]) {
            const Edge& edge = topo_.edges[e];
            const int v = edge.from == u ? edge.to : edge.from;
            if (seen[v]) continue;
            seen[v] = true;
            parent_edge[v] = e;
            parent_node[v] = u;
            stack.push_back(v);
        }
    }
    std::vector<std::pair<int, int>> path;  // (edge, node reached)
    for (int v = receiver; v != source; v = parent_node[v]) path.emplace_back(parent_edge[v], v);
    std::reverse(path.begin(), path.end());

    PortResponse out;
    out.z_in.resize(grid_.count);
    out.h_f.resize(grid_.count);
    for (std::size_t k = 0; k < grid_.count; ++k) {
        const Complex y_in = admittance_away(source, -1, k, source);
        out.z_in[k] = y_in == Complex{0.0} ? Complex{INFINITY, 0.0} : 1.0 / y_in;
        Complex v = 1.0 / (1.0 + ctx_.z_plm * y_in);
        int at = source;
        for (const auto& [e, next] : path) {
            const Edge& edge = topo_.edges[e];
            const Abcd m = edge.from == at ? edge_matrix(e, k) : edge_matrix(e, k).reversed();
            const Complex yl = admittance_away(next, e, k, source);
            const Complex den = m.a + m.b * yl;
            if (std::abs(den) == 0.0)
                throw SingularityError("singular cascade at frequency index " + std::to_string(k));
            v /= den;
            at = next;
        }
        out.h_f[k] = v;
    }
    return out;
}

void NetworkScenario::validate() const {
    cable.validate();
    material.validate();
    if (!(z_plm.real() > 0.0)) throw DomainError("modem impedance must have positive real part");
    int ld = 0;
    for (int b = 0; b < branch_count; ++b) {
        if (!(branch_length[b] > 0.0)) throw GeometryError("branch lengths must be positive");
        aging[b].validate();
        if (const auto& l = aging[b].local) {
            ++ld;
            if (l->end_m() > branch_length[b] + 1e-9)
                throw GeometryError("localized degradation extends past its branch");
        }
    }
    if (ld > 1) throw DomainError("at most one localized degradation per network");
    if (!(estimation_noise >= 0.0)) throw DomainError("estimation noise must be non-negative");
}

int NetworkScenario::ld_branch() const {
    for (int b = 0; b < branch_count; ++b)
        if (aging[b].local) return b;
    return -1;
}

std::vector<Segment> branch_segments(double length, const AgingProfile& profile) {
    if (!profile.local) return {{length, profile.gamma_homo}};
    const auto& l = *profile.local;
    std::vector<Segment> out;
    const double start = std::clamp(l.start_m, 0.0, length);
    const double end = std::clamp(l.end_m(), start, length);
    if (start > 0.0) out.push_back({start, profile.gamma_homo});
    if (end > start) out.push_back({end - start, l.gamma});
    if (length > end) out.push_back({length - end, profile.gamma_homo});
    return out;
}

Topology t_network(const NetworkScenario& scn) {
    Topology t;
    t.node_count = 1 + 2 * modem_count;
    t.shunt.assign(t.node_count, std::nullopt);
    for (int i = 0; i < modem_count; ++i) {
        const int modem_node = 1 + i;
        const int be_node = 1 + modem_count + i;
        t.modem_nodes.push_back(modem_node);
        t.shunt[be_node] = scn.be_load[i];
        t.edges.push_back({modem_node, 0,
                           branch_segments(scn.branch_length[bp_branch(i)], scn.aging[bp_branch(i)])});
    }
    for (int i = 0; i < modem_count; ++i) {
        t.edges.push_back({1 + i, 1 + modem_count + i,
                           branch_segments(scn.branch_length[be_branch(i)], scn.aging[be_branch(i)])});
    }
    return t;
}

namespace {

ChannelObservation observe(const NetworkSolver& solver, const NetworkScenario& scn, int observer) {
    if (observer < 0 || observer >= modem_count) throw DomainError("observer must be modem 0..2");
    ChannelObservation obs;
    obs.grid = solver.grid();
    obs.observer = observer;
    obs.partner = partner_of(observer);
    auto r = solver.solve(1 + observer, 1 + obs.partner);
    obs.h_f = std::move(r.h_f);
    obs.z_in = std::move(r.z_in);
    obs.h_ref = reflection_ctf(obs.z_in, scn.z_plm);
    if (scn.estimation_noise > 0.0) {
        std::mt19937_64 rng(scn.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(observer) + 1);
        std::normal_distribution<double> n(0.0, scn.estimation_noise / std::sqrt(2.0));
        for (auto& h : obs.h_f) h += Complex{n(rng), n(rng)};
        for (auto& h : obs.h_ref) h += Complex{n(rng), n(rng)};
    }
    return obs;
}

NetworkSolver make_solver(const NetworkScenario& scn, const FrequencyGrid& grid) {
    scn.validate();
    return NetworkSolver(t_network(scn), {scn.cable, scn.material, scn.perturbation, scn.z_plm}, grid);
}

}  // namespace

ChannelObservation solve_network(const NetworkScenario& scn, int observer, const FrequencyGrid& grid) {
    return observe(make_solver(scn, grid), scn, observer);
}

std::vector<ChannelObservation> solve_all(const NetworkScenario& scn, const FrequencyGrid& grid) {
    const NetworkSolver solver = make_solver(scn, grid);
    std::vector<ChannelObservation> out;
    for (int i = 0; i < modem_count; ++i) out.push_back(observe(solver, scn, i));
    return out;
}

std::vector<Complex> reflection_ctf(std::span<const Complex> z_in, Complex z_plm) {
    if (!(z_plm.real() > 0.0)) throw DomainError("Re(Z_plm) must be positive");
    std::vector<Complex> out(z_in.size());
    for (std::size_t i = 0; i < z_in.size(); ++i) {
        const Complex z = z_in[i];
        if (std::isinf(z.real()) || std::isinf(z.imag())) {
            out[i] = 1.0;
            continue;
        }
        const Complex den = z + z_plm;
        if (std::abs(den) < 1e-300)
            throw SingularityError("Z_in = -Z_plm at point " + std::to_string(i));
        out[i] = (z - z_plm) / den;
    }
    return out;
}

std::vector<Complex> impulse_response_complex(std::span<const Complex> h, const FrequencyGrid& grid,
                                              const TimeGrid& time) {
    if (h.size() != grid.count) throw DomainError("spectrum length does not match its grid");
    const double bin = time.bin_spacing();
    const double first = grid.f_start / bin;
    const auto k0 = static_cast<std::size_t>(std::llround(first));
    if (std::abs(first - static_cast<double>(k0)) > 1e-6 || std::abs(grid.delta_f - bin) > 1e-9 * bin)
        throw DomainError("frequency grid is not aligned to the DFT bins");
    const std::size_t n = time.fft_size;
    if (k0 == 0 || k0 + grid.count > n / 2) throw DomainError("band does not fit below Nyquist");
    std::vector<Complex> spectrum(n);
    for (std::size_t i = 0; i < grid.count; ++i) {
        spectrum[k0 + i] = h[i];
        spectrum[n - k0 - i] = std::conj(h[i]);
    }
    return spectral::ifft(spectrum);
}

std::vector<double> impulse_response(std::span<const Complex> h, const FrequencyGrid& grid,
                                     const TimeGrid& time) {
    const auto c = impulse_response_complex(h, grid, time);
    std::vector<double> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
    return out;
}

}  // namespace wtdiag
