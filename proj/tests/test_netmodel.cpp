#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "wtdiag/error.hpp"
#include "wtdiag/netmodel.hpp"
#include "wtdiag/scenario.hpp"

using namespace wtdiag;

TEST_CASE("tree solver matches a nodal brute-force solution") {
    std::mt19937_64 rng(2024);
    const FrequencyGrid grid{2.0e6, 0.9e6, 32};
    const LineContext ctx;
    for (int trial = 0; trial < 20; ++trial) {
        const auto topo = oracle::random_tree(rng);
        const NetworkSolver solver(topo, ctx, grid);
        const int src = topo.modem_nodes[0], rcv = topo.modem_nodes[1];
        const auto got = solver.solve(src, rcv);
        const auto ref = oracle::nodal_solve(topo, ctx, grid, src, rcv);
        for (std::size_t k = 0; k < grid.count; ++k) {
            CHECK(oracle::rel_err(got.z_in[k], ref.z_in[k]) <= 1e-9);
            CHECK(oracle::rel_err(got.h_f[k], ref.h_f[k]) <= 1e-9);
        }
    }
}

TEST_CASE("line sections are reciprocal and compose") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> f(2e6, 30e6), g(0.0, 1.0), len(1.0, 500.0);
    const CableSpec cable;
    const auto mat = MaterialParams::nominal();
    for (int i = 0; i < 100; ++i) {
        const double fr = f(rng), l = len(rng);
        const auto pul = pul_parameters(cable, total_permittivity(g(rng), fr, mat), fr);
        const auto m = abcd_section(pul, l, fr);
        // AD - BC cancels to 1; rounding scales with the size of the products
        CHECK(std::abs(m.det() - 1.0) <= 1e-12 * (std::abs(m.a * m.d) + std::abs(m.b * m.c)));
        const auto half = abcd_section(pul, l / 2, fr);
        const auto two = half * half;
        CHECK(std::abs(two.a - m.a) <= 1e-9 * std::abs(m.a));
        CHECK(std::abs(two.b - m.b) <= 1e-9 * std::abs(m.b));
    }
    CHECK_THROWS_AS(abcd_section(PulParams{}, -1.0, 1e6), DomainError);
}

TEST_CASE("per-unit-length parameters") {
    const CableSpec cable;
    const auto p = pul_parameters(cable, {2.3, -0.001}, 1e7);
    const double v = 1.0 / std::sqrt(p.l * p.c);
    CHECK(v == doctest::Approx(299792458.0 / std::sqrt(2.3)).epsilon(1e-4));
    CHECK(p.g / (2 * M_PI * 1e7 * p.c) == doctest::Approx(0.001 / 2.3));
    CableSpec bad = cable;
    bad.d_cond = 1.5 * bad.r_cond;
    CHECK_THROWS_AS(pul_parameters(bad, {2.3, 0.0}, 1e7), GeometryError);
}

TEST_CASE("reflection CTF is passive over random scenarios") {
    ScenarioConfig cfg;
    for (std::uint64_t i = 0; i < 30; ++i) {
        const auto scn = sample_scenario(cfg, i);
        for (int m = 0; m < modem_count; ++m) {
            const auto obs = solve_network(scn, m);
            for (const auto& h : obs.h_ref) CHECK(std::abs(h) <= 1.0 + 1e-12);
            for (const auto& z : obs.z_in) CHECK(z.real() >= -1e-9);
        }
    }
    const std::vector<Complex> matched{Complex{50, 0}};
    CHECK(std::abs(reflection_ctf(matched, {50, 0})[0]) < 1e-15);
}

TEST_CASE("end-to-end response is reciprocal") {
    const auto scn = sample_scenario(ScenarioConfig{}, 11);
    const NetworkSolver s(t_network(scn), {scn.cable, scn.material, scn.perturbation, scn.z_plm},
                          FrequencyGrid::plc_band());
    const auto ab = s.solve(1, 2), ba = s.solve(2, 1);
    for (std::size_t k = 0; k < ab.h_f.size(); ++k) CHECK(oracle::rel_err(ab.h_f[k], ba.h_f[k]) <= 1e-9);
}

TEST_CASE("attenuation grows monotonically with homogeneous aging") {
    double prev = 1e300;
    for (int i = 0; i <= 10; ++i) {
        NetworkScenario scn;
        for (auto& a : scn.aging) a.gamma_homo = 0.005 * i;
        const auto obs = solve_network(scn, 0);
        double energy = 0.0;
        for (const auto& h : obs.h_f) energy += std::norm(h);
        CHECK(energy < prev);
        prev = energy;
    }
}

TEST_CASE("T network layout") {
    const NetworkScenario scn;
    const auto t = t_network(scn);
    CHECK(t.node_count == 7);
    CHECK(t.edges.size() == 6);
    CHECK(t.modem_nodes == std::vector<int>{1, 2, 3});
    const auto all = solve_all(scn);
    REQUIRE(all.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(all[i].observer == i);
        CHECK(all[i].partner == partner_of(i));
    }
    NetworkScenario two = scn;
    two.aging[0].local = LocalDegradation{0.5, 10, 10};
    two.aging[1].local = LocalDegradation{0.5, 10, 10};
    CHECK_THROWS_AS(two.validate(), DomainError);
}

TEST_CASE("branch segments split at the LD boundaries") {
    AgingProfile a{0.02, LocalDegradation{0.4, 100, 50}};
    const auto s = branch_segments(500, a);
    REQUIRE(s.size() == 3);
    CHECK(s[0].length == 100);
    CHECK(s[1].length == 50);
    CHECK(s[1].gamma == 0.4);
    CHECK(s[2].length == 350);
    CHECK(branch_segments(500, AgingProfile{0.01, {}}).size() == 1);
}

TEST_CASE("impulse response of a pure delay peaks at the delay") {
    const auto grid = FrequencyGrid::plc_band();
    const TimeGrid tg;
    const int delay = 137;
    std::vector<Complex> h(grid.count);
    for (std::size_t k = 0; k < grid.count; ++k)
        h[k] = std::polar(1.0, -2.0 * M_PI * grid.frequency(k) * delay * tg.dt());
    const auto x = impulse_response(h, grid);
    REQUIRE(x.size() == tg.fft_size);
    CHECK(std::max_element(x.begin(), x.end()) - x.begin() == delay);
}
