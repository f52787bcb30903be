// Acceptance run: one PASS/FAIL line per criterion, details on the lines below it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "wtdiag/error.hpp"
#include "wtdiag/pipeline.hpp"
#include "wtdiag/reflectometry.hpp"
#include "wtdiag/spectral.hpp"

using namespace wtdiag;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        detail << "    " << (ok ? "ok   " : "FAIL ") << what << '\n';
    }
};

std::string f3(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

int failures = 0;

void criterion(int n, const std::string& title, double limit_s, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.require(false, std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(s < limit_s, "runtime " + f3(s) + " s < " + f3(limit_s) + " s");
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << title << '\n'
              << o.detail.str() << std::flush;
    if (!o.pass) ++failures;
}

double bp_window(double l0) {
    const double v = propagation_velocity(MaterialParams::nominal().eps_pe);
    return 1.15 * round_trip_samples(l0, v, ChirpParams{}.sample_rate);
}

// Peak within +-w of `at` over the median level of the trace between the
// origin lobe and the branch-point echo, away from the LD and BP echoes.
double peak_to_floor(const std::vector<double>& x, double at, double end_at, double bp_at, double w) {
    auto near = [&](double i, double c) { return std::abs(i - c) <= w; };
    double peak = 0.0;
    std::vector<double> floor;
    const auto last = std::min<std::size_t>(x.size(), static_cast<std::size_t>(bp_at + w));
    for (std::size_t i = 20; i < last; ++i) {
        const double v = std::abs(x[i]);
        if (near(double(i), at)) peak = std::max(peak, v);
        else if (!near(double(i), end_at) && !near(double(i), bp_at)) floor.push_back(v);
    }
    if (floor.empty()) return 0.0;
    std::nth_element(floor.begin(), floor.begin() + floor.size() / 2, floor.end());
    return peak / std::max(floor[floor.size() / 2], 1e-300);
}

const EvalResult& metric(const ModelBundle& b, const std::string& name) {
    for (const auto& e : b.metrics)
        if (e.name == name) return e;
    throw std::runtime_error("no metric " + name);
}

PipelineConfig full_config() {
    PipelineConfig c;
    c.n_train = 2000;
    c.n_test = 1000;
    return c;
}

}  // namespace

int main() {
    std::cout << "acceptance run\n" << std::flush;

    criterion(1, "30-year homogeneous depth", 1.0, [](Outcome& o) {
        const CableSpec cable;
        const double t = 30.0 * constants::seconds_per_year;
        const double g = homogeneous_depth(t, max_field(cable), MaterialParams::nominal()) / cable.r_insul;
        o.require(std::abs(g - 0.0481) <= 0.003, "gamma_homo(30 y) = " + f3(g) + " within 0.0481 +- 0.003");
    });

    criterion(2, "ratio localization of the 211-377 m LD", 10.0, [](Outcome& o) {
        const auto obs = solve_network(example_scenario("near-ld"), 0);
        const auto trace = jtfdr_trace(impulse_response(obs.h_ref, obs.grid));
        const auto loc = localize(trace.peaks, 500.0, bp_window(500.0));
        o.require(loc.distances_m.size() == 2, "origin, LD start, LD end, BP detected (" +
                                                   std::to_string(loc.distances_m.size()) + " interior peaks)");
        if (loc.distances_m.size() != 2) return;
        const double s = loc.distances_m[0], e = loc.distances_m[1];
        o.require(loc.origin.index < loc.branch_point.index && s < e, "peaks in arrival order");
        o.require(std::abs(s - 211.0) <= 5.0, "start " + f3(s) + " m within 211 +- 5");
        o.require(e >= 377.0 && e <= 390.0, "end " + f3(e) + " m in [377, 390]");
    });

    criterion(3, "JTFDR against raw reflection response", 600.0, [](Outcome& o) {
        PipelineConfig cfg = full_config();
        cfg.scenario.gamma_local = {0.1, 0.3};
        const double v = propagation_velocity(MaterialParams::nominal().eps_pe);
        const double fs = ChirpParams{}.sample_rate;
        std::size_t better = 0, total = 0;
        for (std::uint64_t i = 0; i < 200; ++i) {
            const auto scn = sample_task_scenario(cfg.scenario, DatasetKind::localized, 0, i);
            const auto& ld = *scn.aging[0].local;
            const auto obs = solve_network(scn, 0);
            const auto h = impulse_response(obs.h_ref, obs.grid);
            const auto tr = jtfdr_trace(h);
            const double at = round_trip_samples(ld.start_m, v, fs), end_at = round_trip_samples(ld.end_m(), v, fs);
            const double bp_at = round_trip_samples(scn.branch_length[0], v, fs);
            const double rj = peak_to_floor(tr.samples, at, end_at, bp_at, 8.0);
            const double rh = peak_to_floor(h, at, end_at, bp_at, 8.0);
            better += rj > rh;
            ++total;
        }
        const double share = double(better) / double(total);
        o.require(share >= 0.9, "JTFDR peak-to-floor ratio higher in " + f3(100 * share) + "% of " +
                                    std::to_string(total) + " scenarios (need >= 90%)");

        auto detection = [&](FeatureSet set) {
            PipelineConfig c = cfg;
            c.stage1_features = set;
            const auto train = generate_task_samples(c, c.scenario, {Task::identify}, 0, 2000, 0)[0];
            const auto test = generate_task_samples(c, c.scenario, {Task::identify}, 0, 1000, test_index_offset)[0];
            const auto m = train_task(c, train);
            std::vector<double> scores;
            std::vector<int> actual;
            for (std::size_t k = 0; k < test.size(); ++k) {
                scores.push_back(m.predict(test.x[k]));
                actual.push_back(test.y[k] >= 0.5 ? 1 : -1);
            }
            return detection_at_false_alarm(scores, actual, 0.05);
        };
        const double dj = detection(FeatureSet::jtfdr), dh = detection(FeatureSet::href);
        o.require(dj - dh >= 0.10, "stage-1 detection at FA 0.05: JTFDR " + f3(dj) + " vs h_ref " + f3(dh) +
                                       " (need a gap >= 0.10)");
    });

    const auto t0 = std::chrono::steady_clock::now();
    ModelBundle bundle;
    std::string bundle_error;
    try {
        bundle = train_pipeline(full_config());
    } catch (const std::exception& e) {
        bundle_error = e.what();
    }
    const double bundle_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "shared bundle: n_TR 2000, n_TE 1000, trained in " << f3(bundle_s) << " s\n" << std::flush;

    criterion(4, "cooperative LD identification", 1200.0 - bundle_s, [&](Outcome& o) {
        if (!bundle_error.empty()) throw std::runtime_error(bundle_error);
        const auto cfg = full_config();
        for (int i = 0; i < modem_count; ++i) {
            const auto test = generate_task_samples(cfg, cfg.scenario, {Task::identify}, i, cfg.n_test,
                                                    test_index_offset)[0];
            const auto m = detection_in_band(bundle.identify[i], test, 0.3, 1.0 + 1e-12);
            const std::string who = "PLM" + std::to_string(i + 1);
            o.require(m.detection >= 0.95, who + " detection " + f3(m.detection) + " >= 0.95 for gamma_local >= 0.3");
            o.require(m.false_alarm <= 0.05, who + " false alarm " + f3(m.false_alarm) + " <= 0.05");
        }
    });

    criterion(5, "regression fidelity", 1800.0 - bundle_s, [&](Outcome& o) {
        if (!bundle_error.empty()) throw std::runtime_error(bundle_error);
        const auto& t = metric(bundle, "t_eq").reg;
        o.require(t.slope >= 0.9 && t.slope <= 1.1, "t_eq slope " + f3(t.slope) + " in [0.9, 1.1]");
        o.require(t.r2 >= 0.9, "t_eq R^2 " + f3(t.r2) + " >= 0.9");
        const auto& x = metric(bundle, "target").reg;
        o.require(x.slope >= 0.95 && x.slope <= 1.05, "target slope " + f3(x.slope) + " in [0.95, 1.05]");
        o.require(x.r2 >= 0.95, "target R^2 " + f3(x.r2) + " >= 0.95");
        const auto& p = metric(bundle, "product").reg;
        const auto& sc = bundle.config.scenario;
        const double range = sc.lwt.hi * sc.gamma_local.hi - sc.lwt.lo * sc.gamma_local.lo;
        o.require(p.slope >= 0.9 && p.slope <= 1.1, "product slope " + f3(p.slope) + " in [0.9, 1.1]");
        o.require(std::abs(p.intercept) <= 0.05 * range,
                  "product intercept " + f3(p.intercept) + " m within 5% of the label range " + f3(range) + " m");
    });

    criterion(6, "n_TR sweep for LD identification", 1200.0, [](Outcome& o) {
        const std::vector<std::size_t> grid{200, 500, 1000, 2000};
        const auto t = ntr_sweep(Task::identify, grid, 1000, full_config(), 0.02);
        bool monotone = true;
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            o.detail << "    n_TR " << t.rows[i].n_train << ": detection " << f3(t.rows[i].metric) << ", FA "
                     << f3(t.rows[i].secondary) << '\n';
            if (i && t.rows[i].metric < t.rows[i - 1].metric - 0.02) monotone = false;
        }
        o.require(monotone, "detection non-decreasing within 0.02");
        o.require(t.saturation_n && *t.saturation_n < grid.back(),
                  "saturation before the last grid point" +
                      (t.saturation_n ? " (n_TR " + std::to_string(*t.saturation_n) + ")" : std::string()));
    });

    criterion(7, "oracle equivalences", 60.0, [](Outcome& o) {
        std::mt19937_64 rng(2024);
        const FrequencyGrid grid{2.0e6, 0.9e6, 32};
        const LineContext ctx;
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const auto topo = oracle::random_tree(rng);
            const int src = topo.modem_nodes[0], rcv = topo.modem_nodes[1];
            const auto got = NetworkSolver(topo, ctx, grid).solve(src, rcv);
            const auto ref = oracle::nodal_solve(topo, ctx, grid, src, rcv);
            for (std::size_t k = 0; k < grid.count; ++k)
                worst = std::max({worst, oracle::rel_err(got.z_in[k], ref.z_in[k]),
                                  oracle::rel_err(got.h_f[k], ref.h_f[k])});
        }
        o.require(worst <= 1e-9, "network solver vs nodal solve: " + f3(worst) + " <= 1e-9 on 20 trees");

        std::uniform_real_distribution<double> u(-1, 1);
        double worst_c = 0.0;
        for (auto [na, nb] : {std::pair{7, 3}, {64, 500}, {501, 1024}}) {
            std::vector<double> a(na), b(nb);
            for (auto& v : a) v = u(rng);
            for (auto& v : b) v = u(rng);
            const auto c = spectral::convolve(a, b), cd = oracle::direct_convolve(a, b);
            const auto r = spectral::correlate(a, b), rd = oracle::direct_correlate(a, b);
            double sc = 0, sr = 0;
            for (double v : cd) sc = std::max(sc, std::abs(v));
            for (double v : rd) sr = std::max(sr, std::abs(v));
            for (std::size_t i = 0; i < c.size(); ++i) worst_c = std::max(worst_c, std::abs(c[i] - cd[i]) / sc);
            for (std::size_t i = 0; i < r.size(); ++i) worst_c = std::max(worst_c, std::abs(r[i] - rd[i]) / sr);
        }
        o.require(worst_c <= 1e-9, "transform convolution/correlation vs direct sums: " + f3(worst_c));

        const CableSpec cable;
        const auto mat = MaterialParams::nominal();
        double worst_a = 0.0;
        for (double years : {0.1, 1.0, 5.0, 17.0, 30.0, 60.0}) {
            const double t = years * constants::seconds_per_year;
            const double back = equivalent_age(homogeneous_depth(t, max_field(cable), mat), max_field(cable), mat);
            worst_a = std::max(worst_a, std::abs(back - t) / t);
        }
        o.require(worst_a <= 1e-9, "equivalent_age(homogeneous_depth(t)) = t: " + f3(worst_a));
    });

    criterion(8, "invariants", 600.0, [&](Outcome& o) {
        const ScenarioConfig cfg;
        bool det = true, passive = true, same = true;
        for (std::uint64_t i = 0; i < 30; ++i) {
            const auto s = sample_scenario(cfg, i);
            same = same && s == sample_scenario(cfg, i);
            const auto obs = solve_network(s, int(i % 3));
            for (const auto& z : obs.h_ref) passive = passive && std::abs(z) <= 1.0 + 1e-12;
        }
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> f(2e6, 30e6), g(0.0, 1.0), len(1.0, 500.0);
        for (int i = 0; i < 200; ++i) {
            const double fr = f(rng);
            const auto pul = pul_parameters(CableSpec{}, total_permittivity(g(rng), fr, MaterialParams::nominal()), fr);
            const auto m = abcd_section(pul, len(rng), fr);
            det = det && std::abs(m.det() - 1.0) <= 1e-12 * (std::abs(m.a * m.d) + std::abs(m.b * m.c));
        }
        o.require(same, "draws reproducible from (seed, index)");
        o.require(passive, "|H_ref| <= 1 on 30 random scenarios");
        o.require(det, "det(ABCD) = 1 to rounding on 200 random sections");

        double prev = std::numeric_limits<double>::infinity();
        bool attenuates = true;
        for (double gh : {0.0, 0.01, 0.02, 0.03, 0.05}) {
            NetworkScenario s;
            for (auto& a : s.aging) a.gamma_homo = gh;
            double e = 0.0;
            for (const auto& z : solve_network(s, 0).h_f) e += std::norm(z);
            attenuates = attenuates && e < prev;
            prev = e;
        }
        o.require(attenuates, "end-to-end channel energy falls as gamma_homo grows");

        Matrix x;
        std::vector<double> y;
        std::uniform_real_distribution<double> uu(-1, 1);
        for (int i = 0; i < 200; ++i) {
            x.push_back({uu(rng), uu(rng)});
            y.push_back(x.back()[0] * x.back()[1] > 0 ? 1.0 : 0.0);
        }
        std::vector<int> yc;
        for (double v : y) yc.push_back(v > 0.5 ? 1 : -1);
        const auto ada = train_adaboost(x, yc, AdaBoostParams{50});
        bool bound = true;
        for (std::size_t i = 1; i < ada.bound.size(); ++i) bound = bound && ada.bound[i] <= ada.bound[i - 1];
        o.require(bound, "AdaBoost training-error bound non-increasing");
        const auto l2 = train_l2boost(x, y, L2BoostParams{});
        bool mse = true;
        for (std::size_t i = 1; i < l2.train_mse.size(); ++i) mse = mse && l2.train_mse[i] <= l2.train_mse[i - 1] + 1e-12;
        o.require(mse, "L2Boost training MSE non-increasing");

        if (!bundle_error.empty()) throw std::runtime_error(bundle_error);
        bool exclusive = true;
        std::size_t ambiguous = 0;
        for (std::uint64_t i = 0; i < 60; ++i) {
            const auto s = sample_scenario(bundle.config.scenario, test_index_offset + i);
            std::vector<ChannelObservation> obs;
            for (int m = 0; m < modem_count; ++m) obs.push_back(solve_network(s, m));
            try {
                exclusive = exclusive && diagnose(obs, bundle).consistent();
            } catch (const AmbiguousDiagnosisError&) {
                ++ambiguous;
            }
        }
        o.require(exclusive, "diagnosis reports hold exactly one verdict path (60 draws, " +
                                 std::to_string(ambiguous) + " ambiguous)");
    });

    criterion(9, "robustness to a +-20% loss-tangent perturbation", 1200.0, [&](Outcome& o) {
        if (!bundle_error.empty()) throw std::runtime_error(bundle_error);
        const auto r = robustness_eval(bundle, PerturbationSpec{{1.0, 1.0}, {0.8, 1.2}}, 500);
        for (std::size_t i = 0; i < r.perturbed.size(); ++i)
            o.detail << "    " << r.perturbed[i].name << ": nominal slope " << f3(r.nominal[i].reg.slope)
                     << ", perturbed slope " << f3(r.perturbed[i].reg.slope) << '\n';
        for (const auto& e : r.perturbed) {
            if (e.name == "target")
                o.require(e.reg.slope >= 0.9 && e.reg.slope <= 1.1, "target slope " + f3(e.reg.slope) + " in [0.9, 1.1]");
            if (e.name == "t_eq")
                o.require(e.reg.slope >= 0.7 && e.reg.slope <= 1.2, "t_eq slope " + f3(e.reg.slope) + " in [0.7, 1.2]");
        }
    });

    std::cout << (failures ? std::to_string(failures) + " criteria failed\n" : std::string("all criteria passed\n"));
    return failures ? 1 : 0;
}
