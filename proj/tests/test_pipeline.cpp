#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "wtdiag/dataset.hpp"
#include "wtdiag/error.hpp"
#include "wtdiag/pipeline.hpp"

using namespace wtdiag;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config() {
    PipelineConfig c;
    c.n_train = 170;
    c.n_test = 40;
    c.learner.adaboost.rounds = 30;
    c.learner.l2boost.stages = 40;
    return c;
}

const ModelBundle& small_bundle() {
    static const ModelBundle b = train_pipeline(small_config());
    return b;
}

std::vector<ChannelObservation> observe(const NetworkScenario& s) {
    std::vector<ChannelObservation> obs;
    for (int m = 0; m < modem_count; ++m) obs.push_back(solve_network(s, m));
    return obs;
}

fs::path temp_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("wtdiag_pipe_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("training refuses fewer than ten samples per feature") {
    const auto cfg = small_config();
    const auto ts = generate_task_samples(cfg, cfg.scenario, {Task::identify}, 0, 20, 0).front();
    const std::size_t d = ts.x.front().size();
    try {
        train_task(cfg, ts);
        FAIL("expected InsufficientSamplesError");
    } catch (const InsufficientSamplesError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("n_TR = 20") != std::string::npos);
        CHECK(msg.find(std::to_string(d) + " features") != std::string::npos);
        CHECK(msg.find("need " + std::to_string(10 * d)) != std::string::npos);
    }
}

TEST_CASE("training refuses a badly imbalanced classification set") {
    auto cfg = small_config();
    cfg.min_samples_per_feature = 0.1;
    auto ts = generate_task_samples(cfg, cfg.scenario, {Task::identify}, 0, 20, 0).front();
    for (auto& y : ts.y) y = 1.0;
    ts.y[0] = 0.0;
    CHECK_THROWS_AS(train_task(cfg, ts), ValidationError);
}

TEST_CASE("sample extraction does not depend on the thread count") {
    auto a = small_config(), b = small_config();
    a.jobs = 1;
    b.jobs = 3;
    const auto x = generate_task_samples(a, a.scenario, {Task::target, Task::product}, 0, 7, 11);
    const auto y = generate_task_samples(b, b.scenario, {Task::target, Task::product}, 0, 7, 11);
    REQUIRE(x.size() == 2);
    for (std::size_t t = 0; t < 2; ++t) {
        CHECK(x[t].x == y[t].x);
        CHECK(x[t].y == y[t].y);
    }
}

TEST_CASE("dataset files feed the same samples as direct generation") {
    const auto dir = temp_dir("load");
    const auto cfg = small_config();
    generate_dataset(cfg.scenario, DatasetKind::localized, 0, 5, dir / "l.wtds", 3);
    const auto from_file = load_task_samples(cfg, {Task::target}, dir / "l.wtds").front();
    const auto direct = generate_task_samples(cfg, cfg.scenario, {Task::target}, 0, 5, 3).front();
    CHECK(from_file.x == direct.x);

    auto other = cfg;
    other.scenario.seed = 99;
    CHECK_THROWS_AS(load_task_samples(other, {Task::target}, dir / "l.wtds"), ValidationError);
    CHECK_THROWS(load_task_samples(cfg, {Task::identify}, dir / "l.wtds"));
}

TEST_CASE("length follows from product and severity") {
    for (double g : {0.1, 0.37, 1.0})
        for (double l : {100.0, 177.0, 300.0}) CHECK(length_from_product(l * g, g) == doctest::Approx(l));
    CHECK_THROWS_AS(length_from_product(10.0, 0.0), DomainError);
}

TEST_CASE("report lines round-trip") {
    DiagnosisReport r;
    r.profile = ProfileType::localized;
    r.votes = {true, false, true};
    r.scores = {0.25, -1.0 / 3.0, 0.125};
    r.branch = 0;
    r.gamma_local = 0.4;
    r.target_m = 212.5;
    r.lwt_m = 150.0 / 7.0;
    const auto back = report_from_line(to_line(r));
    CHECK(back.profile == r.profile);
    CHECK(back.votes == r.votes);
    CHECK(back.scores == r.scores);
    CHECK(back.branch == r.branch);
    CHECK(back.lwt_m == r.lwt_m);
    CHECK(to_line(back) == to_line(r));

    DiagnosisReport h;
    h.gamma_homo = 0.02;
    h.t_eq = 1e8;
    CHECK(h.consistent());
    CHECK(to_line(report_from_line(to_line(h))) == to_line(h));
    CHECK_THROWS_AS(report_from_line("profile=sideways"), FormatError);
    CHECK_THROWS_AS(report_from_line(""), FormatError);
}

TEST_CASE("consistency requires exactly one verdict path") {
    DiagnosisReport r;
    CHECK_FALSE(r.consistent());
    r.gamma_homo = 0.01;
    r.t_eq = 1.0;
    r.target_m = 5.0;
    CHECK_FALSE(r.consistent());
}

TEST_CASE("branch names") {
    CHECK(branch_name(0) == "PLM1-BP");
    CHECK(branch_name(5) == "PLM3-BE3");
    CHECK(branch_name(-1) == "none");
}

TEST_CASE("diagnosis invariants on a small bundle") {
    const auto& b = small_bundle();
    CHECK(b.metrics.size() == 11);
    for (const auto& name : example_scenario_names()) {
        const auto scn = example_scenario(name);
        try {
            const auto r = diagnose(observe(scn), b);
            CHECK(r.consistent());
            for (int i = 0; i < modem_count; ++i) CHECK(r.votes[i] == (r.scores[i] >= 0.0));
            if (r.profile == ProfileType::homogeneous) {
                CHECK(*r.gamma_homo >= 0.0);
                CHECK(*r.gamma_homo <= 1.0);
            } else {
                CHECK(*r.gamma_local > 0.0);
                CHECK(*r.target_m >= 0.0);
                CHECK(*r.lwt_m > 0.0);
            }
        } catch (const AmbiguousDiagnosisError& e) {
            CHECK(e.votes() == std::vector<bool>{true, true, true});
        }
    }
    const auto obs = observe(example_scenario("healthy"));
    CHECK_THROWS_AS(diagnose({obs[0], obs[1]}, b), ValidationError);
    CHECK_THROWS_AS(diagnose({obs[1], obs[0], obs[2]}, b), ValidationError);
}

TEST_CASE("bundles save deterministically and reload exactly") {
    const auto& b = small_bundle();
    const auto d1 = temp_dir("b1"), d2 = temp_dir("b2");
    save_bundle(d1, b);
    save_bundle(d2, b);
    for (const auto& e : fs::directory_iterator(d1))
        CHECK(slurp(e.path()) == slurp(d2 / e.path().filename()));
    const auto back = load_bundle(d1);
    CHECK(back.identify == b.identify);
    CHECK(back.target == b.target);
    const auto obs = observe(example_scenario("homogeneous"));
    CHECK(to_line(diagnose(obs, back)) == to_line(diagnose(obs, b)));

    std::ofstream(d2 / "product.model", std::ios::app) << "x";
    CHECK_THROWS_AS(load_bundle(d2), FormatError);
    CHECK_THROWS(load_bundle(temp_dir("empty")));
}

TEST_CASE("training is reproducible") {
    auto cfg = small_config();
    cfg.jobs = 2;
    const auto again = train_pipeline(cfg);
    const auto& b = small_bundle();
    CHECK(again.identify == b.identify);
    CHECK(again.branch == b.branch);
    CHECK(again.product == b.product);
}

TEST_CASE("sweep edge cases") {
    auto cfg = small_config();
    const auto one = ntr_sweep(Task::gamma_local, {150}, 30, cfg);
    REQUIRE(one.rows.size() == 1);
    CHECK(one.rows[0].saturated);
    CHECK(one.saturation_n == 150u);
    const auto again = ntr_sweep(Task::gamma_local, {150}, 30, cfg);
    CHECK(again.rows[0].metric == one.rows[0].metric);
    const auto twice = ntr_sweep(Task::gamma_local, {150, 150}, 30, cfg);
    CHECK(twice.rows[0].metric == one.rows[0].metric);
    CHECK_THROWS_AS(ntr_sweep(Task::gamma_local, {}, 30, cfg), ValidationError);
}

TEST_CASE("zero perturbation leaves robustness metrics unchanged") {
    const auto& b = small_bundle();
    const auto r = robustness_eval(b, PerturbationSpec{{1.0, 1.0}, {1.0, 1.0}}, 20);
    REQUIRE(r.nominal.size() == r.perturbed.size());
    for (std::size_t i = 0; i < r.nominal.size(); ++i) {
        CHECK(r.nominal[i].name == r.perturbed[i].name);
        CHECK(r.nominal[i].reg.mse == r.perturbed[i].reg.mse);
    }
}

TEST_CASE("pipeline config json round-trips") {
    auto c = small_config();
    c.target_kernel = KernelType::rbf;
    c.scenario.gamma_local = {0.2, 0.9};
    const auto back = pipeline_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    c.n_train = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}
