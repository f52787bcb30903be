#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wtdiag/codec.hpp"
#include "wtdiag/dataset.hpp"
#include "wtdiag/error.hpp"

using namespace wtdiag;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("wtdiag_test_" + name);
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

TEST_CASE("draws depend only on seed and index") {
    const ScenarioConfig cfg;
    CHECK(sample_scenario(cfg, 42) == sample_scenario(cfg, 42));
    CHECK_FALSE(sample_scenario(cfg, 42) == sample_scenario(cfg, 43));
    ScenarioConfig other = cfg;
    other.seed = 2;
    CHECK_FALSE(sample_scenario(cfg, 42) == sample_scenario(other, 42));
    std::vector<NetworkScenario> fwd, rev;
    for (int i = 0; i < 10; ++i) fwd.push_back(sample_task_scenario(cfg, DatasetKind::identify, 1, i));
    for (int i = 9; i >= 0; --i) rev.push_back(sample_task_scenario(cfg, DatasetKind::identify, 1, i));
    std::reverse(rev.begin(), rev.end());
    CHECK(fwd == rev);
}

TEST_CASE("generated scenarios respect the configured ranges") {
    const ScenarioConfig cfg;
    for (std::uint64_t i = 0; i < 300; ++i) {
        const auto s = sample_scenario(cfg, i);
        CHECK_NOTHROW(s.validate());
        const double gh = s.aging[0].gamma_homo;
        CHECK(cfg.gamma_homo.contains(gh));
        for (const auto& a : s.aging) CHECK(a.gamma_homo == gh);
        for (const auto& z : s.be_load) {
            CHECK(cfg.load_re.contains(z.real()));
            CHECK(cfg.load_im.contains(z.imag()));
        }
        const int b = s.ld_branch();
        if (b >= 0) {
            const auto& l = *s.aging[b].local;
            CHECK(cfg.gamma_local.contains(l.gamma));
            CHECK(cfg.lwt.contains(l.length_m));
            CHECK(l.start_m >= 0.0);
            CHECK(l.end_m() <= s.branch_length[b] + 1e-9);
            CHECK(std::abs(l.start_m + l.length_m / 2 - s.branch_length[b] / 2) <= 100.0 + 1e-9);
        }
    }
}

TEST_CASE("task-shaped draws place the LD as the kind requires") {
    const ScenarioConfig cfg;
    for (int obs = 0; obs < modem_count; ++obs)
        for (std::uint64_t i = 0; i < 40; ++i) {
            const bool pos = i % 2 == 0;
            const auto id = sample_task_scenario(cfg, DatasetKind::identify, obs, i);
            CHECK((id.ld_branch() >= 0 && branch_modem(id.ld_branch()) == obs) == pos);
            const auto br = sample_task_scenario(cfg, DatasetKind::branch, obs, i);
            CHECK(br.ld_branch() == (pos ? bp_branch(obs) : be_branch(obs)));
            CHECK(sample_task_scenario(cfg, DatasetKind::homogeneous, obs, i).ld_branch() == -1);
            CHECK(sample_task_scenario(cfg, DatasetKind::localized, obs, i).ld_branch() == bp_branch(obs));
        }
}

TEST_CASE("labels follow the scenario") {
    const ScenarioConfig cfg;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const auto s = sample_task_scenario(cfg, DatasetKind::localized, 0, i);
        const auto l = derive_labels(s);
        const auto& ld = *s.aging[0].local;
        CHECK(l.ld_present);
        CHECK(l.ld_branch == 0);
        CHECK(l.target_m == ld.start_m);
        CHECK(l.lwt_m == ld.length_m);
        CHECK(l.product == doctest::Approx(ld.length_m * ld.gamma).epsilon(1e-15));
        if (l.gamma_homo > 1e-6) {
            const double depth = homogeneous_depth(l.t_eq, max_field(s.cable), MaterialParams::nominal());
            CHECK(depth == doctest::Approx(l.gamma_homo * s.cable.r_insul).epsilon(1e-9));
        }
    }
}

TEST_CASE("scenario config validation names the field") {
    ScenarioConfig cfg;
    cfg.gamma_local = {0.5, 0.2};
    try {
        cfg.validate();
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("gamma_local") != std::string::npos);
    }
    cfg = {};
    cfg.ld_probability = 2;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("codec") {
    const std::string s = "foobar";
    const std::vector<std::uint8_t> bytes(s.begin(), s.end());
    CHECK(codec::base64_encode(bytes) == "Zm9vYmFy");
    CHECK(codec::base64_encode(std::vector<std::uint8_t>{'f', 'o'}) == "Zm8=");
    CHECK(codec::base64_decode("Zm9vYmFy") == bytes);
    CHECK_THROWS(codec::base64_decode("Zm9v!mFy"));
    CHECK(codec::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(codec::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(codec::hex64(0xabcULL) == "0000000000000abc");
    const std::vector<double> d{1.5, -0.0, 1e-300, 3.141592653589793};
    CHECK(codec::decode_doubles(codec::encode_doubles(d)) == d);
    const std::vector<Complex> z{{1, 2}, {-3, 0.25}};
    CHECK(codec::decode_complex(codec::encode_complex(z)) == z);
}

TEST_CASE("dataset files round-trip exactly and are reproducible") {
    const auto dir = temp_dir("ds");
    ScenarioConfig cfg;
    generate_dataset(cfg, DatasetKind::branch, 1, 4, dir / "a.wtds", 7);
    generate_dataset(cfg, DatasetKind::branch, 1, 4, dir / "b.wtds", 7);
    CHECK(slurp(dir / "a.wtds") == slurp(dir / "b.wtds"));
    const auto ds = load_dataset(dir / "a.wtds");
    CHECK(ds.header.count == 4);
    CHECK(ds.header.first == 7);
    CHECK(ds.header.kind == DatasetKind::branch);
    CHECK(ds.header.config == cfg);
    REQUIRE(ds.samples.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto expected = make_sample(sample_task_scenario(cfg, DatasetKind::branch, 1, 7 + i),
                                          observed_modems(DatasetKind::branch, 1));
        CHECK(ds.samples[i] == expected);
    }
    save_dataset(dir / "c.wtds", ds);
    CHECK(load_dataset(dir / "c.wtds").samples == ds.samples);
}

TEST_CASE("damaged dataset files are rejected") {
    const auto dir = temp_dir("bad");
    generate_dataset(ScenarioConfig{}, DatasetKind::homogeneous, 0, 3, dir / "d.wtds");
    const auto text = slurp(dir / "d.wtds");

    SUBCASE("tampered record") {
        auto t = text;
        const auto pos = t.find("\"index\":1");
        REQUIRE(pos != std::string::npos);
        t[pos + 8] = '2';
        std::ofstream(dir / "d.wtds", std::ios::trunc) << t;
        CHECK_THROWS_AS(load_dataset(dir / "d.wtds"), ChecksumError);
    }
    SUBCASE("truncated file") {
        std::ofstream(dir / "d.wtds", std::ios::trunc) << text.substr(0, text.size() / 2);
        CHECK_THROWS_AS(load_dataset(dir / "d.wtds"), FormatError);
    }
    SUBCASE("wrong version") {
        auto t = text;
        const auto pos = t.find("\"version\":1");
        REQUIRE(pos != std::string::npos);
        t.replace(pos, 11, "\"version\":9");
        std::ofstream(dir / "d.wtds", std::ios::trunc) << t;
        CHECK_THROWS_AS(load_dataset(dir / "d.wtds"), VersionMismatchError);
    }
    SUBCASE("not a dataset") {
        std::ofstream(dir / "d.wtds", std::ios::trunc) << "{\"hello\":1}\n";
        CHECK_THROWS_AS(load_dataset(dir / "d.wtds"), FormatError);
    }
    SUBCASE("missing checksum sidecar") {
        fs::remove(dir / "d.wtds.sum");
        CHECK_THROWS_AS(load_dataset(dir / "d.wtds"), IoError);
    }
}

TEST_CASE("estimation noise is seeded, additive and off by default") {
    ScenarioConfig cfg;
    const auto clean = make_sample(sample_scenario(cfg, 5), {0});
    cfg.estimation_noise = 1e-3;
    const auto a = make_sample(sample_scenario(cfg, 5), {0}), b = make_sample(sample_scenario(cfg, 5), {0});
    CHECK(a.observations == b.observations);
    const auto& n = a.observations[0].h_ref;
    const auto& c = clean.observations[0].h_ref;
    double power = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) power += std::norm(n[i] - c[i]);
    CHECK(std::sqrt(power / double(n.size())) == doctest::Approx(1e-3).epsilon(0.05));
    CHECK(a.observations[0].z_in == clean.observations[0].z_in);
    cfg.estimation_noise = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("hand-written scenario JSON needs only lengths and ageing") {
    const auto j = nlohmann::json::parse(R"({
        "branch_length": [500, 500, 500, 500, 500, 500],
        "aging": [{"gamma_homo": 0.01, "local": {"gamma": 0.4, "start_m": 180, "length_m": 120}},
                  {"gamma_homo": 0.01}, {"gamma_homo": 0.01},
                  {"gamma_homo": 0.01}, {"gamma_homo": 0.01}, {"gamma_homo": 0.01}]})");
    const auto s = scenario_from_json(j);
    CHECK(s.ld_branch() == 0);
    CHECK(s.cable == CableSpec{});
    CHECK(scenario_from_json(to_json(s)) == s);
    auto bad = j;
    bad["aging"].erase(0);
    CHECK_THROWS_AS(scenario_from_json(bad), FormatError);
}
