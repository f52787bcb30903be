#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string output;  // stdout and stderr
};

Run run(const std::string& args) {
    const std::string cmd = std::string(WTDIAG_BIN) + " " + args + " 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), p)) r.output += buf.data();
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path temp_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("wtdiag_cli_" + name);
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

TEST_CASE("usage errors exit with 1") {
    CHECK(run("").code == 1);
    CHECK(run("frobnicate").code == 1);
    const auto r = run("reproduce fig99 --out " + temp_dir("fig99").string());
    CHECK(r.code == 1);
    CHECK(r.output.find("fig5") != std::string::npos);
    CHECK(run("generate --set scenario.gamma_local=0.9,0.1").code == 1);
    CHECK(run("generate --set scenario.nope=1").code == 1);
}

TEST_CASE("too few samples is a validation failure") {
    const auto r = run("train --set pipeline.n_train=10 --set pipeline.n_test=5 --out " + temp_dir("few").string());
    CHECK(r.code == 1);
    CHECK(r.output.find("10 training samples per feature") != std::string::npos);
}

TEST_CASE("generate is reproducible and writes a manifest") {
    const auto a = temp_dir("gen_a"), b = temp_dir("gen_b");
    const std::string common = " --task target --n 3 --n-test 2 --out ";
    REQUIRE(run("generate" + common + a.string()).code == 0);
    REQUIRE(run("generate" + common + b.string()).code == 0);
    CHECK(fs::exists(a / "manifest.json"));
    CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
    CHECK(slurp(a / "localized.train.wtds") == slurp(b / "localized.train.wtds"));
}

TEST_CASE("train with missing data is a runtime failure") {
    CHECK(run("train --data /nonexistent/data --out " + temp_dir("nodata").string()).code == 2);
}

TEST_CASE("fig5 trace has the expected header") {
    const auto d = temp_dir("fig5");
    REQUIRE(run("reproduce fig5 --out " + d.string()).code == 0);
    const auto csv = slurp(d / "fig5.csv");
    CHECK(csv.rfind("n,t_us,h_jtfdr,neg_abs_h_ref\n", 0) == 0);
}

TEST_CASE("an empty sweep grid is rejected") {
    CHECK(run("sweep --task target --grid \"\" --out " + temp_dir("sweep").string()).code == 1);
}

TEST_CASE("malformed scenario files report the line") {
    const auto d = temp_dir("scn");
    std::ofstream(d / "bad.json") << "{\n  \"branch_length\": [1, 2,\n  oops\n}\n";
    const auto r = run("diagnose --bundle " + (d / "nobundle").string() + " --scenario " +
                       (d / "bad.json").string() + " --out " + d.string());
    CHECK(r.code == 2);
    CHECK(r.output.find("bad.json:3") != std::string::npos);
}
