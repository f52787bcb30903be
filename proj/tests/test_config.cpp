#include <doctest.h>

#include "wtdiag/config.hpp"
#include "wtdiag/error.hpp"

using namespace wtdiag;

TEST_CASE("config text parses sections, comments and dotted keys") {
    RunConfig c;
    apply_config_text(c, R"(
# comment
[scenario]
gamma_local = 0.2, 0.8   ; trailing comment
seed = 17
[svm]
kernel = linear
pipeline.n_train = 300
)");
    CHECK(c.pipeline.scenario.gamma_local == Range{0.2, 0.8});
    CHECK(c.pipeline.scenario.seed == 17);
    CHECK(c.pipeline.learner.svm.kernel == KernelType::linear);
    CHECK(c.pipeline.n_train == 300);
}

TEST_CASE("config errors carry origin and line") {
    RunConfig c;
    try {
        apply_config_text(c, "[scenario]\n\nseed = many\n", "run.ini");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).rfind("run.ini:3: ", 0) == 0);
    }
    CHECK_THROWS_AS(apply_config_text(c, "[scenario\n"), ValidationError);
    CHECK_THROWS_AS(apply_config_text(c, "just words\n"), ValidationError);
    CHECK_THROWS_AS(set_config_value(c, "scenario.nope", "1"), ValidationError);
    CHECK_THROWS_AS(set_config_value(c, "scenario.gamma_local", "0.3"), ValidationError);
    CHECK_THROWS_AS(apply_config_file(c, "/nonexistent/run.ini"), ValidationError);
}

TEST_CASE("rendered config parses back to the same values") {
    RunConfig c;
    set_config_value(c, "scenario.gamma_homo", "0.01, 0.04");
    set_config_value(c, "scenario.branch_length", "400");
    set_config_value(c, "l2boost.shrinkage", "0.05");
    set_config_value(c, "pipeline.target_kernel", "rbf");
    set_config_value(c, "run.out", "elsewhere");
    RunConfig back;
    apply_config_text(back, to_config_text(c));
    for (const auto& k : config_keys()) CHECK_MESSAGE(get_config_value(back, k) == get_config_value(c, k), k);
    CHECK(back.pipeline.scenario.branch_length[5] == 400.0);
}

TEST_CASE("environment overrides use the prefix and reject unknown names") {
    CHECK(env_name("scenario.gamma_local") == "WTDIAG_SCENARIO_GAMMA_LOCAL");
    RunConfig c;
    apply_environment(c, {{"WTDIAG_PIPELINE_N_TEST", "77"}, {"HOME", "/root"}});
    CHECK(c.pipeline.n_test == 77);
    CHECK_THROWS_AS(apply_environment(c, {{"WTDIAG_BOGUS", "1"}}), ValidationError);
    CHECK_THROWS_AS(apply_environment(c, {{"WTDIAG_PIPELINE_N_TEST", "-4"}}), ValidationError);
}

TEST_CASE("every key is readable") {
    const RunConfig c;
    const auto keys = config_keys();
    CHECK(std::is_sorted(keys.begin(), keys.end()));
    for (const auto& k : keys) CHECK_NOTHROW(get_config_value(c, k));
    CHECK_NOTHROW(c.validate());
}
