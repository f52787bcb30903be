// wtdiag: dataset generation, training, diagnosis, figure reproduction and
// n_TR sweeps.
//
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "figures.hpp"
#include "wtdiag/codec.hpp"
#include "wtdiag/config.hpp"
#include "wtdiag/dataset.hpp"
#include "wtdiag/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wtdiag;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Globals {
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> jobs;
    std::vector<std::string> sets;
};

std::vector<std::size_t> parse_grid(const std::string& text) {
    std::vector<std::size_t> grid;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(item, &pos);
            if (pos != item.size() || v <= 0) throw std::invalid_argument(item);
            grid.push_back(static_cast<std::size_t>(v));
        } catch (const std::logic_error&) {
            throw ValidationError("grid: '" + item + "' is not a positive integer");
        }
    }
    if (grid.empty()) throw ValidationError("grid: at least one n_TR value is required");
    return grid;
}

/// Defaults, then config file, environment, --set / --section.key and global flags.
RunConfig resolve(const Globals& g, const std::vector<std::string>& extras) {
    RunConfig cfg;
    if (!g.config_file.empty()) apply_config_file(cfg, g.config_file);
    apply_environment(cfg, process_environment());
    for (const auto& s : g.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + s + "'");
        set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const auto& a = extras[i];
        if (a.rfind("--", 0) != 0) throw ValidationError("unexpected argument '" + a + "'");
        std::string key = a.substr(2), value;
        const auto eq = key.find('=');
        if (eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            if (i + 1 >= extras.size()) throw ValidationError("option --" + key + " needs a value");
            value = extras[++i];
        }
        if (key.find('.') == std::string::npos) throw ValidationError("unknown option --" + key);
        set_config_value(cfg, key, value);
    }
    if (g.seed) cfg.pipeline.scenario.seed = *g.seed;
    if (g.out) cfg.out = *g.out;
    if (g.jobs) cfg.pipeline.jobs = *g.jobs;
    cfg.validate();
    return cfg;
}

std::string file_checksum(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return codec::hex64(codec::fnv1a64(ss.str()));
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out) throw IoError("write to " + p.string() + " failed");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string task;
    std::size_t n = 0;
    std::size_t n_test = 0;
};

int cmd_generate(const RunConfig& cfg, const GenerateArgs& a) {
    const auto t0 = std::chrono::steady_clock::now();
    auto pc = cfg.pipeline;
    const std::size_t n = a.n ? a.n : pc.n_train;
    const std::size_t n_test = a.n_test ? a.n_test : pc.n_test;
    fs::create_directories(cfg.out);

    std::vector<std::pair<std::string, std::pair<DatasetKind, int>>> wanted;
    for (const std::string split : {"train", "test"}) {
        for (const auto& f : training_set_files(split)) {
            if (!a.task.empty() && f.second.first != dataset_kind_for(task_from_string(a.task))) continue;
            wanted.push_back(f);
        }
    }
    json files = json::object();
    for (const auto& [name, what] : wanted) {
        const bool test = name.find(".test.") != std::string::npos;
        const auto path = cfg.out / name;
        const auto h = generate_dataset(pc.scenario, what.first, what.second, test ? n_test : n, path,
                                        test ? test_index_offset : 0);
        files[name] = {{"kind", to_string(h.kind)},
                       {"observer", h.observer},
                       {"count", h.count},
                       {"first", h.first},
                       {"fnv1a64", file_checksum(path)}};
        std::cerr << "wrote " << path.string() << " (" << h.count << " samples)\n";
    }
    const json manifest = {{"format", "wtdiag-datasets"},
                           {"version", 1},
                           {"config", to_json(pc)},
                           {"files", files}};
    write_text(cfg.out / "manifest.json", manifest.dump(2) + "\n");
    std::cerr << "generate finished in " << seconds_since(t0) << " s\n";
    return 0;
}

void print_metrics(const ModelBundle& b) {
    std::cout << "model,detection,false_alarm,slope,intercept,r2,samples_per_feature\n";
    for (const auto& e : b.metrics) {
        std::cout << e.name << ',';
        if (e.classification)
            std::cout << e.cls.detection << ',' << e.cls.false_alarm << ",,,,";
        else
            std::cout << ",," << e.reg.slope << ',' << e.reg.intercept << ',' << e.reg.r2 << ',';
        std::cout << e.samples_per_feature << '\n';
    }
}

int cmd_train(RunConfig cfg, const std::string& data) {
    const auto t0 = std::chrono::steady_clock::now();
    ModelBundle bundle;
    if (!data.empty()) {
        const auto mpath = fs::path(data) / "manifest.json";
        std::ifstream in(mpath);
        if (!in) throw IoError("no dataset manifest at " + mpath.string() + "; run 'wtdiag generate' first");
        json manifest;
        try {
            in >> manifest;
        } catch (const json::exception& e) {
            throw FormatError(mpath.string() + ": " + e.what());
        }
        for (const auto& [name, entry] : manifest.at("files").items()) {
            const auto path = fs::path(data) / name;
            if (!fs::exists(path)) throw IoError("missing dataset " + path.string());
            if (file_checksum(path) != entry.at("fnv1a64").get<std::string>())
                throw FormatError(path.string() + ": checksum differs from the manifest");
        }
        const auto scenario = pipeline_config_from_json(manifest.at("config")).scenario;
        if (!(scenario == cfg.pipeline.scenario))
            std::cerr << "using the scenario config recorded in " << mpath.string() << '\n';
        cfg.pipeline.scenario = scenario;
        const auto train = read_training_set(cfg.pipeline, data, "train");
        const auto test = read_training_set(cfg.pipeline, data, "test");
        bundle = train_pipeline(train, &test, cfg.pipeline);
    } else {
        bundle = train_pipeline(cfg.pipeline);
    }
    save_bundle(cfg.out, bundle);
    print_metrics(bundle);
    std::cerr << "bundle written to " << cfg.out.string() << " in " << seconds_since(t0) << " s\n";
    return 0;
}

NetworkScenario read_scenario_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read scenario file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const auto text = ss.str();
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte ? e.byte - 1 : 0, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw FormatError(path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
    try {
        auto scn = scenario_from_json(j);
        scn.validate();
        return scn;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

struct DiagnoseArgs {
    std::string bundle;
    std::vector<std::string> scenario_files;
    std::vector<std::string> examples;
    std::vector<std::uint64_t> draws;
};

int cmd_diagnose(const RunConfig& cfg, const DiagnoseArgs& a) {
    if (a.bundle.empty()) throw ValidationError("diagnose needs --bundle");
    std::vector<std::pair<std::string, NetworkScenario>> cases;
    for (const auto& f : a.scenario_files) cases.emplace_back(fs::path(f).stem().string(), read_scenario_file(f));
    for (const auto& e : a.examples) cases.emplace_back(e, example_scenario(e));
    if (cases.empty() && a.draws.empty()) throw ValidationError("diagnose needs --scenario, --example or --draw");
    const auto bundle = load_bundle(a.bundle);
    for (auto d : a.draws) {
        auto scn = sample_scenario(bundle.config.scenario, d);
        cases.emplace_back("draw" + std::to_string(d), scn);
    }
    fs::create_directories(cfg.out);
    std::ofstream lines(cfg.out / "reports.txt", std::ios::trunc);
    int failures = 0;
    for (const auto& [name, scn] : cases) {
        std::vector<ChannelObservation> obs;
        for (int i = 0; i < modem_count; ++i) obs.push_back(solve_network(scn, i));
        try {
            const auto r = diagnose(obs, bundle);
            write_text(cfg.out / (name + ".report.txt"), to_text(r));
            lines << name << ' ' << to_line(r) << '\n';
            std::cout << "== " << name << '\n' << to_text(r);
        } catch (const AmbiguousDiagnosisError& e) {
            ++failures;
            lines << name << " error=ambiguous\n";
            std::cout << "== " << name << "\nambiguous: " << e.what() << '\n';
        }
    }
    return failures ? kExitRuntime : 0;
}

int cmd_reproduce(const RunConfig& cfg, const std::string& id, const std::string& grid, bool list) {
    if (list) {
        for (const auto& f : cli::figure_ids()) std::cout << f << "  " << cli::figure_description(f) << '\n';
        return 0;
    }
    if (id.empty()) throw ValidationError("reproduce needs a figure id (see --list)");
    const auto ids = id == "all" ? cli::figure_ids() : std::vector<std::string>{id};
    for (const auto& f : ids) cli::figure_description(f);
    for (const auto& f : ids) {
        const auto t0 = std::chrono::steady_clock::now();
        std::ostringstream csv;
        cli::reproduce(f, cfg, parse_grid(grid), csv, std::cerr);
        write_text(cfg.out / (f + ".csv"), csv.str());
        std::cerr << f << " -> " << (cfg.out / (f + ".csv")).string() << " (" << seconds_since(t0) << " s)\n";
    }
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& task, const std::string& grid, double delta) {
    const auto t = ntr_sweep(task_from_string(task), parse_grid(grid), cfg.pipeline.n_test, cfg.pipeline, delta);
    std::ostringstream csv;
    const bool cls = t.metric_name == "detection";
    csv << "task,n_train," << t.metric_name << ',' << (cls ? "false_alarm" : "slope") << ",saturated\n";
    for (const auto& r : t.rows)
        csv << task << ',' << r.n_train << ',' << r.metric << ',' << r.secondary << ',' << (r.saturated ? 1 : 0)
            << '\n';
    write_text(cfg.out / ("sweep_" + task + ".csv"), csv.str());
    std::cout << csv.str();
    if (t.saturation_n)
        std::cerr << "saturation at n_TR = " << *t.saturation_n << '\n';
    else
        std::cerr << "no saturation detected\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Water-tree cable diagnostics workbench"};
    app.require_subcommand(1);
    app.footer("Config keys may be set in a file (--config), through " + std::string(env_prefix) +
               "SECTION_KEY environment variables, with --set section.key=value or as --section.key value.\n"
               "Exit codes: 0 success, 1 validation error, 2 runtime error.");
    Globals g;
    std::string seed_text;
    auto add_globals = [&](CLI::App* c) {
        c->add_option("--config", g.config_file, "INI-style config file")->check(CLI::ExistingFile);
        c->add_option("--seed", g.seed, "scenario seed");
        c->add_option("--out", g.out, "output directory");
        c->add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
        c->add_option("--set", g.sets, "config override key=value");
        c->allow_extras();
    };

    GenerateArgs gen;
    auto* c_gen = app.add_subcommand("generate", "write train/test datasets and a manifest");
    c_gen->add_option("--task", gen.task, "only the dataset feeding this task");
    c_gen->add_option("--n", gen.n, "training samples per dataset (default pipeline.n_train)");
    c_gen->add_option("--n-test", gen.n_test, "test samples per dataset (default pipeline.n_test)");
    add_globals(c_gen);

    std::string data;
    auto* c_train = app.add_subcommand("train", "train the model bundle");
    c_train->add_option("--data", data, "dataset directory from 'generate' (default: generate in memory)");
    add_globals(c_train);

    DiagnoseArgs diag;
    auto* c_diag = app.add_subcommand("diagnose", "diagnose scenarios with a trained bundle");
    c_diag->add_option("--bundle", diag.bundle, "bundle directory")->required();
    c_diag->add_option("--scenario", diag.scenario_files, "scenario JSON file");
    c_diag->add_option("--example", diag.examples, "named example scenario");
    c_diag->add_option("--draw", diag.draws, "draw index of a generated scenario");
    add_globals(c_diag);

    std::string fig, grid = "200,500,1000,2000";
    bool list = false;
    auto* c_rep = app.add_subcommand("reproduce", "regenerate a figure as CSV");
    c_rep->add_option("figure", fig, "figure id or 'all'");
    c_rep->add_flag("--list", list, "list figure ids");
    c_rep->add_option("--grid", grid, "n_TR grid for sweep figures");
    add_globals(c_rep);

    std::string sweep_task = "identify", sweep_grid = "200,500,1000,2000";
    double delta = 0.02;
    auto* c_sweep = app.add_subcommand("sweep", "performance against training-set size");
    c_sweep->add_option("--task", sweep_task, "task");
    c_sweep->add_option("--grid", sweep_grid, "comma-separated n_TR values");
    c_sweep->add_option("--delta", delta, "saturation tolerance");
    add_globals(c_sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        CLI::App* cmd = app.get_subcommands().front();
        auto cfg = resolve(g, cmd->remaining());
        if (cmd == c_gen) return cmd_generate(cfg, gen);
        if (cmd == c_train) return cmd_train(cfg, data);
        if (cmd == c_diag) return cmd_diagnose(cfg, diag);
        if (cmd == c_rep) return cmd_reproduce(cfg, fig, grid, list);
        if (cmd == c_sweep) return cmd_sweep(cfg, sweep_task, sweep_grid, delta);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const InsufficientSamplesError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}
