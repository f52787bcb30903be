#include "wtdiag/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "wtdiag/error.hpp"

extern char** environ;

namespace wtdiag {

namespace {

struct Entry {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& v) {
    const auto t = trim(v);
    double out = 0.0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ValidationError(key + ": '" + v + "' is not a number");
    return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    const auto t = trim(v);
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ValidationError(key + ": '" + v + "' is not a non-negative integer");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    const auto t = trim(v);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ValidationError(key + ": '" + v + "' is not a boolean");
}

Range parse_range(const std::string& key, const std::string& v) {
    const auto comma = v.find(',');
    if (comma == std::string::npos) throw ValidationError(key + ": expected 'lo, hi', got '" + v + "'");
    return {parse_double(key, v.substr(0, comma)), parse_double(key, v.substr(comma + 1))};
}

using Table = std::map<std::string, Entry>;

template <class F>
void add_d(Table& t, const std::string& key, F member) {
    t[key] = {[key, member](RunConfig& c, const std::string& v) { member(c) = parse_double(key, v); },
              [member](const RunConfig& c) { return num(member(const_cast<RunConfig&>(c))); }};
}

template <class F>
void add_u(Table& t, const std::string& key, F member) {
    t[key] = {[key, member](RunConfig& c, const std::string& v) {
                  member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(parse_uint(key, v));
              },
              [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
}

template <class F>
void add_r(Table& t, const std::string& key, F member) {
    t[key] = {[key, member](RunConfig& c, const std::string& v) { member(c) = parse_range(key, v); },
              [member](const RunConfig& c) {
                  const Range& r = member(const_cast<RunConfig&>(c));
                  return num(r.lo) + ", " + num(r.hi);
              }};
}

template <class F, class Parse, class Show>
void add_e(Table& t, const std::string& key, F member, Parse parse, Show show) {
    t[key] = {[key, member, parse](RunConfig& c, const std::string& v) {
                  try {
                      member(c) = parse(trim(v));
                  } catch (const ValidationError& e) {
                      throw ValidationError(key + ": " + e.what());
                  }
              },
              [member, show](const RunConfig& c) { return show(member(const_cast<RunConfig&>(c))); }};
}

const Table& table() {
    static const Table t = [] {
        Table t;
        auto sc = [](RunConfig& c) -> ScenarioConfig& { return c.pipeline.scenario; };
        add_r(t, "scenario.gamma_homo", [sc](RunConfig& c) -> Range& { return sc(c).gamma_homo; });
        add_r(t, "scenario.gamma_local", [sc](RunConfig& c) -> Range& { return sc(c).gamma_local; });
        add_r(t, "scenario.lwt", [sc](RunConfig& c) -> Range& { return sc(c).lwt; });
        add_r(t, "scenario.center_offset", [sc](RunConfig& c) -> Range& { return sc(c).center_offset; });
        add_r(t, "scenario.load_re", [sc](RunConfig& c) -> Range& { return sc(c).load_re; });
        add_r(t, "scenario.load_im", [sc](RunConfig& c) -> Range& { return sc(c).load_im; });
        add_r(t, "scenario.eps_wt_magnitude", [sc](RunConfig& c) -> Range& { return sc(c).eps_wt_magnitude; });
        add_r(t, "scenario.eps_wt_loss_tangent",
              [sc](RunConfig& c) -> Range& { return sc(c).eps_wt_loss_tangent; });
        t["scenario.branch_length"] = {
            [](RunConfig& c, const std::string& v) {
                std::istringstream is(v);
                std::string item;
                std::vector<double> vals;
                while (std::getline(is, item, ',')) vals.push_back(parse_double("scenario.branch_length", item));
                if (vals.size() == 1) vals.assign(branch_count, vals[0]);
                if (vals.size() != static_cast<std::size_t>(branch_count))
                    throw ValidationError("scenario.branch_length: expected 1 or 6 lengths");
                std::copy(vals.begin(), vals.end(), c.pipeline.scenario.branch_length.begin());
            },
            [](const RunConfig& c) {
                std::string s;
                for (double l : c.pipeline.scenario.branch_length) s += (s.empty() ? "" : ", ") + num(l);
                return s;
            }};
        add_d(t, "scenario.ld_probability", [sc](RunConfig& c) -> double& { return sc(c).ld_probability; });
        add_d(t, "scenario.far_ld_fraction", [sc](RunConfig& c) -> double& { return sc(c).far_ld_fraction; });
        add_d(t, "scenario.estimation_noise", [sc](RunConfig& c) -> double& { return sc(c).estimation_noise; });
        add_d(t, "scenario.z_plm", [sc](RunConfig& c) -> double& { return sc(c).z_plm; });
        t["scenario.balance"] = {
            [](RunConfig& c, const std::string& v) { c.pipeline.scenario.balance = parse_bool("scenario.balance", v); },
            [](const RunConfig& c) { return std::string(c.pipeline.scenario.balance ? "true" : "false"); }};
        add_u(t, "scenario.seed", [sc](RunConfig& c) -> std::uint64_t& { return sc(c).seed; });

        add_d(t, "cable.r_cond", [](RunConfig& c) -> double& { return c.pipeline.scenario.cable.r_cond; });
        add_d(t, "cable.d_cond", [](RunConfig& c) -> double& { return c.pipeline.scenario.cable.d_cond; });
        add_d(t, "cable.r_insul", [](RunConfig& c) -> double& { return c.pipeline.scenario.cable.r_insul; });
        add_d(t, "cable.v0", [](RunConfig& c) -> double& { return c.pipeline.scenario.cable.v0; });

        auto lr = [](RunConfig& c) -> LearnerParams& { return c.pipeline.learner; };
        add_e(t, "svm.kernel", [lr](RunConfig& c) -> KernelType& { return lr(c).svm.kernel; },
              kernel_from_string, [](KernelType k) { return to_string(k); });
        add_d(t, "svm.c", [lr](RunConfig& c) -> double& { return lr(c).svm.c; });
        add_d(t, "svm.rbf_gamma", [lr](RunConfig& c) -> double& { return lr(c).svm.rbf_gamma; });
        add_d(t, "svm.epsilon", [lr](RunConfig& c) -> double& { return lr(c).svm.epsilon; });
        add_d(t, "svm.tolerance", [lr](RunConfig& c) -> double& { return lr(c).svm.tolerance; });
        add_u(t, "adaboost.rounds", [lr](RunConfig& c) -> std::size_t& { return lr(c).adaboost.rounds; });
        add_u(t, "l2boost.stages", [lr](RunConfig& c) -> std::size_t& { return lr(c).l2boost.stages; });
        add_d(t, "l2boost.shrinkage", [lr](RunConfig& c) -> double& { return lr(c).l2boost.shrinkage; });
        add_u(t, "l2boost.depth", [lr](RunConfig& c) -> std::size_t& { return lr(c).l2boost.depth; });
        add_u(t, "l2boost.min_leaf", [lr](RunConfig& c) -> std::size_t& { return lr(c).l2boost.min_leaf; });

        auto pc = [](RunConfig& c) -> PipelineConfig& { return c.pipeline; };
        auto show_kind = [](ModelKind k) { return to_string(k); };
        add_e(t, "pipeline.stage1_features", [pc](RunConfig& c) -> FeatureSet& { return pc(c).stage1_features; },
              feature_set_from_string, [](FeatureSet f) { return to_string(f); });
        add_e(t, "pipeline.stage1_model", [pc](RunConfig& c) -> ModelKind& { return pc(c).stage1_model; },
              model_kind_from_string, show_kind);
        add_e(t, "pipeline.branch_model", [pc](RunConfig& c) -> ModelKind& { return pc(c).branch_model; },
              model_kind_from_string, show_kind);
        add_e(t, "pipeline.gamma_homo_model", [pc](RunConfig& c) -> ModelKind& { return pc(c).gamma_homo_model; },
              model_kind_from_string, show_kind);
        add_e(t, "pipeline.gamma_local_model",
              [pc](RunConfig& c) -> ModelKind& { return pc(c).gamma_local_model; }, model_kind_from_string,
              show_kind);
        add_e(t, "pipeline.target_model", [pc](RunConfig& c) -> ModelKind& { return pc(c).target_model; },
              model_kind_from_string, show_kind);
        add_e(t, "pipeline.target_kernel", [pc](RunConfig& c) -> KernelType& { return pc(c).target_kernel; },
              kernel_from_string, [](KernelType k) { return to_string(k); });
        add_e(t, "pipeline.product_model", [pc](RunConfig& c) -> ModelKind& { return pc(c).product_model; },
              model_kind_from_string, show_kind);
        add_u(t, "pipeline.n_train", [pc](RunConfig& c) -> std::size_t& { return pc(c).n_train; });
        add_u(t, "pipeline.n_test", [pc](RunConfig& c) -> std::size_t& { return pc(c).n_test; });
        add_d(t, "pipeline.min_samples_per_feature",
              [pc](RunConfig& c) -> double& { return pc(c).min_samples_per_feature; });
        add_d(t, "pipeline.max_majority_fraction",
              [pc](RunConfig& c) -> double& { return pc(c).max_majority_fraction; });

        add_u(t, "run.jobs", [pc](RunConfig& c) -> std::size_t& { return pc(c).jobs; });
        t["run.out"] = {[](RunConfig& c, const std::string& v) { c.out = trim(v); },
                        [](const RunConfig& c) { return c.out.string(); }};
        return t;
    }();
    return t;
}

}  // namespace

void RunConfig::validate() const {
    if (out.empty()) throw ValidationError("run.out must not be empty");
    pipeline.validate();
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto& t = table();
    const auto it = t.find(key);
    if (it == t.end()) throw ValidationError("unknown configuration key '" + key + "'");
    it->second.set(cfg, value);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
    const auto& t = table();
    const auto it = t.find(key);
    if (it == t.end()) throw ValidationError("unknown configuration key '" + key + "'");
    return it->second.get(cfg);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& [k, e] : table()) out.push_back(k);
    return out;
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin) {
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto where = origin + ":" + std::to_string(lineno) + ": ";
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ValidationError(where + "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError(where + "expected 'key = value'");
        const auto name = trim(line.substr(0, eq));
        const auto key = section.empty() || name.find('.') != std::string::npos ? name : section + "." + name;
        try {
            set_config_value(cfg, key, trim(line.substr(eq + 1)));
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
    }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str(), path.string());
}

std::string env_name(const std::string& key) {
    std::string out = env_prefix;
    for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

void apply_environment(RunConfig& cfg, const std::map<std::string, std::string>& env) {
    std::map<std::string, std::string> by_env;
    for (const auto& k : config_keys()) by_env[env_name(k)] = k;
    const std::string prefix = env_prefix;
    for (const auto& [name, value] : env) {
        if (name.rfind(prefix, 0) != 0) continue;
        const auto it = by_env.find(name);
        if (it == by_env.end()) throw ValidationError("unknown environment override " + name);
        try {
            set_config_value(cfg, it->second, value);
        } catch (const ValidationError& e) {
            throw ValidationError(name + ": " + e.what());
        }
    }
}

std::map<std::string, std::string> process_environment() {
    std::map<std::string, std::string> out;
    for (char** e = environ; e && *e; ++e) {
        const std::string s = *e;
        const auto eq = s.find('=');
        if (eq != std::string::npos) out[s.substr(0, eq)] = s.substr(eq + 1);
    }
    return out;
}

std::string to_config_text(const RunConfig& cfg) {
    std::ostringstream os;
    std::string section;
    for (const auto& key : config_keys()) {
        const auto dot = key.find('.');
        const auto sec = key.substr(0, dot);
        if (sec != section) {
            os << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
            section = sec;
        }
        os << key.substr(dot + 1) << " = " << get_config_value(cfg, key) << '\n';
    }
    return os.str();
}

}  // namespace wtdiag
