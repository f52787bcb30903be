#include "wtdiag/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "wtdiag/codec.hpp"
#include "wtdiag/dataset.hpp"
#include "wtdiag/error.hpp"

namespace wtdiag {

using nlohmann::json;

namespace {

constexpr int kBundleVersion = 1;

std::string plm(int i) { return "PLM" + std::to_string(i + 1); }

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string model_name(Task t, int observer) {
    if (t == Task::identify || t == Task::branch) return to_string(t) + "." + plm(observer);
    return to_string(t);
}

std::string model_file(const std::string& name) {
    std::string f = name;
    std::replace(f.begin(), f.end(), '.', '_');
    return f + ".model";
}

bool classification_task(Task t) { return t == Task::identify || t == Task::branch; }

json eval_json(const EvalResult& e) {
    json j = {{"name", e.name}, {"samples_per_feature", e.samples_per_feature}};
    if (e.classification) {
        j["detection"] = e.cls.detection;
        j["false_alarm"] = e.cls.false_alarm;
        j["positives"] = e.cls.positives;
        j["negatives"] = e.cls.negatives;
    } else {
        j["mse"] = e.reg.mse;
        j["slope"] = e.reg.slope;
        j["intercept"] = e.reg.intercept;
        j["r2"] = e.reg.r2;
        j["count"] = e.reg.count;
    }
    return j;
}

EvalResult eval_from_json(const json& j) {
    EvalResult e;
    e.name = j.at("name").get<std::string>();
    e.samples_per_feature = j.at("samples_per_feature").get<double>();
    e.classification = j.contains("detection");
    if (e.classification) {
        e.cls.detection = j.at("detection").get<double>();
        e.cls.false_alarm = j.at("false_alarm").get<double>();
        e.cls.positives = j.at("positives").get<std::size_t>();
        e.cls.negatives = j.at("negatives").get<std::size_t>();
    } else {
        e.reg.mse = j.at("mse").get<double>();
        e.reg.slope = j.at("slope").get<double>();
        e.reg.intercept = j.at("intercept").get<double>();
        e.reg.r2 = j.at("r2").get<double>();
        e.reg.count = j.at("count").get<std::size_t>();
    }
    return e;
}

TaskSamples empty_task(const PipelineConfig& cfg, Task t, int observer) {
    TaskSamples ts;
    ts.task = t;
    ts.observer = observer;
    ts.spec = cfg.spec_for(t);
    return ts;
}

void append(TaskSamples& into, TaskSamples&& from) {
    if (into.names.empty()) into.names = std::move(from.names);
    for (auto& r : from.x) into.x.push_back(std::move(r));
    into.y.insert(into.y.end(), from.y.begin(), from.y.end());
    into.labels.insert(into.labels.end(), from.labels.begin(), from.labels.end());
}

double t_eq_of(double gamma, const CableSpec& cable) {
    return equivalent_age(std::max(gamma, 0.0) * cable.r_insul, max_field(cable), MaterialParams::nominal());
}

}  // namespace

DatasetKind dataset_kind_for(Task t) {
    switch (t) {
        case Task::identify: return DatasetKind::identify;
        case Task::branch: return DatasetKind::branch;
        case Task::gamma_homo: return DatasetKind::homogeneous;
        default: return DatasetKind::localized;
    }
}

double task_label(Task t, int observer, const Labels& l) {
    switch (t) {
        case Task::identify:
            return l.ld_present && branch_modem(l.ld_branch) == observer ? 1.0 : 0.0;
        case Task::branch:
            return l.ld_branch == bp_branch(observer) ? 1.0 : 0.0;
        case Task::gamma_homo: return l.gamma_homo;
        case Task::gamma_local: return l.gamma_local;
        case Task::target: return l.target_m;
        case Task::product: return l.product;
    }
    return 0.0;
}

void TaskSamples::add(const LabeledSample& s) {
    auto fv = build_features(s, spec, observer);
    if (names.empty()) names = std::move(fv.names);
    x.push_back(std::move(fv.values));
    y.push_back(task_label(task, observer, s.labels));
    labels.push_back(s.labels);
}

void PipelineConfig::validate() const {
    scenario.validate();
    learner.svm.validate();
    learner.adaboost.validate();
    learner.l2boost.validate();
    for (auto k : {stage1_model, branch_model})
        if (!is_classifier(k)) throw ValidationError("stage-1 and branch models must be classifiers");
    for (auto k : {gamma_homo_model, gamma_local_model, target_model, product_model})
        if (is_classifier(k)) throw ValidationError("regression stages need svr or l2boost");
    if (n_train == 0) throw ValidationError("pipeline.n_train must be positive");
    if (n_test == 0) throw ValidationError("pipeline.n_test must be positive");
    if (!(min_samples_per_feature > 0.0))
        throw ValidationError("pipeline.min_samples_per_feature must be positive");
    if (!(max_majority_fraction >= 0.5 && max_majority_fraction <= 1.0))
        throw ValidationError("pipeline.max_majority_fraction must lie in [0.5, 1]");
    if (jobs == 0) throw ValidationError("jobs must be at least 1");
}

FeatureSpec PipelineConfig::spec_for(Task t) const {
    auto s = FeatureSpec::for_task(t);
    if (t == Task::identify) s.set = stage1_features;
    return s;
}

ModelKind PipelineConfig::model_for(Task t) const {
    switch (t) {
        case Task::identify: return stage1_model;
        case Task::branch: return branch_model;
        case Task::gamma_homo: return gamma_homo_model;
        case Task::gamma_local: return gamma_local_model;
        case Task::target: return target_model;
        case Task::product: return product_model;
    }
    return stage1_model;
}

LearnerParams PipelineConfig::learner_for(Task t) const {
    auto p = learner;
    if (t == Task::target) p.svm.kernel = target_kernel;
    return p;
}

json to_json(const PipelineConfig& c) {
    const auto& l = c.learner;
    return {{"scenario", to_json(c.scenario)},
            {"svm",
             {{"kernel", to_string(l.svm.kernel)},
              {"c", l.svm.c},
              {"rbf_gamma", l.svm.rbf_gamma},
              {"epsilon", l.svm.epsilon},
              {"tolerance", l.svm.tolerance}}},
            {"adaboost", {{"rounds", l.adaboost.rounds}}},
            {"l2boost",
             {{"stages", l.l2boost.stages},
              {"shrinkage", l.l2boost.shrinkage},
              {"depth", l.l2boost.depth},
              {"min_leaf", l.l2boost.min_leaf}}},
            {"stage1_features", to_string(c.stage1_features)},
            {"stage1_model", to_string(c.stage1_model)},
            {"branch_model", to_string(c.branch_model)},
            {"gamma_homo_model", to_string(c.gamma_homo_model)},
            {"gamma_local_model", to_string(c.gamma_local_model)},
            {"target_model", to_string(c.target_model)},
            {"target_kernel", to_string(c.target_kernel)},
            {"product_model", to_string(c.product_model)},
            {"n_train", c.n_train},
            {"n_test", c.n_test},
            {"min_samples_per_feature", c.min_samples_per_feature},
            {"max_majority_fraction", c.max_majority_fraction}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
    PipelineConfig c;
    c.scenario = scenario_config_from_json(j.at("scenario"));
    const auto& s = j.at("svm");
    c.learner.svm.kernel = kernel_from_string(s.at("kernel").get<std::string>());
    c.learner.svm.c = s.at("c").get<double>();
    c.learner.svm.rbf_gamma = s.at("rbf_gamma").get<double>();
    c.learner.svm.epsilon = s.at("epsilon").get<double>();
    c.learner.svm.tolerance = s.at("tolerance").get<double>();
    c.learner.adaboost.rounds = j.at("adaboost").at("rounds").get<std::size_t>();
    const auto& b = j.at("l2boost");
    c.learner.l2boost.stages = b.at("stages").get<std::size_t>();
    c.learner.l2boost.shrinkage = b.at("shrinkage").get<double>();
    c.learner.l2boost.depth = b.at("depth").get<std::size_t>();
    c.learner.l2boost.min_leaf = b.at("min_leaf").get<std::size_t>();
    c.stage1_features = feature_set_from_string(j.at("stage1_features").get<std::string>());
    c.stage1_model = model_kind_from_string(j.at("stage1_model").get<std::string>());
    c.branch_model = model_kind_from_string(j.at("branch_model").get<std::string>());
    c.gamma_homo_model = model_kind_from_string(j.at("gamma_homo_model").get<std::string>());
    c.gamma_local_model = model_kind_from_string(j.at("gamma_local_model").get<std::string>());
    c.target_model = model_kind_from_string(j.at("target_model").get<std::string>());
    c.target_kernel = kernel_from_string(j.at("target_kernel").get<std::string>());
    c.product_model = model_kind_from_string(j.at("product_model").get<std::string>());
    c.n_train = j.at("n_train").get<std::size_t>();
    c.n_test = j.at("n_test").get<std::size_t>();
    c.min_samples_per_feature = j.at("min_samples_per_feature").get<double>();
    c.max_majority_fraction = j.at("max_majority_fraction").get<double>();
    return c;
}

std::vector<TaskSamples> generate_task_samples(const PipelineConfig& cfg,
                                               const ScenarioConfig& scenario,
                                               const std::vector<Task>& tasks, int observer,
                                               std::size_t n, std::uint64_t first) {
    if (tasks.empty()) throw ValidationError("no tasks requested");
    const DatasetKind kind = dataset_kind_for(tasks.front());
    for (Task t : tasks)
        if (dataset_kind_for(t) != kind)
            throw ValidationError("tasks " + to_string(tasks.front()) + " and " + to_string(t) +
                                  " need different datasets");
    scenario.validate();
    const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, n));

    std::vector<std::vector<TaskSamples>> parts(jobs);
    std::vector<std::exception_ptr> errors(jobs);
    auto work = [&](std::size_t j) {
        try {
            const std::size_t lo = n * j / jobs, hi = n * (j + 1) / jobs;
            for (Task t : tasks) parts[j].push_back(empty_task(cfg, t, observer));
            generate_samples(
                scenario, kind, observer, hi - lo,
                [&](std::size_t, LabeledSample&& s) {
                    for (auto& ts : parts[j]) ts.add(s);
                },
                first + lo);
        } catch (...) {
            errors[j] = std::current_exception();
        }
    };
    if (jobs == 1) {
        work(0);
    } else {
        std::vector<std::thread> threads;
        for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(work, j);
        for (auto& t : threads) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<TaskSamples> out;
    for (Task t : tasks) out.push_back(empty_task(cfg, t, observer));
    for (auto& part : parts)
        for (std::size_t k = 0; k < tasks.size(); ++k) append(out[k], std::move(part[k]));
    return out;
}

std::vector<TaskSamples> load_task_samples(const PipelineConfig& cfg, const std::vector<Task>& tasks,
                                           const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("dataset " + path.string() + " does not exist");
    std::vector<TaskSamples> out;
    for_each_record(
        path,
        [&](const DatasetHeader& h) {
            for (Task t : tasks) {
                if (dataset_kind_for(t) != h.kind)
                    throw ValidationError(path.string() + " holds " + to_string(h.kind) + " samples; task " +
                                          to_string(t) + " needs " + to_string(dataset_kind_for(t)));
                out.push_back(empty_task(cfg, t, h.observer));
            }
            if (!(h.config == cfg.scenario))
                throw ValidationError(path.string() + " was generated with a different scenario config");
        },
        [&](std::size_t, LabeledSample&& s) {
            for (auto& ts : out) ts.add(s);
        });
    return out;
}

EvalResult evaluate(const TrainedModel& m, const TaskSamples& test) {
    EvalResult e;
    e.name = model_name(test.task, test.observer);
    e.samples_per_feature = m.dimension() ? static_cast<double>(m.n_train) / m.dimension() : 0.0;
    if (is_classifier(m.kind)) {
        e.classification = true;
        std::vector<int> pred, actual;
        for (std::size_t i = 0; i < test.size(); ++i) {
            pred.push_back(m.classify(test.x[i]));
            actual.push_back(test.y[i] >= 0.5 ? 1 : -1);
        }
        e.cls = classification_metrics(pred, actual);
    } else {
        std::vector<double> pred;
        for (const auto& x : test.x) pred.push_back(m.predict(x));
        e.reg = regression_metrics(pred, test.y);
    }
    return e;
}

EvalResult evaluate_t_eq(const TrainedModel& m, const TaskSamples& test, const CableSpec& cable) {
    EvalResult e;
    e.name = "t_eq";
    e.samples_per_feature = m.dimension() ? static_cast<double>(m.n_train) / m.dimension() : 0.0;
    std::vector<double> pred, actual;
    for (std::size_t i = 0; i < test.size(); ++i) {
        pred.push_back(t_eq_of(m.predict(test.x[i]), cable));
        actual.push_back(test.labels[i].t_eq);
    }
    e.reg = regression_metrics(pred, actual);
    return e;
}

ClassificationMetrics detection_in_band(const TrainedModel& m, const TaskSamples& test, double lo,
                                        double hi) {
    std::vector<int> pred, actual;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const bool positive = test.y[i] >= 0.5;
        if (positive && !(test.labels[i].gamma_local >= lo && test.labels[i].gamma_local < hi)) continue;
        pred.push_back(m.classify(test.x[i]));
        actual.push_back(positive ? 1 : -1);
    }
    return classification_metrics(pred, actual);
}

TrainedModel train_task(const PipelineConfig& cfg, const TaskSamples& train) {
    const std::string name = model_name(train.task, train.observer);
    if (train.size() == 0) throw InsufficientSamplesError("task " + name + " has no training samples");
    const std::size_t dim = train.x.front().size();
    const double needed = cfg.min_samples_per_feature * static_cast<double>(dim);
    if (static_cast<double>(train.size()) < needed)
        throw InsufficientSamplesError(
            "task " + name + ": n_TR = " + std::to_string(train.size()) + " with " +
            std::to_string(dim) + " features breaks the rule of at least " +
            short_fmt(cfg.min_samples_per_feature) + " training samples per feature (need " +
            std::to_string(static_cast<std::size_t>(std::ceil(needed))) + ")");
    if (classification_task(train.task)) {
        const auto pos = std::count_if(train.y.begin(), train.y.end(), [](double v) { return v >= 0.5; });
        const double frac = static_cast<double>(std::max<std::size_t>(pos, train.size() - pos)) /
                            static_cast<double>(train.size());
        if (frac > cfg.max_majority_fraction)
            throw ValidationError("task " + name + ": majority class holds " + short_fmt(frac) +
                                  " of the training set (bound " +
                                  short_fmt(cfg.max_majority_fraction) + ")");
    }
    return train_model(cfg.model_for(train.task), name, train.names, train.x, train.y,
                       cfg.learner_for(train.task), cfg.scenario.seed);
}

TrainingSet generate_training_set(const PipelineConfig& cfg, std::size_t n, std::uint64_t first) {
    TrainingSet s;
    for (int i = 0; i < modem_count; ++i) {
        s.identify[i] = std::move(generate_task_samples(cfg, cfg.scenario, {Task::identify}, i, n, first)[0]);
        s.branch[i] = std::move(generate_task_samples(cfg, cfg.scenario, {Task::branch}, i, n, first)[0]);
    }
    s.gamma_homo = std::move(generate_task_samples(cfg, cfg.scenario, {Task::gamma_homo}, 0, n, first)[0]);
    auto loc = generate_task_samples(cfg, cfg.scenario, {Task::gamma_local, Task::target, Task::product},
                                     0, n, first);
    s.gamma_local = std::move(loc[0]);
    s.target = std::move(loc[1]);
    s.product = std::move(loc[2]);
    return s;
}

std::vector<std::pair<std::string, std::pair<DatasetKind, int>>> training_set_files(const std::string& split) {
    std::vector<std::pair<std::string, std::pair<DatasetKind, int>>> out;
    for (int i = 0; i < modem_count; ++i)
        out.push_back({"identify_" + plm(i) + "." + split + ".wtds", {DatasetKind::identify, i}});
    for (int i = 0; i < modem_count; ++i)
        out.push_back({"branch_" + plm(i) + "." + split + ".wtds", {DatasetKind::branch, i}});
    out.push_back({"homogeneous." + split + ".wtds", {DatasetKind::homogeneous, 0}});
    out.push_back({"localized." + split + ".wtds", {DatasetKind::localized, 0}});
    return out;
}

void write_training_set(const PipelineConfig& cfg, const std::filesystem::path& dir, const std::string& split,
                        std::size_t n, std::uint64_t first) {
    const auto files = training_set_files(split);
    std::vector<std::exception_ptr> errors(files.size());
    std::size_t next = 0;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            std::size_t k;
            {
                std::lock_guard lock(mu);
                if (next == files.size()) return;
                k = next++;
            }
            try {
                const auto& [name, what] = files[k];
                generate_dataset(cfg.scenario, what.first, what.second, n, dir / name, first);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t j = 0; j < std::min(cfg.jobs, files.size()); ++j) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

TrainingSet read_training_set(const PipelineConfig& cfg, const std::filesystem::path& dir,
                              const std::string& split) {
    TrainingSet s;
    const auto files = training_set_files(split);
    for (int i = 0; i < modem_count; ++i) {
        s.identify[i] = std::move(load_task_samples(cfg, {Task::identify}, dir / files[i].first)[0]);
        s.branch[i] = std::move(load_task_samples(cfg, {Task::branch}, dir / files[modem_count + i].first)[0]);
    }
    s.gamma_homo = std::move(load_task_samples(cfg, {Task::gamma_homo}, dir / files[6].first)[0]);
    auto loc = load_task_samples(cfg, {Task::gamma_local, Task::target, Task::product}, dir / files[7].first);
    s.gamma_local = std::move(loc[0]);
    s.target = std::move(loc[1]);
    s.product = std::move(loc[2]);
    return s;
}

ModelBundle train_pipeline(const TrainingSet& train, const TrainingSet* test, const PipelineConfig& cfg) {
    cfg.validate();
    ModelBundle b;
    b.config = cfg;
    for (int i = 0; i < modem_count; ++i) {
        b.identify[i] = train_task(cfg, train.identify[i]);
        b.branch[i] = train_task(cfg, train.branch[i]);
    }
    b.gamma_homo = train_task(cfg, train.gamma_homo);
    b.gamma_local = train_task(cfg, train.gamma_local);
    b.target = train_task(cfg, train.target);
    b.product = train_task(cfg, train.product);
    if (test) {
        for (int i = 0; i < modem_count; ++i) b.metrics.push_back(evaluate(b.identify[i], test->identify[i]));
        for (int i = 0; i < modem_count; ++i) b.metrics.push_back(evaluate(b.branch[i], test->branch[i]));
        b.metrics.push_back(evaluate(b.gamma_homo, test->gamma_homo));
        b.metrics.push_back(evaluate_t_eq(b.gamma_homo, test->gamma_homo, cfg.scenario.cable));
        b.metrics.push_back(evaluate(b.gamma_local, test->gamma_local));
        b.metrics.push_back(evaluate(b.target, test->target));
        b.metrics.push_back(evaluate(b.product, test->product));
    }
    return b;
}

ModelBundle train_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    const auto train = generate_training_set(cfg, cfg.n_train, 0);
    const auto test = generate_training_set(cfg, cfg.n_test, test_index_offset);
    return train_pipeline(train, &test, cfg);
}

void save_bundle(const std::filesystem::path& dir, const ModelBundle& b) {
    std::filesystem::create_directories(dir);
    json models = json::object();
    auto put = [&](const std::string& name, const TrainedModel& m) {
        const auto file = model_file(name);
        const auto bytes = serialize_model(m);
        save_model(dir / file, m);
        models[name] = {{"file", file},
                        {"fnv1a64", codec::hex64(codec::fnv1a64(std::string_view(
                                        reinterpret_cast<const char*>(bytes.data()), bytes.size())))}};
    };
    for (int i = 0; i < modem_count; ++i) put(model_name(Task::identify, i), b.identify[i]);
    for (int i = 0; i < modem_count; ++i) put(model_name(Task::branch, i), b.branch[i]);
    put("gamma_homo", b.gamma_homo);
    put("gamma_local", b.gamma_local);
    put("target", b.target);
    put("product", b.product);
    json metrics = json::array();
    for (const auto& e : b.metrics) metrics.push_back(eval_json(e));
    const json manifest = {{"format", "wtdiag-bundle"},
                           {"version", kBundleVersion},
                           {"config", to_json(b.config)},
                           {"models", models},
                           {"metrics", metrics}};
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("no model bundle at " + dir.string() + " (manifest.json missing)");
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw FormatError((dir / "manifest.json").string() + ": " + e.what());
    }
    if (manifest.value("format", "") != "wtdiag-bundle") throw FormatError(dir.string() + " is not a model bundle");
    if (manifest.value("version", -1) != kBundleVersion)
        throw VersionMismatchError(dir.string() + ": unsupported bundle version");
    ModelBundle b;
    try {
        b.config = pipeline_config_from_json(manifest.at("config"));
        auto get = [&](const std::string& name) {
            const auto& entry = manifest.at("models").at(name);
            const auto path = dir / entry.at("file").get<std::string>();
            auto m = load_model(path);
            const auto bytes = serialize_model(m);
            const auto sum = codec::hex64(codec::fnv1a64(
                std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size())));
            if (sum != entry.at("fnv1a64").get<std::string>())
                throw FormatError(path.string() + ": checksum does not match the manifest");
            return m;
        };
        for (int i = 0; i < modem_count; ++i) b.identify[i] = get(model_name(Task::identify, i));
        for (int i = 0; i < modem_count; ++i) b.branch[i] = get(model_name(Task::branch, i));
        b.gamma_homo = get("gamma_homo");
        b.gamma_local = get("gamma_local");
        b.target = get("target");
        b.product = get("product");
        for (const auto& e : manifest.at("metrics")) b.metrics.push_back(eval_from_json(e));
    } catch (const json::exception& e) {
        throw FormatError((dir / "manifest.json").string() + ": " + e.what());
    }
    return b;
}

bool DiagnosisReport::consistent() const {
    const bool homo = gamma_homo.has_value() && t_eq.has_value();
    const bool local = gamma_local.has_value() && target_m.has_value() && lwt_m.has_value() && branch.has_value();
    const bool any_homo = gamma_homo.has_value() || t_eq.has_value();
    const bool any_local = gamma_local.has_value() || target_m.has_value() || lwt_m.has_value() || branch.has_value();
    if (profile == ProfileType::homogeneous) return homo && !any_local;
    return local && !any_homo && *lwt_m > 0.0;
}

double length_from_product(double product, double gamma_local) {
    if (!(gamma_local > 0.0)) throw DomainError("gamma_local must be positive to recover the LD length");
    return product / gamma_local;
}

std::string branch_name(int branch) {
    if (branch < 0 || branch >= branch_count) return "none";
    const int m = branch_modem(branch);
    return branch < modem_count ? plm(m) + "-BP" : plm(m) + "-BE" + std::to_string(m + 1);
}

DiagnosisReport diagnose(const std::vector<ChannelObservation>& obs, const ModelBundle& b) {
    if (obs.size() != static_cast<std::size_t>(modem_count))
        throw ValidationError("diagnosis needs one observation from each of the three PLMs");
    for (int i = 0; i < modem_count; ++i)
        if (obs[i].observer != i)
            throw ValidationError("observation " + std::to_string(i) + " belongs to " + plm(obs[i].observer));
    const auto& cfg = b.config;
    DiagnosisReport r;

    const auto s1 = cfg.spec_for(Task::identify);
    for (int i = 0; i < modem_count; ++i) {
        const auto fv = build_features(obs[i], s1);
        r.scores[i] = b.identify[i].predict(fv.values);
        r.votes[i] = r.scores[i] >= 0.0;
        r.provenance.push_back("stage1 " + plm(i) + " " + to_string(b.identify[i].kind) + " score " +
                               short_fmt(r.scores[i]) + " -> " + (r.votes[i] ? "LD" : "no LD"));
    }
    const int n_votes = static_cast<int>(std::count(r.votes.begin(), r.votes.end(), true));

    if (n_votes == 0) {
        const auto spec = cfg.spec_for(Task::gamma_homo);
        double sum = 0.0;
        for (int i = 0; i < modem_count; ++i) sum += b.gamma_homo.predict(build_features(obs[i], spec).values);
        const double gamma = std::clamp(sum / modem_count, 0.0, 1.0);
        r.profile = ProfileType::homogeneous;
        r.gamma_homo = gamma;
        r.t_eq = t_eq_of(gamma, cfg.scenario.cable);
        r.provenance.push_back("homogeneous path: gamma_homo averaged over 3 PLMs = " + short_fmt(gamma));
        r.provenance.push_back("t_eq from nominal ageing parameters = " + short_fmt(*r.t_eq) + " s");
        return r;
    }
    if (n_votes == modem_count)
        throw AmbiguousDiagnosisError("stage-1 votes conflict: every PLM reports an LD",
                                      std::vector<bool>(r.votes.begin(), r.votes.end()));

    int i = -1;
    for (int k = 0; k < modem_count; ++k)
        if (r.votes[k] && (i < 0 || r.scores[k] > r.scores[i])) i = k;
    if (n_votes > 1)
        r.provenance.push_back("two PLMs report an LD; " + plm(i) + " has the larger score and is taken as nearest");
    const int j = partner_of(i);
    const auto fb = build_features(obs[j], cfg.spec_for(Task::branch));
    const double bscore = b.branch[i].predict(fb.values);
    const int branch = bscore >= 0.0 ? bp_branch(i) : be_branch(i);
    r.profile = ProfileType::localized;
    r.branch = branch;
    r.provenance.push_back("stage2 confirmer " + plm(j) + " score " + short_fmt(bscore) + " -> " +
                           branch_name(branch));
    if (branch == be_branch(i))
        r.provenance.push_back("LD on a BE branch: " + plm(i) +
                               " regressors trained on BP-branch LDs applied unchanged");

    const auto fl = build_features(obs[i], cfg.spec_for(Task::gamma_local)).values;
    const double g = std::clamp(b.gamma_local.predict(fl), cfg.scenario.gamma_local.lo, 1.0);
    const double target = std::max(0.0, b.target.predict(build_features(obs[i], cfg.spec_for(Task::target)).values));
    const double product = b.product.predict(build_features(obs[i], cfg.spec_for(Task::product)).values);
    const double floor = cfg.scenario.lwt.lo * cfg.scenario.gamma_local.lo * 1e-3;
    r.gamma_local = g;
    r.target_m = target;
    r.lwt_m = length_from_product(std::max(product, floor), g);
    r.provenance.push_back("regressions at " + plm(i) + ": gamma_local " + short_fmt(g) + ", target " +
                           short_fmt(target) + " m, product " + short_fmt(product) + " m");
    return r;
}

std::string to_text(const DiagnosisReport& r) {
    std::ostringstream os;
    os << "profile: " << (r.profile == ProfileType::homogeneous ? "homogeneous" : "localized") << '\n';
    os << "stage-1 votes:";
    for (int i = 0; i < modem_count; ++i)
        os << ' ' << plm(i) << '=' << (r.votes[i] ? "LD" : "none") << " (" << short_fmt(r.scores[i]) << ')';
    os << '\n';
    if (r.profile == ProfileType::homogeneous) {
        os << "gamma_homo: " << short_fmt(*r.gamma_homo) << '\n';
        os << "t_eq: " << short_fmt(*r.t_eq) << " s (" << short_fmt(*r.t_eq / constants::seconds_per_year)
           << " years)\n";
    } else {
        os << "branch: " << branch_name(*r.branch) << '\n';
        os << "gamma_local: " << short_fmt(*r.gamma_local) << '\n';
        os << "target: " << short_fmt(*r.target_m) << " m\n";
        os << "length: " << short_fmt(*r.lwt_m) << " m\n";
    }
    os << "log:\n";
    for (const auto& p : r.provenance) os << "  " << p << '\n';
    return os.str();
}

std::string to_line(const DiagnosisReport& r) {
    std::ostringstream os;
    os << "profile=" << (r.profile == ProfileType::homogeneous ? "homogeneous" : "localized");
    os << " votes=" << r.votes[0] << ',' << r.votes[1] << ',' << r.votes[2];
    os << " scores=" << fmt(r.scores[0]) << ',' << fmt(r.scores[1]) << ',' << fmt(r.scores[2]);
    if (r.gamma_homo) os << " gamma_homo=" << fmt(*r.gamma_homo);
    if (r.t_eq) os << " t_eq=" << fmt(*r.t_eq);
    if (r.branch) os << " branch=" << *r.branch;
    if (r.gamma_local) os << " gamma_local=" << fmt(*r.gamma_local);
    if (r.target_m) os << " target_m=" << fmt(*r.target_m);
    if (r.lwt_m) os << " lwt_m=" << fmt(*r.lwt_m);
    return os.str();
}

DiagnosisReport report_from_line(const std::string& line) {
    DiagnosisReport r;
    std::istringstream is(line);
    std::string tok;
    auto triple = [](const std::string& v, auto conv) {
        std::array<decltype(conv(std::string())), modem_count> out{};
        std::istringstream vs(v);
        std::string item;
        int k = 0;
        while (std::getline(vs, item, ',')) {
            if (k >= modem_count) throw FormatError("too many entries in '" + v + "'");
            out[k++] = conv(item);
        }
        if (k != modem_count) throw FormatError("expected three entries in '" + v + "'");
        return out;
    };
    bool has_profile = false;
    try {
        while (is >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw FormatError("report token '" + tok + "' lacks '='");
            const auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
            if (key == "profile") {
                has_profile = true;
                if (val == "homogeneous") r.profile = ProfileType::homogeneous;
                else if (val == "localized") r.profile = ProfileType::localized;
                else throw FormatError("unknown profile '" + val + "'");
            } else if (key == "votes") {
                const auto v = triple(val, [](const std::string& s) { return std::stoi(s) != 0; });
                std::copy(v.begin(), v.end(), r.votes.begin());
            } else if (key == "scores") {
                r.scores = triple(val, [](const std::string& s) { return std::stod(s); });
            } else if (key == "gamma_homo") r.gamma_homo = std::stod(val);
            else if (key == "t_eq") r.t_eq = std::stod(val);
            else if (key == "branch") r.branch = std::stoi(val);
            else if (key == "gamma_local") r.gamma_local = std::stod(val);
            else if (key == "target_m") r.target_m = std::stod(val);
            else if (key == "lwt_m") r.lwt_m = std::stod(val);
            else throw FormatError("unknown report key '" + key + "'");
        }
    } catch (const std::logic_error& e) {
        throw FormatError("malformed report line: " + std::string(e.what()));
    }
    if (!has_profile) throw FormatError("report line lacks a profile");
    return r;
}

SweepTable ntr_sweep(Task task, const std::vector<std::size_t>& grid, std::size_t n_test,
                     const PipelineConfig& cfg, double delta) {
    if (grid.empty()) throw ValidationError("sweep grid is empty");
    cfg.validate();
    SweepTable t;
    t.task = task;
    const bool cls = classification_task(task);
    t.metric_name = cls ? "detection" : "r2";
    const auto test = generate_task_samples(cfg, cfg.scenario, {task}, 0, n_test, test_index_offset)[0];
    const std::uint64_t stride = 1'000'000;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto train = generate_task_samples(cfg, cfg.scenario, {task}, 0, grid[k], k * stride)[0];
        const auto model = train_task(cfg, train);
        const auto e = evaluate(model, test);
        SweepRow row;
        row.n_train = grid[k];
        row.metric = cls ? e.cls.detection : e.reg.r2;
        row.secondary = cls ? e.cls.false_alarm : e.reg.slope;
        t.rows.push_back(row);
    }
    const double final_value = t.rows.back().metric;
    for (auto& row : t.rows) {
        row.saturated = std::abs(row.metric - final_value) <= delta;
        if (row.saturated && !t.saturation_n) t.saturation_n = row.n_train;
    }
    return t;
}

RobustnessReport robustness_eval(const ModelBundle& b, const PerturbationSpec& p, std::size_t n_test) {
    if (!(p.magnitude.lo > 0.0) || !(p.loss_tangent.lo > 0.0))
        throw ValidationError("perturbation factors must be positive");
    RobustnessReport r;
    r.perturbation = p;
    const auto& cfg = b.config;
    auto run = [&](const ScenarioConfig& sc, std::vector<EvalResult>& out) {
        const auto homo = generate_task_samples(cfg, sc, {Task::gamma_homo}, 0, n_test, test_index_offset)[0];
        const auto loc = generate_task_samples(cfg, sc, {Task::gamma_local, Task::target, Task::product}, 0,
                                               n_test, test_index_offset);
        out.push_back(evaluate_t_eq(b.gamma_homo, homo, sc.cable));
        out.push_back(evaluate(b.gamma_local, loc[0]));
        out.push_back(evaluate(b.target, loc[1]));
        out.push_back(evaluate(b.product, loc[2]));
    };
    run(cfg.scenario, r.nominal);
    auto perturbed = cfg.scenario;
    perturbed.eps_wt_magnitude = p.magnitude;
    perturbed.eps_wt_loss_tangent = p.loss_tangent;
    run(perturbed, r.perturbed);
    return r;
}

}  // namespace wtdiag
