#include "figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>

#include "wtdiag/error.hpp"

namespace wtdiag::cli {

namespace {

constexpr std::size_t kTraceSamples = 1024;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

struct Band {
    double lo, hi;
};

std::vector<Band> gamma_bands(const ScenarioConfig& sc) {
    std::vector<Band> out;
    const int n = 9;
    for (int i = 0; i < n; ++i) {
        const double lo = sc.gamma_local.lo + (sc.gamma_local.hi - sc.gamma_local.lo) * i / n;
        const double hi = sc.gamma_local.lo + (sc.gamma_local.hi - sc.gamma_local.lo) * (i + 1) / n;
        out.push_back({lo, i + 1 == n ? hi + 1e-12 : hi});
    }
    return out;
}

TaskSamples samples(const PipelineConfig& pc, Task t, std::size_t n, bool test) {
    return generate_task_samples(pc, pc.scenario, {t}, 0, n, test ? test_index_offset : 0)[0];
}

void trace_figure(const std::string& example, std::ostream& csv, std::ostream& log) {
    const auto scn = example_scenario(example);
    const auto obs = solve_network(scn, 0);
    const auto views = channel_views(obs);
    const auto& j = views.jtfdr;
    double a_jtfdr = 0.0, a_ref = 0.0;
    for (std::size_t n = 0; n < 8; ++n) {
        a_jtfdr = std::max(a_jtfdr, std::abs(j.samples[n]));
        a_ref = std::max(a_ref, std::abs(views.h_ref[n]));
    }
    csv << "n,t_us,h_jtfdr,neg_abs_h_ref\n";
    for (std::size_t n = 0; n < std::min(kTraceSamples, j.samples.size()); ++n)
        csv << n << ',' << num(n * j.dt * 1e6) << ',' << num(j.samples[n] / a_jtfdr) << ','
            << num(-std::abs(views.h_ref[n]) / a_ref) << '\n';
    log << example << ": " << j.peaks.size() << " envelope peaks\n";
    for (const auto& p : j.peaks)
        if (p.index < kTraceSamples) log << "  n=" << num(p.position) << " a=" << num(p.magnitude / a_jtfdr) << '\n';
}

void fig7(const RunConfig& cfg, std::ostream& csv, std::ostream& log) {
    csv << "feature_set,algorithm,gamma_lo,gamma_hi,detection,false_alarm,positives\n";
    for (FeatureSet set : {FeatureSet::jtfdr, FeatureSet::href}) {
        auto pc = cfg.pipeline;
        pc.stage1_features = set;
        const auto train = samples(pc, Task::identify, pc.n_train, false);
        const auto test = samples(pc, Task::identify, pc.n_test, true);
        for (ModelKind kind : {ModelKind::adaboost, ModelKind::svc}) {
            pc.stage1_model = kind;
            log << "identify: " << to_string(set) << " / " << to_string(kind) << '\n';
            const auto model = train_task(pc, train);
            for (const auto& b : gamma_bands(pc.scenario)) {
                const auto m = detection_in_band(model, test, b.lo, b.hi);
                csv << to_string(set) << ',' << to_string(kind) << ',' << num(b.lo) << ','
                    << num(std::min(b.hi, pc.scenario.gamma_local.hi)) << ',' << num(m.detection) << ','
                    << num(m.false_alarm) << ',' << m.positives << '\n';
            }
        }
    }
}

void scatter(std::ostream& csv, const std::string& panel, const TrainedModel& m, const TaskSamples& test,
             const std::function<double(double)>& map = {}, const std::function<double(const Labels&)>& actual = {}) {
    for (std::size_t i = 0; i < test.size(); ++i) {
        double p = m.predict(test.x[i]);
        if (map) p = map(p);
        const double a = actual ? actual(test.labels[i]) : test.y[i];
        csv << panel << ',' << num(a) << ',' << num(p) << '\n';
    }
}

double years(double seconds) { return seconds / constants::seconds_per_year; }

double t_eq_years(double gamma, const CableSpec& cable) {
    return years(equivalent_age(std::max(gamma, 0.0) * cable.r_insul, max_field(cable), MaterialParams::nominal()));
}

void fig8(const RunConfig& cfg, std::ostream& csv, std::ostream& log) {
    const auto& pc = cfg.pipeline;
    csv << "panel,actual,predicted\n";
    log << "gamma_homo regressor\n";
    const auto homo = samples(pc, Task::gamma_homo, pc.n_train, false);
    const auto homo_test = samples(pc, Task::gamma_homo, pc.n_test, true);
    const auto mh = train_task(pc, homo);
    const auto cable = pc.scenario.cable;
    scatter(csv, "t_eq_years", mh, homo_test, [&](double g) { return t_eq_years(g, cable); },
            [](const Labels& l) { return years(l.t_eq); });
    log << "gamma_local regressor\n";
    const auto loc = samples(pc, Task::gamma_local, pc.n_train, false);
    const auto loc_test = samples(pc, Task::gamma_local, pc.n_test, true);
    scatter(csv, "gamma_local", train_task(pc, loc), loc_test);
}

void fig9(const RunConfig& cfg, std::ostream& csv, std::ostream& log) {
    const auto& pc = cfg.pipeline;
    const int observer = 0, confirmer = partner_of(observer);
    auto base_spec = pc.spec_for(Task::identify);
    base_spec.set = FeatureSet::jtfdr;
    auto build = [&](std::size_t n, std::uint64_t first) {
        std::array<TaskSamples, 2> out;
        out[0].task = out[1].task = Task::branch;
        out[1].spec = pc.spec_for(Task::branch);
        generate_samples(pc.scenario, DatasetKind::branch, observer, n, [&](std::size_t, LabeledSample&& s) {
            const auto& obs = s.observation(confirmer);
            const double y = task_label(Task::branch, observer, s.labels);
            auto base = build_features(obs, base_spec);
            auto ext = build_features(obs, out[1].spec);
            out[0].names = base.names;
            out[1].names = ext.names;
            out[0].x.push_back(std::move(base.values));
            out[1].x.push_back(std::move(ext.values));
            for (auto& t : out) {
                t.y.push_back(y);
                t.labels.push_back(s.labels);
            }
        }, first);
        return out;
    };
    log << "branch location samples\n";
    const auto train = build(pc.n_train, 0);
    const auto test = build(pc.n_test, test_index_offset);
    csv << "features,gamma_lo,gamma_hi,detection,false_alarm,samples\n";
    const char* names[] = {"identification_set", "with_variance"};
    for (int k = 0; k < 2; ++k) {
        log << "branch location: " << names[k] << '\n';
        const auto model = train_task(pc, train[k]);
        for (const auto& b : gamma_bands(pc.scenario)) {
            std::vector<int> pred, actual;
            for (std::size_t i = 0; i < test[k].size(); ++i) {
                const double g = test[k].labels[i].gamma_local;
                if (g < b.lo || g >= b.hi) continue;
                pred.push_back(model.classify(test[k].x[i]));
                actual.push_back(test[k].y[i] >= 0.5 ? 1 : -1);
            }
            const auto m = classification_metrics(pred, actual);
            csv << names[k] << ',' << num(b.lo) << ',' << num(std::min(b.hi, pc.scenario.gamma_local.hi)) << ','
                << num(m.detection) << ',' << num(m.false_alarm) << ',' << pred.size() << '\n';
        }
    }
}

void fig10(const RunConfig& cfg, std::ostream& csv, std::ostream& log) {
    const auto& pc = cfg.pipeline;
    const std::vector<Task> tasks{Task::gamma_local, Task::target, Task::product};
    const auto train = generate_task_samples(pc, pc.scenario, tasks, 0, pc.n_train, 0);
    const auto test = generate_task_samples(pc, pc.scenario, tasks, 0, pc.n_test, test_index_offset);
    log << "gamma_local, target and product regressors\n";
    const auto mg = train_task(pc, train[0]);
    const auto mt = train_task(pc, train[1]);
    const auto mp = train_task(pc, train[2]);
    csv << "panel,actual,predicted\n";
    scatter(csv, "target_m", mt, test[1]);
    scatter(csv, "product_m", mp, test[2]);
    for (std::size_t i = 0; i < test[2].size(); ++i) {
        const double g = std::clamp(mg.predict(test[0].x[i]), pc.scenario.gamma_local.lo, 1.0);
        const double p = std::max(mp.predict(test[2].x[i]), 1e-3);
        csv << "length_m," << num(test[2].labels[i].lwt_m) << ',' << num(length_from_product(p, g)) << '\n';
    }
}

void fig11(const RunConfig& cfg, std::ostream& csv, std::ostream& log) {
    auto pc = cfg.pipeline;
    const auto train = samples(pc, Task::gamma_local, pc.n_train, false);
    const auto test = samples(pc, Task::gamma_local, pc.n_test, true);
    csv << "model,actual,predicted\n";
    pc.gamma_local_model = ModelKind::svr;
    for (KernelType k : {KernelType::linear, KernelType::rbf}) {
        pc.learner.svm.kernel = k;
        log << "gamma_local: svr " << to_string(k) << '\n';
        scatter(csv, "svr_" + to_string(k), train_task(pc, train), test);
    }
}

void fig12(const RunConfig& cfg, std::ostream& csv, std::ostream& log) {
    const auto& pc = cfg.pipeline;
    log << "nominal training\n";
    const auto homo = samples(pc, Task::gamma_homo, pc.n_train, false);
    const auto target = samples(pc, Task::target, pc.n_train, false);
    const auto mh = train_task(pc, homo);
    const auto mt = train_task(pc, target);
    auto perturbed = pc.scenario;
    perturbed.eps_wt_loss_tangent = PerturbationSpec{}.loss_tangent;
    csv << "panel,condition,actual,predicted\n";
    for (const auto& [cond, sc] : {std::pair{"nominal", pc.scenario}, std::pair{"perturbed", perturbed}}) {
        log << cond << " test set\n";
        const auto th = generate_task_samples(pc, sc, {Task::gamma_homo}, 0, pc.n_test, test_index_offset)[0];
        const auto tt = generate_task_samples(pc, sc, {Task::target}, 0, pc.n_test, test_index_offset)[0];
        for (std::size_t i = 0; i < th.size(); ++i)
            csv << "t_eq_years," << cond << ',' << num(years(th.labels[i].t_eq)) << ','
                << num(t_eq_years(mh.predict(th.x[i]), sc.cable)) << '\n';
        for (std::size_t i = 0; i < tt.size(); ++i)
            csv << "target_m," << cond << ',' << num(tt.y[i]) << ',' << num(mt.predict(tt.x[i])) << '\n';
    }
}

void sweep_figure(Task task, const RunConfig& cfg, const std::vector<std::size_t>& grid, std::ostream& csv,
                  std::ostream& log) {
    log << "n_TR sweep for " << to_string(task) << '\n';
    const auto t = ntr_sweep(task, grid, cfg.pipeline.n_test, cfg.pipeline);
    const bool cls = t.metric_name == "detection";
    csv << "n_train," << t.metric_name << ',' << (cls ? "false_alarm" : "slope") << ",saturated\n";
    for (const auto& r : t.rows)
        csv << r.n_train << ',' << num(r.metric) << ',' << num(r.secondary) << ',' << (r.saturated ? 1 : 0) << '\n';
}

struct Figure {
    std::string description;
    std::function<void(const RunConfig&, const std::vector<std::size_t>&, std::ostream&, std::ostream&)> run;
};

const std::map<std::string, Figure>& figures() {
    static const std::map<std::string, Figure> f = {
        {"fig5", {"h_jtfdr and -|h_ref| at PLM1, LD 211-377 m on PLM1-BP: n,t_us,h_jtfdr,neg_abs_h_ref",
                  [](auto&, auto&, auto& c, auto& l) { trace_figure("near-ld", c, l); }}},
        {"fig6", {"same traces at PLM1 with the LD on PLM2-BP: n,t_us,h_jtfdr,neg_abs_h_ref",
                  [](auto&, auto&, auto& c, auto& l) { trace_figure("far-ld", c, l); }}},
        {"fig7", {"LD identification per gamma_local band: feature_set,algorithm,gamma_lo,gamma_hi,detection,"
                  "false_alarm,positives",
                  [](auto& r, auto&, auto& c, auto& l) { fig7(r, c, l); }}},
        {"fig8", {"severity scatter (t_eq in years, gamma_local): panel,actual,predicted",
                  [](auto& r, auto&, auto& c, auto& l) { fig8(r, c, l); }}},
        {"fig9", {"branch location per gamma_local band: features,gamma_lo,gamma_hi,detection,false_alarm,samples",
                  [](auto& r, auto&, auto& c, auto& l) { fig9(r, c, l); }}},
        {"fig10", {"target, product and derived length scatter: panel,actual,predicted",
                   [](auto& r, auto&, auto& c, auto& l) { fig10(r, c, l); }}},
        {"fig11", {"gamma_local with linear and rbf SVR: model,actual,predicted",
                   [](auto& r, auto&, auto& c, auto& l) { fig11(r, c, l); }}},
        {"fig12", {"robustness under loss-tangent perturbation: panel,condition,actual,predicted",
                   [](auto& r, auto&, auto& c, auto& l) { fig12(r, c, l); }}},
        {"fig15", {"n_TR sweep, LD identification: n_train,detection,false_alarm,saturated",
                   [](auto& r, auto& g, auto& c, auto& l) { sweep_figure(Task::identify, r, g, c, l); }}},
        {"fig16", {"n_TR sweep, gamma_homo: n_train,r2,slope,saturated",
                   [](auto& r, auto& g, auto& c, auto& l) { sweep_figure(Task::gamma_homo, r, g, c, l); }}},
        {"fig17", {"n_TR sweep, gamma_local: n_train,r2,slope,saturated",
                   [](auto& r, auto& g, auto& c, auto& l) { sweep_figure(Task::gamma_local, r, g, c, l); }}},
    };
    return f;
}

const Figure& find(const std::string& id) {
    const auto& f = figures();
    const auto it = f.find(id);
    if (it == f.end()) {
        std::string all;
        for (const auto& i : figure_ids()) all += (all.empty() ? "" : ", ") + i;
        throw ValidationError("unknown figure id '" + id + "' (valid: " + all + ")");
    }
    return it->second;
}

}  // namespace

std::vector<std::string> figure_ids() {
    std::vector<std::string> ids;
    for (const auto& [k, v] : figures()) ids.push_back(k);
    std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
        return std::stoi(a.substr(3)) < std::stoi(b.substr(3));
    });
    return ids;
}

std::string figure_description(const std::string& id) { return find(id).description; }

void reproduce(const std::string& id, const RunConfig& cfg, const std::vector<std::size_t>& grid,
               std::ostream& csv, std::ostream& log) {
    const auto& f = find(id);
    cfg.validate();
    f.run(cfg, grid, csv, log);
}

}  // namespace wtdiag::cli
