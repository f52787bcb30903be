#include "wtdiag/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "wtdiag/error.hpp"

namespace wtdiag {

namespace {

constexpr int kMaxPlacementAttempts = 16;

void check_range(const Range& r, const char* name) {
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
        throw ValidationError(std::string(name) + ": expected finite lo <= hi");
}

void check_within(const Range& r, double lo, double hi, const char* name) {
    check_range(r, name);
    if (r.lo < lo || r.hi > hi)
        throw ValidationError(std::string(name) + " must lie within [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
}

struct Common {
    double gamma_homo;
    std::array<Complex, modem_count> loads;
    PermittivityPerturbation perturbation;
};

Common draw_common(const ScenarioConfig& cfg, SampleRng& rng) {
    Common c;
    c.gamma_homo = rng.uniform(cfg.gamma_homo);
    for (auto& z : c.loads) {
        const double re = rng.uniform(cfg.load_re);
        const double im = rng.uniform(cfg.load_im);
        z = {re, im};
    }
    c.perturbation.magnitude = rng.uniform(cfg.eps_wt_magnitude);
    c.perturbation.loss_tangent = rng.uniform(cfg.eps_wt_loss_tangent);
    return c;
}

NetworkScenario assemble(const ScenarioConfig& cfg, const Common& c, std::uint64_t seed) {
    NetworkScenario s;
    s.branch_length = cfg.branch_length;
    for (auto& a : s.aging) a.gamma_homo = c.gamma_homo;
    s.be_load = c.loads;
    s.z_plm = {cfg.z_plm, 0.0};
    s.estimation_noise = cfg.estimation_noise;
    s.cable = cfg.cable;
    s.material = cfg.material;
    s.perturbation = c.perturbation;
    s.seed = seed;
    return s;
}

// LD centred within `center_offset` of the branch middle, shifted to lie wholly inside.
void place_ld(const ScenarioConfig& cfg, SampleRng& rng, NetworkScenario& s, int branch) {
    const double length = s.branch_length[branch];
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
        const double gamma = rng.uniform(cfg.gamma_local);
        const double lwt = rng.uniform(cfg.lwt);
        const double centre = length / 2.0 + rng.uniform(cfg.center_offset);
        if (lwt > length) continue;
        const double start = std::clamp(centre - lwt / 2.0, 0.0, length - lwt);
        s.aging[branch].local = LocalDegradation{gamma, start, lwt};
        return;
    }
    throw GeometryError("could not place a localized degradation of the configured length on branch " +
                        std::to_string(branch));
}

}  // namespace

std::string to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::identify: return "identify";
        case DatasetKind::branch: return "branch";
        case DatasetKind::homogeneous: return "homogeneous";
        case DatasetKind::localized: return "localized";
    }
    return "?";
}

DatasetKind dataset_kind_from_string(const std::string& s) {
    if (s == "identify") return DatasetKind::identify;
    if (s == "branch") return DatasetKind::branch;
    if (s == "homogeneous") return DatasetKind::homogeneous;
    if (s == "localized") return DatasetKind::localized;
    throw ValidationError("unknown dataset kind '" + s +
                          "' (expected identify, branch, homogeneous, localized)");
}

void ScenarioConfig::validate() const {
    check_within(gamma_homo, 0.0, 0.05, "gamma_homo");
    check_within(gamma_local, 0.1, 1.0, "gamma_local");
    if (!(gamma_local.lo > gamma_homo.hi))
        throw ValidationError("gamma_local must exceed gamma_homo");
    check_range(lwt, "lwt");
    if (!(lwt.lo > 0.0)) throw ValidationError("lwt must be positive");
    check_range(center_offset, "center_offset");
    check_range(load_re, "load_re");
    if (load_re.lo < 0.0) throw ValidationError("load_re must be non-negative (passive loads)");
    check_range(load_im, "load_im");
    check_range(eps_wt_magnitude, "eps_wt_magnitude");
    check_range(eps_wt_loss_tangent, "eps_wt_loss_tangent");
    if (!(eps_wt_magnitude.lo > 0.0) || !(eps_wt_loss_tangent.lo > 0.0))
        throw ValidationError("permittivity perturbation factors must be positive");
    for (double l : branch_length)
        if (!(l > 0.0)) throw ValidationError("branch_length must be positive");
    if (!(ld_probability >= 0.0 && ld_probability <= 1.0))
        throw ValidationError("ld_probability must lie in [0,1]");
    if (!(far_ld_fraction >= 0.0 && far_ld_fraction <= 1.0))
        throw ValidationError("far_ld_fraction must lie in [0,1]");
    if (!(estimation_noise >= 0.0)) throw ValidationError("estimation_noise must be non-negative");
    if (!(z_plm > 0.0)) throw ValidationError("z_plm must be positive");
    try {
        cable.validate();
        material.validate();
    } catch (const Error& e) {
        throw ValidationError(e.what());
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

SampleRng::SampleRng(std::uint64_t seed, std::uint64_t index)
    : engine_(splitmix64(splitmix64(seed) ^ (index * 0xd1342543de82ef95ULL + 1))) {}

double SampleRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double SampleRng::uniform(const Range& r) { return r.lo + (r.hi - r.lo) * uniform(); }

std::size_t SampleRng::pick(std::size_t n) {
    return std::min(static_cast<std::size_t>(uniform() * static_cast<double>(n)), n - 1);
}

NetworkScenario sample_scenario(const ScenarioConfig& cfg, std::uint64_t draw_index) {
    cfg.validate();
    SampleRng rng(cfg.seed, draw_index);
    const Common c = draw_common(cfg, rng);
    NetworkScenario s = assemble(cfg, c, splitmix64(cfg.seed ^ draw_index));
    if (rng.uniform() < cfg.ld_probability)
        place_ld(cfg, rng, s, static_cast<int>(rng.pick(branch_count)));
    return s;
}

NetworkScenario sample_task_scenario(const ScenarioConfig& cfg, DatasetKind kind, int observer,
                                     std::uint64_t draw_index) {
    cfg.validate();
    if (observer < 0 || observer >= modem_count) throw ValidationError("observer must be 0, 1 or 2");
    SampleRng rng(cfg.seed, draw_index);
    const Common c = draw_common(cfg, rng);
    NetworkScenario s = assemble(cfg, c, splitmix64(cfg.seed ^ draw_index));

    const double coin = rng.uniform();
    const bool positive = cfg.balance ? draw_index % 2 == 0 : coin < cfg.ld_probability;
    switch (kind) {
        case DatasetKind::homogeneous:
            break;
        case DatasetKind::localized:
            place_ld(cfg, rng, s, bp_branch(observer));
            break;
        case DatasetKind::branch:
            place_ld(cfg, rng, s, positive ? bp_branch(observer) : be_branch(observer));
            break;
        case DatasetKind::identify: {
            if (positive) {
                const int b = rng.pick(2) == 0 ? bp_branch(observer) : be_branch(observer);
                place_ld(cfg, rng, s, b);
            } else if (rng.uniform() < cfg.far_ld_fraction) {
                std::vector<int> far;
                for (int b = 0; b < branch_count; ++b)
                    if (branch_modem(b) != observer) far.push_back(b);
                place_ld(cfg, rng, s, far[rng.pick(far.size())]);
            }
            break;
        }
    }
    return s;
}

Labels derive_labels(const NetworkScenario& scn) {
    Labels l;
    l.ld_branch = scn.ld_branch();
    l.ld_present = l.ld_branch >= 0;
    l.gamma_homo = scn.aging[0].gamma_homo;
    l.t_eq = equivalent_age(l.gamma_homo * scn.cable.r_insul, max_field(scn.cable),
                            MaterialParams::nominal());
    if (l.ld_present) {
        const auto& ld = *scn.aging[l.ld_branch].local;
        l.gamma_local = ld.gamma;
        l.target_m = ld.start_m;
        l.lwt_m = ld.length_m;
        l.product = ld.length_m * ld.gamma;
    }
    return l;
}

const ChannelObservation& LabeledSample::observation(int modem) const {
    for (const auto& o : observations)
        if (o.observer == modem) return o;
    throw MissingObservationError("sample has no observation at modem " + std::to_string(modem + 1));
}

bool LabeledSample::has_observation(int modem) const {
    return std::any_of(observations.begin(), observations.end(),
                       [&](const ChannelObservation& o) { return o.observer == modem; });
}

std::vector<int> observed_modems(DatasetKind kind, int observer) {
    if (kind == DatasetKind::branch) return {observer, partner_of(observer)};
    return {observer};
}

LabeledSample make_sample(const NetworkScenario& scn, const std::vector<int>& modems,
                          const FrequencyGrid& grid) {
    LabeledSample out;
    out.scenario = scn;
    out.labels = derive_labels(scn);
    if (modems.size() == 1) {
        out.observations.push_back(solve_network(scn, modems[0], grid));
    } else if (!modems.empty()) {
        auto all = solve_all(scn, grid);
        for (int m : modems) out.observations.push_back(all.at(m));
    }
    return out;
}

void generate_samples(const ScenarioConfig& cfg, DatasetKind kind, int observer, std::size_t n,
                      const std::function<void(std::size_t, LabeledSample&&)>& sink,
                      std::uint64_t first) {
    const auto modems = observed_modems(kind, observer);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t index = first + i;
        sink(i, make_sample(sample_task_scenario(cfg, kind, observer, index), modems));
    }
}

NetworkScenario example_scenario(const std::string& name) {
    NetworkScenario s;
    if (name == "healthy") return s;
    if (name == "homogeneous") {
        for (auto& a : s.aging) a.gamma_homo = 0.03;
        return s;
    }
    if (name == "near-ld" || name == "far-ld") {
        s.aging[bp_branch(name == "near-ld" ? 0 : 1)].local = LocalDegradation{0.1, 211.0, 166.0};
        return s;
    }
    std::string all;
    for (const auto& n : example_scenario_names()) all += (all.empty() ? "" : ", ") + n;
    throw ValidationError("unknown example scenario '" + name + "' (expected " + all + ")");
}

std::vector<std::string> example_scenario_names() { return {"healthy", "homogeneous", "near-ld", "far-ld"}; }

}  // namespace wtdiag
