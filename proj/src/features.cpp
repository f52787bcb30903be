#include "wtdiag/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wtdiag/error.hpp"

namespace wtdiag {

namespace {

// Samples after the port within which a peak is the origin lobe.
constexpr double kOriginGate = 5.0;

void append_moments(FeatureVector& fv, std::span<const double> x, const std::string& prefix) {
    static const char* suffix[] = {".mean", ".m2", ".m3", ".m4"};
    const auto m = moments(x);
    for (int i = 0; i < 4; ++i) {
        fv.values.push_back(m[i]);
        fv.names.push_back(prefix + suffix[i]);
    }
}

void append_peaks(FeatureVector& fv, std::span<const Peak> peaks, double dt, const FeatureSpec& spec,
                  const std::string& prefix) {
    const auto v = peak_features(peaks, dt, spec.k, spec.order);
    for (std::size_t i = 0; i < spec.k; ++i) {
        fv.values.push_back(v[2 * i]);
        fv.names.push_back(prefix + ".peak" + std::to_string(i + 1) + ".t");
        fv.values.push_back(v[2 * i + 1]);
        fv.names.push_back(prefix + ".peak" + std::to_string(i + 1) + ".a");
    }
}

std::vector<double> magnitude(std::span<const Complex> h) {
    std::vector<double> out(h.size());
    std::transform(h.begin(), h.end(), out.begin(), [](Complex z) { return std::abs(z); });
    return out;
}

std::vector<double> absolute(std::span<const double> x) {
    std::vector<double> out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), [](double v) { return std::abs(v); });
    return out;
}

}  // namespace

std::string to_string(Task t) {
    switch (t) {
        case Task::identify: return "identify";
        case Task::branch: return "branch";
        case Task::gamma_homo: return "gamma_homo";
        case Task::gamma_local: return "gamma_local";
        case Task::target: return "target";
        case Task::product: return "product";
    }
    return "?";
}

Task task_from_string(const std::string& s) {
    for (Task t : {Task::identify, Task::branch, Task::gamma_homo, Task::gamma_local, Task::target,
                   Task::product})
        if (to_string(t) == s) return t;
    throw ValidationError("unknown task '" + s +
                          "' (expected identify, branch, gamma_homo, gamma_local, target, product)");
}

std::string to_string(FeatureSet f) {
    switch (f) {
        case FeatureSet::jtfdr: return "jtfdr";
        case FeatureSet::href: return "href";
        case FeatureSet::hf: return "hf";
    }
    return "?";
}

FeatureSet feature_set_from_string(const std::string& s) {
    if (s == "jtfdr") return FeatureSet::jtfdr;
    if (s == "href") return FeatureSet::href;
    if (s == "hf") return FeatureSet::hf;
    throw ValidationError("unknown feature set '" + s + "' (expected jtfdr, href, hf)");
}

std::string to_string(PeakOrder o) { return o == PeakOrder::magnitude ? "magnitude" : "arrival"; }

PeakOrder peak_order_from_string(const std::string& s) {
    if (s == "magnitude") return PeakOrder::magnitude;
    if (s == "arrival") return PeakOrder::arrival;
    throw ValidationError("unknown peak order '" + s + "' (expected magnitude, arrival)");
}

FeatureSpec FeatureSpec::for_task(Task t) {
    FeatureSpec s;
    s.task = t;
    switch (t) {
        case Task::gamma_local:
        case Task::target:
        case Task::product:
            s.order = PeakOrder::arrival;
            break;
        default:
            break;
    }
    return s;
}

std::array<double, 4> moments(std::span<const double> x) {
    if (x.empty()) throw DomainError("moments of an empty sequence");
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    return {mean, m2 / n, m3 / n, m4 / n};
}

std::vector<double> unwrap_phase(std::span<const Complex> h) {
    std::vector<double> out(h.size());
    double offset = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double p = std::arg(h[i]);
        if (i > 0) {
            const double jump = p + offset - out[i - 1];
            offset -= 2.0 * std::numbers::pi * std::round(jump / (2.0 * std::numbers::pi));
        }
        out[i] = p + offset;
    }
    return out;
}

std::vector<double> peak_features(std::span<const Peak> peaks, double dt, std::size_t k,
                                  PeakOrder order) {
    if (k == 0) throw DomainError("peak_features needs k >= 1");
    std::vector<Peak> chosen(peaks.begin(), peaks.end());
    if (order == PeakOrder::magnitude) {
        std::stable_sort(chosen.begin(), chosen.end(),
                         [](const Peak& a, const Peak& b) { return a.magnitude > b.magnitude; });
    } else {
        std::stable_sort(chosen.begin(), chosen.end(),
                         [](const Peak& a, const Peak& b) { return a.index < b.index; });
        if (!chosen.empty() && chosen.front().position < kOriginGate)
            chosen.erase(chosen.begin());
    }
    std::vector<double> out(2 * k);
    for (std::size_t i = 0; i < k; ++i) {
        if (i < chosen.size()) {
            out[2 * i] = chosen[i].position * dt;
            out[2 * i + 1] = chosen[i].magnitude;
        } else {
            out[2 * i] = -1.0;
            out[2 * i + 1] = 0.0;
        }
    }
    return out;
}

ChannelViews channel_views(const ChannelObservation& obs, const ChirpParams& chirp,
                           const PeakOptions& peaks) {
    ChannelViews v;
    v.h_ref = impulse_response(obs.h_ref, obs.grid);
    v.h_f = absolute(impulse_response(obs.h_f, obs.grid));
    v.jtfdr = jtfdr_trace(v.h_ref, chirp, peaks);
    return v;
}

FeatureVector build_features(const ChannelObservation& obs, const FeatureSpec& spec) {
    const auto views = channel_views(obs, spec.chirp, spec.peaks);
    const double dt = views.jtfdr.dt;
    FeatureVector fv;
    const auto h_ref_mag = magnitude(obs.h_ref);

    switch (spec.task) {
        case Task::gamma_homo: {
            append_moments(fv, magnitude(obs.h_f), "Hf.mag");
            append_moments(fv, unwrap_phase(obs.h_f), "Hf.phase");
            append_moments(fv, h_ref_mag, "Href.mag");
            append_moments(fv, unwrap_phase(obs.h_ref), "Href.phase");
            break;
        }
        case Task::identify: {
            if (spec.set == FeatureSet::jtfdr) {
                append_peaks(fv, views.jtfdr.peaks, dt, spec, "jtfdr");
                append_moments(fv, h_ref_mag, "Href.mag");
            } else if (spec.set == FeatureSet::href) {
                const auto mag = absolute(views.h_ref);
                append_peaks(fv, detect_peaks(mag, spec.peaks), dt, spec, "href");
                append_moments(fv, h_ref_mag, "Href.mag");
            } else {
                append_peaks(fv, detect_peaks(views.h_f, spec.peaks), dt, spec, "hf");
                append_moments(fv, magnitude(obs.h_f), "Hf.mag");
            }
            break;
        }
        case Task::branch: {
            append_peaks(fv, views.jtfdr.peaks, dt, spec, "jtfdr");
            fv.values.push_back(moments(views.jtfdr.samples)[1]);
            fv.names.push_back("jtfdr.variance");
            append_moments(fv, h_ref_mag, "Href.mag");
            break;
        }
        case Task::gamma_local:
        case Task::target:
        case Task::product: {
            append_peaks(fv, views.jtfdr.peaks, dt, spec, "jtfdr");
            append_moments(fv, h_ref_mag, "Href.mag");
            break;
        }
    }
    if (fv.values.size() > max_feature_count)
        throw ValidationError("task " + to_string(spec.task) + " builds " +
                              std::to_string(fv.values.size()) + " features (limit 16)");
    for (std::size_t i = 0; i < fv.values.size(); ++i)
        if (!std::isfinite(fv.values[i]))
            throw DomainError("feature " + fv.names[i] + " is not finite");
    return fv;
}

int feature_source(Task t, int observer) {
    return t == Task::branch ? partner_of(observer) : observer;
}

FeatureVector build_features(const LabeledSample& sample, const FeatureSpec& spec, int observer) {
    const int source = feature_source(spec.task, observer);
    if (!sample.has_observation(source))
        throw MissingObservationError("task " + to_string(spec.task) + " needs the observation of PLM" +
                                      std::to_string(source + 1));
    return build_features(sample.observation(source), spec);
}

}  // namespace wtdiag
