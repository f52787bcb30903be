#include "wtdiag/reflectometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "wtdiag/codec.hpp"
#include "wtdiag/error.hpp"
#include "wtdiag/spectral.hpp"

namespace wtdiag {

void ChirpParams::validate() const {
    if (!(sample_rate > 0.0)) throw DomainError("chirp sample rate must be positive");
    if (!(f_low > 0.0 && f_low < f_high)) throw DomainError("chirp needs 0 < f_low < f_high");
    if (f_high > sample_rate / 2.0) throw DomainError("chirp f_high exceeds the Nyquist frequency");
    if (!(duration > 0.0)) throw DomainError("chirp duration must be positive");
    if (!(gaussian_sigma > 0.0)) throw DomainError("gaussian sigma must be positive");
}

std::vector<double> gaussian_chirp(const ChirpParams& p) {
    p.validate();
    const auto n = static_cast<std::size_t>(std::llround(p.duration * p.sample_rate)) + 1;
    const double sweep = (p.f_high - p.f_low) / p.duration;
    const double centre = p.duration / 2.0;
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / p.sample_rate;
        const double phase = 2.0 * std::numbers::pi * (p.f_low * t + 0.5 * sweep * t * t);
        const double g = std::isinf(p.gaussian_sigma)
                             ? 1.0
                             : std::exp(-(t - centre) * (t - centre) /
                                        (2.0 * p.gaussian_sigma * p.gaussian_sigma));
        s[i] = g * std::cos(phase);
    }
    return s;
}

std::vector<double> synthesize_rx(std::span<const double> probe, std::span<const double> h_ref) {
    return spectral::convolve(probe, h_ref);
}

std::vector<double> cross_correlate(std::span<const double> probe, std::span<const double> rx) {
    return spectral::correlate(probe, rx);
}

std::size_t envelope_width(const ChirpParams& p) {
    return static_cast<std::size_t>(std::ceil(p.sample_rate / p.f_high));
}

std::vector<double> envelope(std::span<const double> u, std::size_t width) {
    const std::size_t n = u.size();
    width = std::max<std::size_t>(width, 1);
    const double inv = 1.0 / static_cast<double>(width);

    std::vector<double> fwd(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += std::abs(u[i]);
        if (i >= width) acc -= std::abs(u[i - width]);
        fwd[i] = acc * inv;
    }
    std::vector<double> out(n);
    acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = n - 1 - r;
        acc += fwd[i];
        if (r >= width) acc -= fwd[i + width];
        out[i] = std::max(acc * inv, 0.0);
    }
    return out;
}

std::vector<Peak> detect_peaks(std::span<const double> h, const PeakOptions& opts) {
    if (!(opts.rel_threshold > 0.0 && opts.rel_threshold < 1.0))
        throw DomainError("rel_threshold must lie in (0,1)");
    const std::size_t n = h.size();
    if (n == 0) return {};
    const double top = *std::max_element(h.begin(), h.end());
    if (!(top > 0.0)) return {};
    const double floor = opts.rel_threshold * top;

    std::vector<Peak> cand;
    for (std::size_t i = 0; i < n; ++i) {
        if (h[i] <= floor) continue;
        const bool rising = i == 0 || h[i] > h[i - 1];
        const bool falling = i + 1 == n || h[i] >= h[i + 1];
        if (!rising || !falling) continue;
        double pos = static_cast<double>(i);
        if (i > 0 && i + 1 < n) {
            const double den = h[i - 1] - 2.0 * h[i] + h[i + 1];
            if (den < 0.0) pos += std::clamp(0.5 * (h[i - 1] - h[i + 1]) / den, -0.5, 0.5);
        }
        cand.push_back({i, pos, h[i]});
    }
    std::stable_sort(cand.begin(), cand.end(), [](const Peak& a, const Peak& b) {
        return a.magnitude > b.magnitude;
    });
    std::vector<Peak> kept;
    for (const auto& c : cand) {
        const bool clash = std::any_of(kept.begin(), kept.end(), [&](const Peak& k) {
            const std::size_t d = c.index > k.index ? c.index - k.index : k.index - c.index;
            return d < opts.min_separation;
        });
        if (!clash) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end(), [](const Peak& a, const Peak& b) { return a.index < b.index; });
    return kept;
}

JtfdrTrace jtfdr_trace(std::span<const double> h_ref, const ChirpParams& chirp,
                       const PeakOptions& peaks) {
    const auto probe = gaussian_chirp(chirp);
    const auto rx = synthesize_rx(probe, h_ref);
    const auto u = cross_correlate(probe, rx);
    auto env = envelope(u, envelope_width(chirp));
    env.resize(h_ref.size());
    JtfdrTrace t;
    t.samples = std::move(env);
    t.dt = 1.0 / chirp.sample_rate;
    t.peaks = detect_peaks(t.samples, peaks);
    return t;
}

double round_trip_samples(double distance, double velocity, double sample_rate) {
    return 2.0 * distance / velocity * sample_rate;
}

double ratio_distance(double n, double n_bp, double l0) {
    if (!(n_bp > 0.0)) throw LocalizationUnavailableError("branch-point lag must be positive");
    return l0 * n / n_bp;
}

Localization localize(std::span<const Peak> peaks, double l0, double bp_window_end) {
    std::vector<Peak> window;
    for (const auto& p : peaks)
        if (p.position <= bp_window_end) window.push_back(p);
    if (window.size() < 2 || window.back().index == 0)
        throw LocalizationUnavailableError("no branch-point echo inside the expected window");

    Localization out;
    out.branch_point = window.back();
    std::size_t first = 0;
    // The origin lobe sits at the port itself; anything later is a reflector.
    if (window.front().position < 0.05 * out.branch_point.position) {
        out.origin = window.front();
        first = 1;
    }
    for (std::size_t i = first; i + 1 < window.size(); ++i)
        out.distances_m.push_back(
            ratio_distance(window[i].position, out.branch_point.position, l0));
    return out;
}

std::string export_trace(const JtfdrTrace& trace) {
    std::ostringstream os;
    os.precision(17);
    os << "dt=" << trace.dt << '\n';
    os << "samples=" << codec::encode_doubles(trace.samples) << '\n';
    os << "peaks=";
    for (std::size_t i = 0; i < trace.peaks.size(); ++i) {
        if (i) os << ',';
        os << trace.peaks[i].index << ':' << trace.peaks[i].position << ':'
           << trace.peaks[i].magnitude;
    }
    os << '\n';
    return os.str();
}

JtfdrTrace import_trace(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    JtfdrTrace t;
    auto value_of = [&](const char* key) {
        if (!std::getline(is, line) || line.rfind(key, 0) != 0)
            throw FormatError(std::string("trace record missing '") + key + "'");
        return line.substr(std::string(key).size());
    };
    t.dt = std::stod(value_of("dt="));
    t.samples = codec::decode_doubles(value_of("samples="));
    std::istringstream ps(value_of("peaks="));
    std::string item;
    while (std::getline(ps, item, ',')) {
        Peak p;
        char c1 = 0, c2 = 0;
        std::istringstream it(item);
        if (!(it >> p.index >> c1 >> p.position >> c2 >> p.magnitude) || c1 != ':' || c2 != ':')
            throw FormatError("malformed peak entry '" + item + "'");
        t.peaks.push_back(p);
    }
    return t;
}

}  // namespace wtdiag
