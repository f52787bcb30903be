#pragma once

// Modem-side joint time-frequency reflectometry: a stored Gaussian-enveloped
// chirp is convolved with the estimated reflection impulse response, matched
// filtered, and enveloped. Peaks of the result mark impedance discontinuities.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wtdiag/netmodel.hpp"

namespace wtdiag {

struct ChirpParams {
    double f_low = 2.0e6;
    double f_high = 30.0e6;
    double duration = 5.0e-6;
    double gaussian_sigma = 5.0e-6 / 6.0;  // +inf gives a flat envelope
    double sample_rate = 100.0e6;

    void validate() const;
};

struct Peak {
    std::size_t index = 0;
    double position = 0.0;  // parabolically refined index
    double magnitude = 0.0;

    bool operator==(const Peak&) const = default;
};

struct PeakOptions {
    double rel_threshold = 0.02;
    std::size_t min_separation = 20;
};

struct JtfdrTrace {
    std::vector<double> samples;
    double dt = 0.0;
    std::vector<Peak> peaks;
};

std::vector<double> gaussian_chirp(const ChirpParams& p);

/// Equivalent received echo: linear convolution of the probe with the
/// reflection impulse response.
std::vector<double> synthesize_rx(std::span<const double> probe, std::span<const double> h_ref);

/// Matched filter output for non-negative lags, length rx.size().
std::vector<double> cross_correlate(std::span<const double> probe, std::span<const double> rx);

/// Moving-average width used by `envelope` for a given probe.
std::size_t envelope_width(const ChirpParams& p);

/// |u| smoothed by a forward-backward (zero-phase) moving average of `width` samples.
std::vector<double> envelope(std::span<const double> u, std::size_t width);

/// Local maxima above rel_threshold * max(h), thinned greedily within
/// min_separation (larger first, earlier index on ties), returned by index.
std::vector<Peak> detect_peaks(std::span<const double> h, const PeakOptions& opts = {});

/// Full chain from a reflection impulse response to the enveloped trace,
/// truncated to the length of `h_ref`.
JtfdrTrace jtfdr_trace(std::span<const double> h_ref, const ChirpParams& chirp = {},
                       const PeakOptions& peaks = {});

/// Round-trip lag (in samples) of a reflector `distance` metres away.
double round_trip_samples(double distance, double velocity, double sample_rate);

struct Localization {
    Peak origin;
    Peak branch_point;
    std::vector<double> distances_m;  // interior peaks, in arrival order
};

/// Ratio localization against the branch-point echo. The branch-point peak
/// is the last peak at or before `bp_window_end` (samples); interior peaks lie
/// strictly between the origin lobe and it.
Localization localize(std::span<const Peak> peaks, double l0, double bp_window_end);

/// distance = l0 * n / n_bp.
double ratio_distance(double n, double n_bp, double l0);

// Text export of a trace: "dt=<value>" line, base64 little-endian float64
// samples line, then "peaks=" with index:magnitude pairs.
std::string export_trace(const JtfdrTrace& trace);
JtfdrTrace import_trace(const std::string& text);

}  // namespace wtdiag
