#pragma once

// Feature extraction from one modem's channel observation.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "wtdiag/reflectometry.hpp"
#include "wtdiag/scenario.hpp"

namespace wtdiag {

inline constexpr std::size_t max_feature_count = 16;

enum class Task { identify, branch, gamma_homo, gamma_local, target, product };

/// Which channel the stage-1 peak features are taken from.
enum class FeatureSet { jtfdr, href, hf };

/// Peak slots ordered by descending magnitude, or by arrival time.
enum class PeakOrder { magnitude, arrival };

std::string to_string(Task t);
Task task_from_string(const std::string& s);
std::string to_string(FeatureSet f);
FeatureSet feature_set_from_string(const std::string& s);
std::string to_string(PeakOrder o);
PeakOrder peak_order_from_string(const std::string& s);

struct FeatureSpec {
    Task task = Task::identify;
    FeatureSet set = FeatureSet::jtfdr;
    PeakOrder order = PeakOrder::magnitude;
    std::size_t k = 5;
    PeakOptions peaks{0.005, 8};
    ChirpParams chirp{};

    /// Default recipe for a task.
    static FeatureSpec for_task(Task t);
    bool operator==(const FeatureSpec&) const = default;
};

struct FeatureVector {
    std::vector<double> values;
    std::vector<std::string> names;
};

/// Mean followed by the central moments of orders 2, 3 and 4.
std::array<double, 4> moments(std::span<const double> x);

std::vector<double> unwrap_phase(std::span<const Complex> h);

/// (time, magnitude) of `k` peaks; missing slots are (-1, 0). In magnitude
/// order the largest peaks are taken; in arrival order the earliest ones,
/// skipping the origin lobe at the port.
std::vector<double> peak_features(std::span<const Peak> peaks, double dt, std::size_t k,
                                  PeakOrder order = PeakOrder::magnitude);

/// Time-domain views of an observation used by the feature recipes.
struct ChannelViews {
    std::vector<double> h_ref;  // reflection impulse response
    std::vector<double> h_f;    // |impulse response| of the end-to-end channel
    JtfdrTrace jtfdr;
};

ChannelViews channel_views(const ChannelObservation& obs, const ChirpParams& chirp = {},
                           const PeakOptions& peaks = {});

FeatureVector build_features(const ChannelObservation& obs, const FeatureSpec& spec);

/// Selects the observation the task reads: the confirmer (partner) for
/// branch location, the observer otherwise.
FeatureVector build_features(const LabeledSample& sample, const FeatureSpec& spec, int observer);

/// Modem whose observation a task reads when `observer` is the PLM of interest.
int feature_source(Task t, int observer);

}  // namespace wtdiag
