#pragma once

// Seeded generation of aging profiles, loads and labelled channel samples.
//
// Every draw is a pure function of (config seed, draw index): each index
// seeds its own mt19937_64 stream through a SplitMix64 mix of the two, so
// samples can be produced in any order or in parallel with identical results.
// Uniform variates are taken from the top 53 bits of the engine output.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "wtdiag/netmodel.hpp"

namespace wtdiag {

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
    bool operator==(const Range&) const = default;
};

/// What a generated dataset is for; fixes which modems are observed and how
/// localized degradations are placed.
enum class DatasetKind {
    identify,     // LD present next to the observer vs. absent there
    branch,       // LD next to the observer: on its BP branch vs. its BE branch
    homogeneous,  // no LD anywhere
    localized,    // LD on the observer's BP branch
};

std::string to_string(DatasetKind k);
DatasetKind dataset_kind_from_string(const std::string& s);

struct ScenarioConfig {
    Range gamma_homo{0.0, 0.05};
    Range gamma_local{0.1, 1.0};
    Range lwt{100.0, 300.0};
    Range center_offset{-100.0, 100.0};
    Range load_re{0.0, 50.0};
    Range load_im{-50.0, 50.0};
    Range eps_wt_magnitude{1.0, 1.0};
    Range eps_wt_loss_tangent{1.0, 1.0};
    std::array<double, branch_count> branch_length{500, 500, 500, 500, 500, 500};
    double ld_probability = 0.5;
    bool balance = true;
    double far_ld_fraction = 0.5;  // share of identify negatives carrying an LD elsewhere
    double z_plm = 50.0;
    double estimation_noise = 0.0;  // see NetworkScenario::estimation_noise
    CableSpec cable;
    MaterialParams material;
    std::uint64_t seed = 1;

    void validate() const;
    bool operator==(const ScenarioConfig&) const = default;
};

class SampleRng {
public:
    SampleRng(std::uint64_t seed, std::uint64_t index);
    double uniform();
    double uniform(const Range& r);
    std::size_t pick(std::size_t n);

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Generic draw: an LD with probability `ld_probability` on a uniformly chosen branch.
NetworkScenario sample_scenario(const ScenarioConfig& cfg, std::uint64_t draw_index);

/// Draw shaped for a dataset kind. Balanced classification kinds alternate
/// positive (even index) and negative (odd index) samples.
NetworkScenario sample_task_scenario(const ScenarioConfig& cfg, DatasetKind kind, int observer,
                                     std::uint64_t draw_index);

/// Named fixed scenarios: "healthy", "homogeneous" (gamma_homo 0.03),
/// "near-ld" (LD at 211-377 m on the PLM1-BP branch, gamma_local 0.1) and
/// "far-ld" (the same LD on the PLM2-BP branch).
NetworkScenario example_scenario(const std::string& name);
std::vector<std::string> example_scenario_names();

struct Labels {
    bool ld_present = false;
    int ld_branch = -1;
    double gamma_homo = 0.0;
    double t_eq = 0.0;  // seconds, nominal parameters and derived F_max
    double gamma_local = 0.0;
    double target_m = 0.0;
    double lwt_m = 0.0;
    double product = 0.0;  // lwt_m * gamma_local

    bool operator==(const Labels&) const = default;
};

Labels derive_labels(const NetworkScenario& scn);

struct LabeledSample {
    NetworkScenario scenario;
    std::vector<ChannelObservation> observations;
    Labels labels;

    /// Throws MissingObservationError if the modem was not observed.
    const ChannelObservation& observation(int modem) const;
    bool has_observation(int modem) const;
    bool operator==(const LabeledSample&) const = default;
};

/// Modems a dataset kind needs observed.
std::vector<int> observed_modems(DatasetKind kind, int observer);

LabeledSample make_sample(const NetworkScenario& scn, const std::vector<int>& modems,
                          const FrequencyGrid& grid = FrequencyGrid::plc_band());

/// Produces samples [first, first + n) in order and hands each to `sink`.
void generate_samples(const ScenarioConfig& cfg, DatasetKind kind, int observer, std::size_t n,
                      const std::function<void(std::size_t, LabeledSample&&)>& sink,
                      std::uint64_t first = 0);

}  // namespace wtdiag
