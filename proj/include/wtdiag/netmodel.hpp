#pragma once

// Frequency-domain channel synthesis for tree networks of aged cable
// sections: per-unit-length parameters, ABCD cascades, end-to-end CFR,
// access impedance and reflection CTF.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wtdiag/dielectric.hpp"

namespace wtdiag {

struct PulParams {
    double r = 0.0;  // ohm/m
    double l = 0.0;  // H/m
    double g = 0.0;  // S/m
    double c = 0.0;  // F/m
};

/// Differential two-wire line parameters for insulation permittivity `eps_total` at `f`.
PulParams pul_parameters(const CableSpec& spec, Complex eps_total, double f);

/// Transmission matrix [[A, B], [C, D]] of a two-port.
struct Abcd {
    Complex a{1.0}, b{0.0}, c{0.0}, d{1.0};

    static Abcd identity() { return {}; }
    Abcd operator*(const Abcd& rhs) const {
        return {a * rhs.a + b * rhs.c, a * rhs.b + b * rhs.d, c * rhs.a + d * rhs.c,
                c * rhs.b + d * rhs.d};
    }
    Complex det() const { return a * d - b * c; }
    /// Same two-port seen from the opposite end (valid for reciprocal networks).
    Abcd reversed() const { return {d, b, c, a}; }
};

/// Uniform line section of `length` metres.
Abcd abcd_section(const PulParams& pul, double length, double f);

/// Sampling of the PLC band. The default grid sits exactly on the bins of a
/// 4096-point FFT at 100 MHz so that channel spectra embed without resampling.
struct FrequencyGrid {
    double f_start = 0.0;
    double delta_f = 0.0;
    std::size_t count = 0;

    static FrequencyGrid plc_band();
    double frequency(std::size_t i) const { return f_start + delta_f * static_cast<double>(i); }
    void validate() const;
    bool operator==(const FrequencyGrid&) const = default;
};

struct TimeGrid {
    std::size_t fft_size = 4096;
    double sample_rate = 100.0e6;

    double dt() const { return 1.0 / sample_rate; }
    double bin_spacing() const { return sample_rate / static_cast<double>(fft_size); }
};

struct ChannelObservation {
    FrequencyGrid grid;
    int observer = 0;  // modem whose port the impedance and reflection refer to
    int partner = 1;   // receiving modem of h_f
    std::vector<Complex> h_f;
    std::vector<Complex> z_in;
    std::vector<Complex> h_ref;

    bool operator==(const ChannelObservation&) const = default;
};

// ---------------------------------------------------------------------------
// Generic tree networks

struct Segment {
    double length = 0.0;
    double gamma = 0.0;  // relative water-tree depth of this uniform piece
};

/// Cable run between two nodes; segments are ordered from `from` to `to`.
struct Edge {
    int from = 0;
    int to = 0;
    std::vector<Segment> segments;
};

struct Topology {
    int node_count = 0;
    std::vector<Edge> edges;
    std::vector<std::optional<Complex>> shunt;  // load impedance per node, if any
    std::vector<int> modem_nodes;                // nodes carrying a modem port

    void validate() const;
};

struct LineContext {
    CableSpec cable;
    MaterialParams material;
    PermittivityPerturbation perturbation;
    Complex z_plm{50.0, 0.0};
};

struct PortResponse {
    std::vector<Complex> z_in;  // access impedance seen by the source modem
    std::vector<Complex> h_f;   // receiver port voltage over source EMF
};

/// Precomputes every edge's cascaded ABCD matrix on the grid, then answers
/// source/receiver queries by folding the tree into shunt admittances.
class NetworkSolver {
public:
    NetworkSolver(Topology topology, LineContext ctx, FrequencyGrid grid);

    /// Modems other than `source` terminate their node with Z_plm; the source
    /// is an ideal EMF behind Z_plm.
    PortResponse solve(int source, int receiver) const;

    const FrequencyGrid& grid() const { return grid_; }
    const Abcd& edge_matrix(std::size_t edge, std::size_t freq) const {
        return edge_abcd_[edge * grid_.count + freq];
    }

private:
    Complex admittance_away(int node, int via_edge, std::size_t k, int source) const;

    Topology topo_;
    LineContext ctx_;
    FrequencyGrid grid_;
    std::vector<Abcd> edge_abcd_;
    std::vector<std::vector<int>> incident_;
};

// ---------------------------------------------------------------------------
// The three-modem T network

inline constexpr int modem_count = 3;
inline constexpr int branch_count = 6;

/// Branches 0..2 join modem i to the branch point; branches 3..5 join modem i
/// to its branch extension. Distances along a branch are measured from the modem.
inline constexpr int bp_branch(int modem) { return modem; }
inline constexpr int be_branch(int modem) { return modem_count + modem; }
inline constexpr int branch_modem(int branch) { return branch % modem_count; }

struct NetworkScenario {
    std::array<double, branch_count> branch_length{500, 500, 500, 500, 500, 500};
    std::array<AgingProfile, branch_count> aging{};
    std::array<Complex, modem_count> be_load{Complex{50, 0}, Complex{50, 0}, Complex{50, 0}};
    Complex z_plm{50.0, 0.0};
    CableSpec cable;
    MaterialParams material;
    PermittivityPerturbation perturbation;
    /// RMS of complex Gaussian noise added to the estimated H_f and H_ref,
    /// drawn from `seed` and the observer. 0 gives the exact responses.
    double estimation_noise = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    /// Branch holding the (single) localized degradation, or -1.
    int ld_branch() const;
    bool operator==(const NetworkScenario&) const = default;
};

/// Node 0 is the branch point, nodes 1..3 the modems, nodes 4..6 the extensions.
Topology t_network(const NetworkScenario& scn);

/// Uniform pieces of a branch split at the localized-degradation boundaries.
std::vector<Segment> branch_segments(double length, const AgingProfile& profile);

inline int partner_of(int observer) { return (observer + 1) % modem_count; }

ChannelObservation solve_network(const NetworkScenario& scn, int observer,
                                 const FrequencyGrid& grid = FrequencyGrid::plc_band());

/// Observations at all three modems, each paired with its successor modem.
std::vector<ChannelObservation> solve_all(const NetworkScenario& scn,
                                          const FrequencyGrid& grid = FrequencyGrid::plc_band());

std::vector<Complex> reflection_ctf(std::span<const Complex> z_in, Complex z_plm);

/// Real waveform of a band spectrum embedded Hermitian-symmetrically into a
/// `time.fft_size` DFT. The grid must sit on the DFT bins.
std::vector<double> impulse_response(std::span<const Complex> h, const FrequencyGrid& grid,
                                     const TimeGrid& time = {});

/// Same inverse transform before discarding the imaginary part.
std::vector<Complex> impulse_response_complex(std::span<const Complex> h,
                                              const FrequencyGrid& grid, const TimeGrid& time = {});

}  // namespace wtdiag
