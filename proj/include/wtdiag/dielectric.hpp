#pragma once

// Water-tree aging physics of XLPE cable insulation: degradation growth,
// equivalent age, composite permittivity and wave velocity.

#include <complex>
#include <numbers>
#include <optional>

namespace wtdiag {

using Complex = std::complex<double>;

namespace constants {
inline constexpr double mu0 = 4.0e-7 * std::numbers::pi;
inline constexpr double vacuum_permittivity = 8.8541878128e-12;
inline constexpr double seconds_per_year = 3.156e7;
inline constexpr double copper_conductivity = 5.8e7;
inline constexpr double water_real_permittivity = 81.0;
}  // namespace constants

/// Aging-model material constants. Defaults are the nominal XLPE values.
struct MaterialParams {
    double alpha0 = 1.44e4;       // diffusion constant of water into the dielectric
    double nu0 = 2.5e-28;         // free-volume void size, m^3
    double f0 = 60.0;             // mains frequency, Hz
    double eps0 = 8.8e-12;        // absolute permittivity used by the aging model, F/m
    Complex eps_pe{2.3, -0.001};  // intact XLPE, eps' - j eps''
    double yield = 2.0e7;         // mechanical yield strength, Pa
    double depolarization = 1.0 / 12.0;
    double water_content = 0.06;
    double water_conductivity = 0.22;  // S/m

    static MaterialParams nominal() { return {}; }
    void validate() const;
    bool operator==(const MaterialParams&) const = default;
};

/// Three-core cable cross-section (N2XSEY 6/10 kV class by default).
struct CableSpec {
    double r_cond = 3.99e-3;   // conductor radius, m
    double d_cond = 15.88e-3;  // conductor centre separation, m
    double r_insul = 3.4e-3;   // insulation thickness, m
    double v0 = 12.0e3;        // maximum rated voltage, V

    void validate() const;
    bool operator==(const CableSpec&) const = default;
};

struct LocalDegradation {
    double gamma = 0.1;      // relative depth of the salient segment
    double start_m = 0.0;    // from the modem end of the branch
    double length_m = 100.0;

    double end_m() const { return start_m + length_m; }
    bool operator==(const LocalDegradation&) const = default;
};

/// Homogeneous depth fraction plus an optional localized segment.
struct AgingProfile {
    double gamma_homo = 0.0;
    std::optional<LocalDegradation> local;

    void validate() const;
    bool operator==(const AgingProfile&) const = default;
};

/// Multiplicative deviation of the degraded-region permittivity from the model:
/// the magnitude is scaled by `magnitude`, the loss tangent by `loss_tangent`.
struct PermittivityPerturbation {
    double magnitude = 1.0;
    double loss_tangent = 1.0;

    bool is_identity() const { return magnitude == 1.0 && loss_tangent == 1.0; }
    Complex apply(Complex eps) const;
    bool operator==(const PermittivityPerturbation&) const = default;
};

Complex water_permittivity(double f, const MaterialParams& p);

/// Relative permittivity of water-tree degraded XLPE (spherical-inclusion mixing rule).
Complex wt_permittivity(double f, const MaterialParams& p);

/// Series-dielectric combination of a degraded layer of relative depth `gamma`
/// with intact insulation.
Complex total_permittivity(double gamma, double f, const MaterialParams& p,
                           const PermittivityPerturbation& perturbation = {});
Complex series_permittivity(double gamma, Complex eps_wt, Complex eps_pe);

/// Homogeneous water-tree depth (m) after `t_sr` seconds of service under field `field`.
double homogeneous_depth(double t_sr, double field, const MaterialParams& p);

/// Service time (s) that grows `y_homo` metres of homogeneous degradation.
double equivalent_age(double y_homo, double field, const MaterialParams& p);

/// Peak conductor-surface field (V/m) under the rated voltage.
double max_field(const CableSpec& spec);

/// Phase velocity (m/s) in insulation of relative permittivity `eps_total`.
double propagation_velocity(Complex eps_total);

}  // namespace wtdiag
