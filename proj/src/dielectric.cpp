#include "wtdiag/dielectric.hpp"

#include <cmath>
#include <string>

#include "wtdiag/error.hpp"

namespace wtdiag {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw DomainError(std::string(name) + " must be positive and finite");
}

// alpha0 nu0 f0 F^2 eps0 Re{eps_w} / Y, the growth-rate group shared by the
// depth law and its inverse.
double growth_coefficient(double field, const MaterialParams& p) {
    return p.alpha0 * p.nu0 * p.f0 * field * field * p.eps0 * constants::water_real_permittivity /
           p.yield;
}

}  // namespace

void MaterialParams::validate() const {
    require_positive(alpha0, "alpha0");
    require_positive(nu0, "nu0");
    require_positive(f0, "f0");
    require_positive(eps0, "eps0");
    require_positive(eps_pe.real(), "Re(eps_pe)");
    if (eps_pe.imag() > 0.0) throw DomainError("Im(eps_pe) must be <= 0 (eps' - j eps'')");
    require_positive(yield, "yield strength");
    require_positive(water_conductivity, "water conductivity");
    if (!(depolarization > 0.0 && depolarization < 1.0))
        throw DomainError("depolarization factor must lie in (0,1)");
    if (!(water_content > 0.0 && water_content < 1.0))
        throw DomainError("water content must lie in (0,1)");
}

void CableSpec::validate() const {
    require_positive(r_cond, "r_cond");
    require_positive(r_insul, "r_insul");
    require_positive(v0, "V0");
    if (!(d_cond > 2.0 * r_cond))
        throw GeometryError("conductor separation must exceed twice the conductor radius");
}

void AgingProfile::validate() const {
    if (!(gamma_homo >= 0.0 && gamma_homo <= 0.05))
        throw DomainError("gamma_homo must lie in [0, 0.05]");
    if (local) {
        if (!(local->gamma >= 0.1 && local->gamma <= 1.0))
            throw DomainError("gamma_local must lie in [0.1, 1]");
        if (!(local->gamma > gamma_homo))
            throw DomainError("gamma_local must exceed gamma_homo");
        if (!(local->start_m >= 0.0)) throw DomainError("local degradation start must be >= 0");
        if (!(local->length_m > 0.0)) throw DomainError("local degradation length must be > 0");
    }
}

Complex PermittivityPerturbation::apply(Complex eps) const {
    if (is_identity()) return eps;
    const double tan_delta = -eps.imag() / eps.real() * loss_tangent;
    const double re = magnitude * std::abs(eps) / std::sqrt(1.0 + tan_delta * tan_delta);
    return {re, -re * tan_delta};
}

Complex water_permittivity(double f, const MaterialParams& p) {
    if (!(f > 0.0)) throw DomainError("frequency must be positive");
    return {constants::water_real_permittivity,
            -p.water_conductivity / (2.0 * std::numbers::pi * f * p.eps0)};
}

Complex wt_permittivity(double f, const MaterialParams& p) {
    const Complex eps_w = water_permittivity(f, p);
    const Complex contrast = eps_w - p.eps_pe;
    const Complex denom = p.eps_pe + p.depolarization * (1.0 - p.water_content) * contrast;
    if (std::abs(denom) < 1e-12) throw SingularityError("mixing-rule denominator vanishes");
    return p.eps_pe * (1.0 + p.water_content * contrast / denom);
}

Complex series_permittivity(double gamma, Complex eps_wt, Complex eps_pe) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in [0,1]");
    if (gamma == 0.0) return eps_pe;
    if (gamma == 1.0) return eps_wt;
    return 1.0 / (gamma / eps_wt + (1.0 - gamma) / eps_pe);
}

Complex total_permittivity(double gamma, double f, const MaterialParams& p,
                           const PermittivityPerturbation& perturbation) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("gamma must lie in [0,1]");
    return series_permittivity(gamma, perturbation.apply(wt_permittivity(f, p)), p.eps_pe);
}

double homogeneous_depth(double t_sr, double field, const MaterialParams& p) {
    if (!(t_sr >= 0.0)) throw DomainError("service time must be >= 0");
    require_positive(field, "field");
    return std::cbrt(growth_coefficient(field, p) * std::pow(t_sr, 1.5));
}

double equivalent_age(double y_homo, double field, const MaterialParams& p) {
    if (!(y_homo >= 0.0)) throw DomainError("degradation depth must be >= 0");
    require_positive(field, "field");
    const double ratio = p.yield * y_homo * y_homo * y_homo /
                         (p.alpha0 * p.nu0 * p.f0 * field * field * p.eps0 *
                          constants::water_real_permittivity);
    return std::cbrt(ratio * ratio);
}

double max_field(const CableSpec& spec) {
    if (!(spec.r_cond > 0.0) || !(spec.d_cond > 2.0 * spec.r_cond))
        throw GeometryError("max_field: d_cond must exceed 2 r_cond");
    return spec.v0 / (spec.r_cond * std::log(spec.d_cond / (2.0 * spec.r_cond)));
}

double propagation_velocity(Complex eps_total) {
    if (!(eps_total.real() >= 1.0))
        throw DomainError("Re(eps_total) < 1 is non-physical");
    return 1.0 / std::sqrt(constants::mu0 * constants::vacuum_permittivity * eps_total.real());
}

}  // namespace wtdiag
