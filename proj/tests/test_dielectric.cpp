#include <doctest.h>

#include <random>

#include "wtdiag/dielectric.hpp"
#include "wtdiag/error.hpp"

using namespace wtdiag;

namespace {
const MaterialParams kNominal = MaterialParams::nominal();
const CableSpec kCable{};
}  // namespace

TEST_CASE("homogeneous depth after 30 years stays near the aging bound") {
    const double y = homogeneous_depth(30.0 * constants::seconds_per_year, max_field(kCable), kNominal);
    CHECK(std::abs(y / kCable.r_insul - 0.0481) <= 0.003);
}

TEST_CASE("equivalent age inverts homogeneous depth") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> t(0.0, 40.0 * constants::seconds_per_year);
    std::uniform_real_distribution<double> field(1e6, 1e7);
    for (int i = 0; i < 200; ++i) {
        const double ts = t(rng), f = field(rng);
        const double back = equivalent_age(homogeneous_depth(ts, f, kNominal), f, kNominal);
        CHECK(std::abs(back - ts) <= 1e-9 * std::max(ts, 1.0));
    }
    CHECK(equivalent_age(0.0, max_field(kCable), kNominal) == 0.0);
}

TEST_CASE("depth grows with time as t^(1/2)") {
    const double f = max_field(kCable);
    const double y1 = homogeneous_depth(1e8, f, kNominal);
    const double y4 = homogeneous_depth(4e8, f, kNominal);
    CHECK(y4 / y1 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(homogeneous_depth(-1.0, f, kNominal), DomainError);
}

TEST_CASE("max field of the two-wire geometry") {
    const double expected = kCable.v0 / (kCable.r_cond * std::log(kCable.d_cond / (2.0 * kCable.r_cond)));
    CHECK(max_field(kCable) == doctest::Approx(expected).epsilon(1e-14));
    CableSpec bad = kCable;
    bad.d_cond = bad.r_cond;
    CHECK_THROWS_AS(max_field(bad), GeometryError);
}

TEST_CASE("water permittivity carries the conduction loss") {
    const double f = 1e7;
    const auto e = water_permittivity(f, kNominal);
    CHECK(e.real() == doctest::Approx(81.0));
    CHECK(e.imag() == doctest::Approx(-kNominal.water_conductivity / (2 * M_PI * f * kNominal.eps0)));
}

TEST_CASE("series permittivity limits and bounds") {
    const double f = 1e7;
    const Complex wt = wt_permittivity(f, kNominal);
    CHECK(total_permittivity(0.0, f, kNominal) == kNominal.eps_pe);
    CHECK(std::abs(total_permittivity(1.0, f, kNominal) - wt) < 1e-12);
    double prev = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double g = i / 20.0;
        const Complex e = total_permittivity(g, f, kNominal);
        // series capacitors: 1/eps is the depth-weighted mean of the layers' 1/eps
        const Complex inv = g / wt + (1.0 - g) / kNominal.eps_pe;
        CHECK(std::abs(e * inv - 1.0) < 1e-12);
        CHECK(e.real() >= prev - 1e-12);
        CHECK(e.imag() <= 0.0);
        prev = e.real();
    }
    CHECK_THROWS_AS(total_permittivity(1.5, f, kNominal), DomainError);
}

TEST_CASE("permittivity perturbation scales magnitude and loss tangent") {
    const Complex eps{5.0, -0.4};
    const PermittivityPerturbation p{1.1, 1.2};
    const Complex q = p.apply(eps);
    CHECK(std::abs(q) == doctest::Approx(1.1 * std::abs(eps)).epsilon(1e-12));
    CHECK(-q.imag() / q.real() == doctest::Approx(1.2 * 0.4 / 5.0).epsilon(1e-12));
    CHECK(PermittivityPerturbation{}.apply(eps) == eps);
}

TEST_CASE("propagation velocity") {
    CHECK(propagation_velocity(Complex{1.0, 0.0}) == doctest::Approx(299792458.0).epsilon(1e-6));
    CHECK(propagation_velocity(Complex{4.0, -1.0}) == doctest::Approx(299792458.0 / 2).epsilon(1e-6));
    CHECK_THROWS_AS(propagation_velocity(Complex{0.5, 0.0}), DomainError);
}

TEST_CASE("material and profile validation") {
    MaterialParams p = kNominal;
    p.depolarization = 1.5;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = kNominal;
    p.eps_pe = {2.3, 0.1};
    CHECK_THROWS_AS(p.validate(), DomainError);
    AgingProfile a;
    a.gamma_homo = 0.06;
    CHECK_THROWS_AS(a.validate(), DomainError);
    a.gamma_homo = 0.02;
    a.local = LocalDegradation{0.05, 10, 10};
    CHECK_THROWS_AS(a.validate(), DomainError);
    a.local = LocalDegradation{0.5, 10, 10};
    CHECK_NOTHROW(a.validate());
}
