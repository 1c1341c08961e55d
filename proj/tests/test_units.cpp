#include <doctest.h>

#include <cmath>

#include "condload/units.hpp"

using namespace condload;

TEST_CASE("shell degeneracy")
{
    CHECK(shell_degeneracy(0) == 1);
    CHECK(shell_degeneracy(2) == 6);
    CHECK(shell_degeneracy(50) == 1326);

    // cumulative count of states up to shell M is C(M + 3, 3)
    std::int64_t sum = 0;
    for (int m = 0; m <= 40; ++m) {
        sum += shell_degeneracy(m);
        CHECK(sum == static_cast<std::int64_t>(m + 1) * (m + 2) * (m + 3) / 6);
    }
}

TEST_CASE("collision unit rate for chromium at 6 nm")
{
    TrapSpec trap;
    const auto d = collision_unit_rate(trap);
    CHECK(d.si == doctest::Approx(1.48).epsilon(0.01));
    CHECK(d.natural == doctest::Approx(2.36e-4).epsilon(0.01));
    CHECK(d.natural == doctest::Approx(collision_unit_rate_from_length(trap)).epsilon(1e-12));

    trap.scattering_length = 12e-9;
    CHECK(collision_unit_rate(trap).si == doctest::Approx(4.0 * d.si).epsilon(1e-12));
    trap.scattering_length = 0.0;
    CHECK(collision_unit_rate(trap).si == 0.0);
}

TEST_CASE("natural units round trip")
{
    NaturalUnits u(2.0 * constants::pi * 1000.0);
    CHECK(u.to_natural_time(0.35) == doctest::Approx(2199.1).epsilon(1e-4));
    CHECK(u.to_seconds(u.to_natural_time(1.7)) == doctest::Approx(1.7));
    CHECK(u.rate_to_si(u.rate_to_natural(6.28)) == doctest::Approx(6.28));
    CHECK(u.energy_to_natural(u.energy_to_si(3.5)) == doctest::Approx(3.5));
    CHECK_THROWS_AS(NaturalUnits(0.0), InvalidParameter);
}

TEST_CASE("loading rate from the reservoir")
{
    ReservoirSpec res;
    res.gamma_eg = 100.0;
    res.T = 1e-4;
    const double lambda = thermal_wavelength(constants::mass_cr52, res.T);
    res.n_ex = 1e-5 / (lambda * lambda * lambda);
    CHECK(gamma_eff_from_reservoir(res, constants::mass_cr52, GammaEffFormula::PhaseSpaceDensity) ==
          doctest::Approx(1.04e-2).epsilon(1e-9));

    res.N_ex = 0.0;
    CHECK(gamma_eff_from_reservoir(res, constants::mass_cr52, GammaEffFormula::ThermalOccupation) == 0.0);
    res.N_ex = 1e6;
    const double hot = gamma_eff_from_reservoir(res, constants::mass_cr52, GammaEffFormula::ThermalOccupation);
    res.T /= 2.0;
    CHECK(gamma_eff_from_reservoir(res, constants::mass_cr52, GammaEffFormula::ThermalOccupation) ==
          doctest::Approx(8.0 * hot).epsilon(1e-12));
}

TEST_CASE("large-temperature validity conditions")
{
    TrapSpec trap;
    ReservoirSpec res;
    res.omega_e = trap.omega_g / 2.0;
    res.T = 1e-4;
    res.n_ex = 1e20;
    const auto report = check_large_temperature_regime(trap, res);
    REQUIRE(report.conditions.size() == 3);
    CHECK(report.conditions[0].pass);

    // phi = 1e-5, m_max = 50: 7.45e-5 * 50^1.5 * 1e11 cm^-3
    const double bound = reservoir_density_bound(trap, 0.0, 1e-5);
    CHECK(bound * 1e-6 == doctest::Approx(7.45e-5 * std::pow(50.0, 1.5) * 1e11).epsilon(0.01));
    CHECK(bound * 1e-6 == doctest::Approx(2.6e9).epsilon(0.02));

    res.T = 1e6;
    CHECK(check_large_temperature_regime(trap, res).conditions[1].pass);
}
