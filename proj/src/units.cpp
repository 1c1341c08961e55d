#include "condload/units.hpp"

#include <cmath>
#include <limits>

namespace condload {

using constants::hbar;
using constants::k_boltzmann;
using constants::pi;

void TrapSpec::validate() const
{
    if (!(omega_g > 0.0)) throw InvalidParameter("trap.omega_g must be positive");
    if (!(mass > 0.0)) throw InvalidParameter("trap.mass must be positive");
    if (!(scattering_length >= 0.0)) throw InvalidParameter("trap.scattering_length must be >= 0");
    if (m_max < 1) throw InvalidParameter("trap.m_max must be >= 1");
    if (virtual_extra < 0) throw InvalidParameter("trap.virtual_extra must be >= 0");
}

NaturalUnits::NaturalUnits(double omega_g) : omega_g_(omega_g)
{
    if (!(omega_g > 0.0)) throw InvalidParameter("omega_g must be positive");
}

double NaturalUnits::energy_to_natural(double joule) const { return joule / (hbar * omega_g_); }
double NaturalUnits::energy_to_si(double e) const { return e * hbar * omega_g_; }

CollisionUnitRate collision_unit_rate(const TrapSpec& trap)
{
    trap.validate();
    const double a = trap.scattering_length;
    const double si = 4.0 * a * a * trap.omega_g * trap.omega_g * trap.mass / (pi * hbar);
    return {si / trap.omega_g, si};
}

double oscillator_length(const TrapSpec& trap)
{
    return std::sqrt(hbar / (trap.mass * trap.omega_g));
}

double collision_unit_rate_from_length(const TrapSpec& trap)
{
    const double ratio = trap.scattering_length / oscillator_length(trap);
    return 4.0 / pi * ratio * ratio;
}

double thermal_wavelength(double mass, double T)
{
    if (!(T > 0.0)) throw InvalidParameter("temperature must be positive");
    return std::sqrt(2.0 * pi * hbar * hbar / (mass * k_boltzmann * T));
}

double gamma_eff_from_reservoir(const ReservoirSpec& res, double mass, GammaEffFormula formula)
{
    if (!(res.T > 0.0)) throw InvalidParameter("reservoir.T must be positive");
    if (!(res.omega_e > 0.0)) throw InvalidParameter("reservoir.omega_e must be positive");
    switch (formula) {
    case GammaEffFormula::ThermalOccupation: {
        const double x = hbar * res.omega_e / (k_boltzmann * res.T);
        return 2.0 * res.gamma_eg * res.N_ex * x * x * x;
    }
    case GammaEffFormula::PhaseSpaceDensity: {
        const double lambda = thermal_wavelength(mass, res.T);
        return 2.0 * res.gamma_eg * 5.2 * res.n_ex * lambda * lambda * lambda;
    }
    }
    return 0.0;
}

double reservoir_density_bound(const TrapSpec& trap, double omega_rec, double phi)
{
    const double m_tilde = trap.m_max + omega_rec / trap.omega_g;
    const double density_scale = trap.mass * trap.omega_g * m_tilde / (2.0 * pi * hbar);
    return phi * std::pow(density_scale, 1.5);
}

bool ValidityReport::all_pass() const
{
    for (const auto& c : conditions)
        if (!c.pass) return false;
    return true;
}

ValidityReport check_large_temperature_regime(const TrapSpec& trap, const ReservoirSpec& res,
                                              double ratio_threshold)
{
    ValidityReport report;
    report.e_max = hbar * trap.omega_g * trap.m_max + hbar * res.omega_rec;
    report.phase_space_density =
        res.T > 0.0 ? res.n_ex * std::pow(thermal_wavelength(trap.mass, res.T), 3) : 0.0;

    {
        const double rhs = trap.omega_g + 2.0 * res.omega_rec / 3.0;
        report.conditions.push_back({"omega_e < omega_g + 2 omega_rec / 3", res.omega_e, rhs,
                                     res.omega_e < rhs});
    }
    {
        const double kT = std::isinf(res.T) ? std::numeric_limits<double>::infinity()
                                            : k_boltzmann * res.T;
        const double rhs = ratio_threshold * report.e_max;
        report.conditions.push_back({"k_B T >> E_max", kT, rhs, kT >= rhs});
    }
    {
        const double bound = reservoir_density_bound(trap, res.omega_rec, report.phase_space_density);
        report.conditions.push_back(
            {"n_ex >> phi (M omega_g m_max / 2 pi hbar)^(3/2)", res.n_ex, ratio_threshold * bound,
             res.n_ex >= ratio_threshold * bound});
    }
    return report;
}

}  // namespace condload
