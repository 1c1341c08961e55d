// Physical parameters, natural units and derived quantities for the
// shell-resolved loading model.
//
// Internally every time is measured in units of 1/omega_g and every energy
// in units of hbar*omega_g. The SI helpers below are the only place where
// physical constants enter.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace condload {

class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace constants {
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double k_boltzmann = 1.380649e-23;  // J/K
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double mass_cr52 = 51.9405075 * atomic_mass_unit;
}  // namespace constants

struct TrapSpec {
    double omega_g = 2.0 * constants::pi * 1000.0;  // rad/s
    int m_max = 50;
    int virtual_extra = 10;
    double mass = constants::mass_cr52;   // kg
    double scattering_length = 6e-9;      // m

    int shell_count() const { return m_max + virtual_extra + 1; }
    void validate() const;

    friend bool operator==(const TrapSpec&, const TrapSpec&) = default;
};

struct ReservoirSpec {
    double gamma_eg = 100.0;   // rad/s, half the slow-line spontaneous rate
    double n_ex = 0.0;         // m^-3
    double N_ex = 0.0;         // atoms
    double T = 1e-3;           // K
    double omega_e = 2.0 * constants::pi * 1000.0;  // rad/s
    double omega_rec = 0.0;    // rad/s

    friend bool operator==(const ReservoirSpec&, const ReservoirSpec&) = default;
};

class NaturalUnits {
public:
    explicit NaturalUnits(double omega_g);

    double omega_g() const { return omega_g_; }
    double to_natural_time(double seconds) const { return seconds * omega_g_; }
    double to_seconds(double t) const { return t / omega_g_; }
    double rate_to_natural(double per_second) const { return per_second / omega_g_; }
    double rate_to_si(double rate) const { return rate * omega_g_; }
    double energy_to_natural(double joule) const;
    double energy_to_si(double e) const;

private:
    double omega_g_;
};

/// Number of 3D isotropic oscillator states with m quanta.
constexpr std::int64_t shell_degeneracy(int m)
{
    return static_cast<std::int64_t>(m + 1) * (m + 2) / 2;
}

struct CollisionUnitRate {
    double natural = 0.0;  // units of omega_g
    double si = 0.0;       // s^-1
};

/// Delta = 4 a^2 omega_g^2 M / (pi hbar).
CollisionUnitRate collision_unit_rate(const TrapSpec& trap);

/// Same quantity through (4/pi)(a/l)^2 with l the oscillator length.
double collision_unit_rate_from_length(const TrapSpec& trap);

double oscillator_length(const TrapSpec& trap);
double thermal_wavelength(double mass, double T);

enum class GammaEffFormula {
    ThermalOccupation,   // 2 gamma_eg N_ex (hbar omega_e / k_B T)^3
    PhaseSpaceDensity,   // 2 gamma_eg 5.2 n_ex lambda(T)^3
};

/// Effective loading rate in s^-1 derived from the reservoir. Advisory only;
/// the simulator takes gamma_eff directly.
double gamma_eff_from_reservoir(const ReservoirSpec& res, double mass, GammaEffFormula formula);

/// phi (M omega_g m~ / 2 pi hbar)^(3/2) with m~ = m_max + omega_rec / omega_g, in m^-3.
double reservoir_density_bound(const TrapSpec& trap, double omega_rec, double phi);

struct ValidityCondition {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

struct ValidityReport {
    double phase_space_density = 0.0;
    double e_max = 0.0;          // J
    std::vector<ValidityCondition> conditions;
    bool all_pass() const;
};

/// Large-temperature regime checks. Failing conditions are reported, never
/// thrown. `ratio_threshold` is what "much greater" means for (ii) and (iii).
ValidityReport check_large_temperature_regime(const TrapSpec& trap, const ReservoirSpec& res,
                                              double ratio_threshold = 10.0);

}  // namespace condload
