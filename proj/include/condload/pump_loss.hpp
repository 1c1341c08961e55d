// Loading from the reservoir, evaporation above the trap cutoff, and
// outcoupling of the condensate shell.
#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "condload/occupancy.hpp"
#include "condload/rng.hpp"

namespace condload {

enum class LoadingMode {
    PerShell,         // Lambda_m = gamma_eff (N_m + 1)
    PerStateErgodic,  // Lambda_m = gamma_eff (N_m + g_m)
};

std::string to_string(LoadingMode mode);
LoadingMode parse_loading_mode(const std::string& text);

struct LoadingConfig {
    double gamma_eff = 0.0;  // units of omega_g
    LoadingMode mode = LoadingMode::PerShell;
    int max_load_shell = -1;  // -1: every shell, virtual ones included

    void validate() const;
    int highest_shell(int shells) const
    {
        return max_load_shell < 0 ? shells - 1 : std::min(max_load_shell, shells - 1);
    }

    friend bool operator==(const LoadingConfig&, const LoadingConfig&) = default;
};

double loading_rate(const ShellOccupancy& state, const LoadingConfig& cfg, int m);
std::vector<double> loading_rates(const ShellOccupancy& state, const LoadingConfig& cfg);

/// Empties every shell above m_max and returns the number of atoms removed.
std::int64_t apply_evaporation(ShellOccupancy& state, int m_max);

enum class OutcouplingKind { Off, Constant, Randomized };

std::string to_string(OutcouplingKind kind);
OutcouplingKind parse_outcoupling_kind(const std::string& text);

struct OutcouplingPolicy {
    OutcouplingKind kind = OutcouplingKind::Off;
    double gamma_out = 0.0;          // constant variant, units of omega_g
    double c = 1.17;                 // randomized: gamma_out = (c - f) gamma_eff
    double f_max = 0.05;
    double resample_interval = 20.0 * 3.14159265358979323846;  // 0.01 s at 1 kHz
    double start_time = 0.0;

    void validate() const;

    friend bool operator==(const OutcouplingPolicy&, const OutcouplingPolicy&) = default;

    static OutcouplingPolicy off() { return {}; }
    static OutcouplingPolicy constant(double gamma_out, double start_time = 0.0);
    static OutcouplingPolicy randomized(double c, double f_max, double resample_interval,
                                        double start_time = 0.0);
};

/// gamma_out(t) N_0, or 0 before start_time. `f` is the current value of the
/// randomized offset and is ignored by the other variants.
double outcoupling_rate(const OutcouplingPolicy& policy, double t, std::int64_t n0, double gamma_eff,
                        double f = 0.0);

/// Piecewise-constant outcoupling schedule of a single trajectory. Owns the
/// random f(t) process of the randomized variant.
class OutcouplingSchedule {
public:
    OutcouplingSchedule(const OutcouplingPolicy& policy, double gamma_eff, RandomStream stream);

    bool active() const { return active_; }
    double f() const { return f_; }
    double gamma_out() const;
    double rate(std::int64_t n0) const { return active_ ? gamma_out() * static_cast<double>(n0) : 0.0; }

    /// Time of the next change in gamma_out, +inf if none.
    double next_boundary() const { return next_; }

    /// Crosses the boundary at next_boundary(): activates or redraws f.
    void cross_boundary();

    std::int64_t resamples() const { return resamples_; }

private:
    OutcouplingPolicy policy_;
    double gamma_eff_;
    RandomStream stream_;
    bool active_ = false;
    double f_ = 0.0;
    double next_ = std::numeric_limits<double>::infinity();
    std::int64_t resamples_ = 0;
};

}  // namespace condload
