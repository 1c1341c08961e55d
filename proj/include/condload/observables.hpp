// Derived quantities: energy per particle, condensation onset, stabilization
// statistics under outcoupling, and outcoupling threshold scans.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "condload/engine.hpp"
#include "condload/occupancy.hpp"

namespace condload {

/// Sum N_m (m + 3/2) / N in units of hbar omega_g; NaN for an empty trap.
double energy_per_particle(const ShellOccupancy& state);

struct OnsetCriterion {
    double n_abs = 20.0;
    double f_rel = 0.05;
    bool sustained = true;  // condition must also hold at every later grid time

    void validate() const;

    friend bool operator==(const OnsetCriterion&, const OnsetCriterion&) = default;
};

/// Earliest grid time with n0 >= n_abs and fraction >= f_rel.
std::optional<double> onset_time(std::span<const double> t, std::span<const double> n0,
                                 std::span<const double> fraction, const OnsetCriterion& crit);

std::optional<double> onset_time(const EnsembleSummary& summary, const OnsetCriterion& crit);

struct StabilizationStats {
    TimeWindow window;
    double mean_N0 = 0.0;
    double std_N0 = 0.0;
    double extracted_atoms = 0.0;
    double extraction_rate = 0.0;  // atoms per unit of 1/omega_g
};

/// One point of a piecewise-constant N0 trace: from `t` on, the condensate
/// holds `n0` atoms and `outcoupled` atoms have left so far.
struct TracePoint {
    double t = 0.0;
    double n0 = 0.0;
    double outcoupled = 0.0;
};

/// Time-weighted statistics of a step trace over `window`. The trace must
/// start at or before window.begin.
StabilizationStats stabilization_stats(std::span<const TracePoint> trace, const TimeWindow& window);

/// Same statistics from the exact moments a simulator accumulated.
StabilizationStats stabilization_stats(const WindowMoments& moments, const TimeWindow& window);

/// Replica-level view of the stabilization window. `within_run_std` averages
/// the time std of each run; `pooled_std` is the std of N0 over time and
/// replicas together; `between_run_std` is the spread of the run means.
struct EnsembleStabilization {
    double mean_N0 = 0.0;
    double within_run_std = 0.0;
    double pooled_std = 0.0;
    double between_run_std = 0.0;
    double extracted_atoms = 0.0;  // mean over runs
    double extraction_rate = 0.0;  // mean over runs
    std::size_t runs = 0;
};

EnsembleStabilization combine_stabilization(std::span<const StabilizationStats> runs);

struct ThresholdPoint {
    double xi = 0.0;
    double final_n0 = 0.0;
    double final_n0_sem = 0.0;
    double initial_n0 = 0.0;
};

struct ThresholdBracket {
    std::optional<double> lower;     // largest scanned xi still at or above target
    std::optional<double> upper;     // smallest scanned xi below target
    std::optional<double> estimate;  // linear interpolation inside the bracket
    double target = 0.0;
    std::string warning;             // set when the bracket is open-ended

    bool closed() const { return lower && upper; }
};

/// Locates where final N0 first drops below `target` on a grid sorted by xi.
ThresholdBracket bracket_threshold(std::span<const ThresholdPoint> points, double target);

/// True if no point rises above its predecessor by more than `sigmas`
/// combined standard errors.
bool monotone_non_increasing(std::span<const ThresholdPoint> points, double sigmas = 3.0);

struct ThresholdScan {
    std::vector<ThresholdPoint> points;
    double initial_n0 = 0.0;   // ensemble mean at the outcoupling start
    double retention = 0.5;
    ThresholdBracket bracket;  // final N0 crosses retention * initial_n0
    ThresholdBracket hold;     // final N0 crosses initial_n0
    bool monotone = true;
};

/// Runs an ensemble per xi with constant outcoupling gamma_out = xi gamma_eff,
/// switched on at base.outcoupling.start_time and observed at base.t_end.
/// `refinements` bisection steps then tighten the retention bracket.
ThresholdScan threshold_scan(const SimulationParams& base, std::span<const double> xi_grid,
                             double retention = 0.5, int refinements = 0);

}  // namespace condload
