// Continuous-time kinetic Monte Carlo over collisions, loading and
// outcoupling, with reproducible ensembles.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "condload/collision.hpp"
#include "condload/occupancy.hpp"
#include "condload/pump_loss.hpp"
#include "condload/rate_table.hpp"
#include "condload/rng.hpp"
#include "condload/units.hpp"

namespace condload {

struct TimeWindow {
    double begin = 0.0;
    double end = 0.0;

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct SimulationParams {
    TrapSpec trap;
    LoadingConfig loading;
    OutcouplingPolicy outcoupling;
    double delta = -1.0;          // collision unit rate in omega_g; < 0 derives it from the trap
    bool evaporation = true;      // false: no cutoff, every shell is trapped
    double t_end = 1.0;           // units of 1/omega_g
    std::vector<double> sample_grid;
    std::uint64_t seed = 1;
    int realizations = 1;
    int threads = 0;              // 0: hardware concurrency
    std::int64_t refresh_interval = 100000;
    bool check_invariants = false;
    std::vector<std::int64_t> initial_counts;  // empty: empty trap
    std::optional<TimeWindow> stats_window;    // time-weighted N0 moments
    bool window_shells = false;     // also integrate every shell population over the window
    bool window_histogram = false;  // also record the dwell time at each N0 value

    double collision_delta() const;
    int cutoff_shell() const { return evaporation ? trap.m_max : trap.shell_count() - 1; }
    void validate() const;
};

/// Evenly spaced grid 0, t_end/points, ..., t_end (points + 1 values).
std::vector<double> uniform_grid(double t_end, int points);

enum class EventType { None, Collision, Load, Outcouple };

struct Event {
    EventType type = EventType::None;
    CollisionChannel channel{};
    int shell = -1;
};

struct EventCounts {
    std::int64_t collisions = 0;
    std::int64_t loads = 0;
    std::int64_t outcouplings = 0;
    std::int64_t total() const { return collisions + loads + outcouplings; }
};

struct Ledger {
    std::int64_t loaded = 0;
    std::int64_t evaporated = 0;
    std::int64_t outcoupled = 0;
    std::int64_t not_trapped = 0;
};

struct Sample {
    double t = 0.0;
    std::int64_t N = 0;
    std::int64_t N0 = 0;
    double fraction = 0.0;             // N0 / N, 0 for an empty trap
    double energy_per_particle = 0.0;  // NaN for an empty trap
    std::int64_t cum_evaporated = 0;
    std::int64_t cum_outcoupled = 0;
    std::int64_t cum_not_trapped = 0;
    std::int64_t cum_loaded = 0;
    std::int64_t events_total = 0;
};

/// Exact integrals of N0 and N0^2 over a time window, plus the outcoupled
/// counter at its edges.
struct WindowMoments {
    double duration = 0.0;
    double n0_integral = 0.0;
    double n0_sq_integral = 0.0;
    std::int64_t outcoupled_begin = 0;
    std::int64_t outcoupled_end = 0;
    std::vector<double> shell_integrals;  // per shell, when requested
    std::vector<double> n0_dwell;         // time spent at each N0 value, when requested
};

struct Trajectory {
    std::vector<Sample> samples;
    ShellOccupancy final_state;
    EventCounts counts;
    Ledger ledger;
    std::optional<WindowMoments> window;
};

/// One trajectory's state, rates and random stream. step() draws and applies
/// a single event, or advances to `horizon` if the next event falls beyond it.
class KineticSimulator {
public:
    KineticSimulator(const SimulationParams& params, std::uint64_t replica);

    double time() const { return t_; }
    const ShellOccupancy& state() const { return state_; }
    const EventCounts& counts() const { return counts_; }
    const Ledger& ledger() const { return ledger_; }
    const OutcouplingSchedule& schedule() const { return schedule_; }

    double collision_total() const { return collisions_.total(); }
    double loading_total() const { return loading_.total(); }
    double outcoupling_total() const { return schedule_.rate(state_.condensate()); }
    double total_rate() const { return collision_total() + loading_total() + outcoupling_total(); }

    struct StepResult {
        Event event;
        double dt = 0.0;
    };
    StepResult step(double horizon);

    /// Runs to `t` (inclusive of events before t), crossing schedule boundaries.
    void advance_to(double t);

    void apply(const Event& event);
    void refresh_rates();
    void set_window(const TimeWindow& window);
    const std::optional<WindowMoments>& window_moments() const { return moments_; }

    Sample sample() const;

private:
    void accumulate_window(double from, double to);
    void update_changed(std::span<const int> shells);

    SimulationParams params_;
    int cutoff_;
    ShellOccupancy state_;
    CollisionRates collisions_;
    RateTable loading_;
    OutcouplingSchedule schedule_;
    RandomStream stream_;
    double t_ = 0.0;
    EventCounts counts_;
    Ledger ledger_;
    std::int64_t since_refresh_ = 0;
    std::optional<TimeWindow> window_;
    std::optional<WindowMoments> moments_;
};

/// Single trajectory for replica `replica` sampled on params.sample_grid.
Trajectory run(const SimulationParams& params, std::uint64_t replica = 0);

struct SeriesStats {
    std::vector<double> mean;
    std::vector<double> sem;
};

struct EnsembleSummary {
    std::vector<double> t;
    SeriesStats N, N0, fraction, energy_per_particle, cum_evaporated, cum_outcoupled,
        cum_not_trapped, events_total;
    std::vector<Trajectory> replicas;
};

/// Runs params.realizations replicas (concurrently if params.threads allows)
/// and reduces them in replica order, so results never depend on scheduling.
EnsembleSummary ensemble(const SimulationParams& params, bool keep_replicas = false);

/// Mean and standard error over finite values of a replica-by-grid column.
SeriesStats reduce_series(const std::vector<std::vector<double>>& columns);

}  // namespace condload
