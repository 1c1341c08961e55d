// Experiment configuration: an INI document with one section per concern,
// named presets, and key=value overrides.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "condload/bre.hpp"
#include "condload/engine.hpp"
#include "condload/observables.hpp"
#include "condload/pump_loss.hpp"
#include "condload/units.hpp"

namespace condload {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Trajectory, Sweep, Threshold, Stabilization, Equilibrium, Bre };
std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& text);

/// Unit of loading.gamma_eff in a config file. The engine always works in
/// units of omega_g.
enum class RateUnit { OmegaG, PerSecond };
std::string to_string(RateUnit unit);
RateUnit parse_rate_unit(const std::string& text);

struct SweepSpec {
    std::string key;                  // any config key
    std::vector<std::string> values;  // applied in turn through the same parser
    std::vector<double> t_end;        // optional per-value horizon

    friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct ThresholdSpec {
    std::vector<double> xi;
    double retention = 0.5;
    int refinements = 0;

    friend bool operator==(const ThresholdSpec&, const ThresholdSpec&) = default;
};

struct BreSpec {
    LambdaSystemSpec system;
    int M_g = 4;
    int initial_level = 3;
    InternalState initial_internal = InternalState::Excited;
    std::vector<std::int64_t> background;  // levels above 0; level 0 comes from the grid
    ScalingGrid grid;
    std::vector<double> kernel_taus{0.5, 1.0, 2.0, 5.0};
    std::int64_t kernel_n0 = 10;

    ReducedBREModel model(std::int64_t n0) const;

    friend bool operator==(const BreSpec&, const BreSpec&) = default;
};

struct ExperimentConfig {
    std::string name = "custom";
    ExperimentKind kind = ExperimentKind::Trajectory;

    TrapSpec trap;
    ReservoirSpec reservoir;

    double gamma_eff = 0.0;
    RateUnit gamma_eff_unit = RateUnit::OmegaG;
    LoadingMode loading_mode = LoadingMode::PerShell;
    int max_load_shell = -1;

    double delta = -1.0;  // < 0: derived from the trap
    bool evaporation = true;

    OutcouplingKind outcoupling = OutcouplingKind::Off;
    double xi = 0.0;  // constant variant: gamma_out = xi gamma_eff
    double c = 1.17;
    double f_max = 0.05;
    double resample_interval = 20.0 * constants::pi;
    double start_time = 0.0;

    double t_end = 1e5;
    int grid_points = 200;
    std::uint64_t seed = 1;
    int realizations = 1;
    int threads = 0;
    std::int64_t refresh_interval = 100000;
    bool check_invariants = false;
    std::vector<std::int64_t> initial_occupancy;  // empty: empty trap
    double stats_begin = -1.0;                    // < 0: no statistics window
    double stats_end = -1.0;

    OnsetCriterion onset;
    SweepSpec sweep;
    ThresholdSpec threshold;
    BreSpec bre;

    std::string out_dir = "out";
    std::string prefix;  // empty: the experiment name

    /// gamma_eff in units of omega_g.
    double gamma_eff_natural() const;
    SimulationParams simulation() const;
    std::optional<TimeWindow> stats_window() const;
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Sets `section.key` from text. Unknown keys and malformed values throw
/// ConfigError.
void set_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_value(const ExperimentConfig& cfg, const std::string& key);
std::vector<std::string> config_keys();

/// Applies "section.key=value".
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string dump_config(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

}  // namespace condload
