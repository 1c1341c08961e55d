#include "condload/pump_loss.hpp"

#include <algorithm>

#include "condload/units.hpp"

namespace condload {

std::string to_string(LoadingMode mode)
{
    return mode == LoadingMode::PerShell ? "per-shell" : "per-state-ergodic";
}

LoadingMode parse_loading_mode(const std::string& text)
{
    if (text == "per-shell") return LoadingMode::PerShell;
    if (text == "per-state-ergodic") return LoadingMode::PerStateErgodic;
    throw InvalidParameter("unknown loading mode '" + text + "' (per-shell, per-state-ergodic)");
}

void LoadingConfig::validate() const
{
    if (!(gamma_eff >= 0.0)) throw InvalidParameter("loading.gamma_eff must be >= 0");
    if (max_load_shell < -1) throw InvalidParameter("loading.max_load_shell must be >= -1");
}

double loading_rate(const ShellOccupancy& state, const LoadingConfig& cfg, int m)
{
    if (m > cfg.highest_shell(state.shells())) return 0.0;
    const double n = static_cast<double>(state[m]);
    const double seed = cfg.mode == LoadingMode::PerShell ? 1.0
                                                          : static_cast<double>(shell_degeneracy(m));
    return cfg.gamma_eff * (n + seed);
}

std::vector<double> loading_rates(const ShellOccupancy& state, const LoadingConfig& cfg)
{
    std::vector<double> out(static_cast<std::size_t>(state.shells()));
    for (int m = 0; m < state.shells(); ++m) out[static_cast<std::size_t>(m)] = loading_rate(state, cfg, m);
    return out;
}

std::int64_t apply_evaporation(ShellOccupancy& state, int m_max)
{
    std::int64_t removed = 0;
    for (int m = m_max + 1; m < state.shells(); ++m) {
        removed += state[m];
        if (state[m] != 0) state.set(m, 0);
    }
    return removed;
}

std::string to_string(OutcouplingKind kind)
{
    switch (kind) {
    case OutcouplingKind::Off: return "off";
    case OutcouplingKind::Constant: return "constant";
    case OutcouplingKind::Randomized: return "randomized";
    }
    return "off";
}

OutcouplingKind parse_outcoupling_kind(const std::string& text)
{
    if (text == "off") return OutcouplingKind::Off;
    if (text == "constant") return OutcouplingKind::Constant;
    if (text == "randomized") return OutcouplingKind::Randomized;
    throw InvalidParameter("unknown outcoupling kind '" + text + "' (off, constant, randomized)");
}

void OutcouplingPolicy::validate() const
{
    if (!(start_time >= 0.0)) throw InvalidParameter("outcoupling.start_time must be >= 0");
    if (kind == OutcouplingKind::Constant && !(gamma_out >= 0.0))
        throw InvalidParameter("outcoupling.gamma_out must be >= 0");
    if (kind == OutcouplingKind::Randomized) {
        if (!(f_max >= 0.0 && f_max < c)) throw InvalidParameter("outcoupling needs 0 <= f_max < c");
        if (!(resample_interval > 0.0))
            throw InvalidParameter("outcoupling.resample_interval must be positive");
    }
}

OutcouplingPolicy OutcouplingPolicy::constant(double gamma_out, double start_time)
{
    OutcouplingPolicy p;
    p.kind = OutcouplingKind::Constant;
    p.gamma_out = gamma_out;
    p.start_time = start_time;
    return p;
}

OutcouplingPolicy OutcouplingPolicy::randomized(double c, double f_max, double resample_interval,
                                                double start_time)
{
    OutcouplingPolicy p;
    p.kind = OutcouplingKind::Randomized;
    p.c = c;
    p.f_max = f_max;
    p.resample_interval = resample_interval;
    p.start_time = start_time;
    return p;
}

double outcoupling_rate(const OutcouplingPolicy& policy, double t, std::int64_t n0, double gamma_eff,
                        double f)
{
    if (policy.kind == OutcouplingKind::Off || t < policy.start_time || n0 <= 0) return 0.0;
    const double gamma_out =
        policy.kind == OutcouplingKind::Constant ? policy.gamma_out : (policy.c - f) * gamma_eff;
    return gamma_out * static_cast<double>(n0);
}

OutcouplingSchedule::OutcouplingSchedule(const OutcouplingPolicy& policy, double gamma_eff,
                                         RandomStream stream)
    : policy_(policy), gamma_eff_(gamma_eff), stream_(stream)
{
    policy_.validate();
    if (policy_.kind != OutcouplingKind::Off) next_ = policy_.start_time;
}

double OutcouplingSchedule::gamma_out() const
{
    switch (policy_.kind) {
    case OutcouplingKind::Off: return 0.0;
    case OutcouplingKind::Constant: return policy_.gamma_out;
    case OutcouplingKind::Randomized: return (policy_.c - f_) * gamma_eff_;
    }
    return 0.0;
}

void OutcouplingSchedule::cross_boundary()
{
    if (policy_.kind == OutcouplingKind::Off) return;
    active_ = true;
    if (policy_.kind == OutcouplingKind::Constant) {
        next_ = std::numeric_limits<double>::infinity();
        return;
    }
    f_ = policy_.f_max * stream_.uniform();
    ++resamples_;
    next_ = policy_.start_time + static_cast<double>(resamples_) * policy_.resample_interval;
}

}  // namespace condload
