#include "condload/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace condload {

double SimulationParams::collision_delta() const
{
    return delta >= 0.0 ? delta : collision_unit_rate(trap).natural;
}

void SimulationParams::validate() const
{
    trap.validate();
    loading.validate();
    outcoupling.validate();
    if (!(t_end > 0.0)) throw InvalidParameter("run.t_end must be positive");
    if (realizations < 1) throw InvalidParameter("run.realizations must be >= 1");
    if (refresh_interval < 1) throw InvalidParameter("run.refresh_interval must be >= 1");
    if (!std::is_sorted(sample_grid.begin(), sample_grid.end()))
        throw InvalidParameter("sample grid must be sorted");
    if (!sample_grid.empty() && (sample_grid.front() < 0.0 || sample_grid.back() > t_end))
        throw InvalidParameter("sample grid must lie within [0, t_end]");
    if (!initial_counts.empty()) {
        if (static_cast<int>(initial_counts.size()) != trap.shell_count())
            throw InvalidParameter("initial occupancy must list every shell");
        for (std::size_t m = 0; m < initial_counts.size(); ++m) {
            if (initial_counts[m] < 0) throw InvalidParameter("negative initial occupancy");
            if (static_cast<int>(m) > cutoff_shell() && initial_counts[m] != 0)
                throw InvalidParameter("initial occupancy above the trap cutoff");
        }
    }
    if (stats_window && !(stats_window->end > stats_window->begin))
        throw InvalidParameter("statistics window must have positive length");
}

std::vector<double> uniform_grid(double t_end, int points)
{
    if (points < 1) throw InvalidParameter("grid needs at least one interval");
    std::vector<double> grid(static_cast<std::size_t>(points) + 1);
    for (int i = 0; i <= points; ++i)
        grid[static_cast<std::size_t>(i)] = t_end * static_cast<double>(i) / static_cast<double>(points);
    grid.back() = t_end;
    return grid;
}

// ---------------------------------------------------------------------------

KineticSimulator::KineticSimulator(const SimulationParams& params, std::uint64_t replica)
    : params_(params),
      cutoff_(params.cutoff_shell()),
      state_(params.trap.shell_count()),
      collisions_(params.trap.shell_count(), params.collision_delta()),
      loading_(static_cast<std::size_t>(params.trap.shell_count())),
      schedule_(params.outcoupling, params.loading.gamma_eff,
                RandomStream(params.seed, replica, StreamPurpose::Outcoupling)),
      stream_(params.seed, replica, StreamPurpose::Events)
{
    params_.validate();
    if (!params_.initial_counts.empty()) state_ = ShellOccupancy(params_.initial_counts);
    refresh_rates();
    if (params_.stats_window) set_window(*params_.stats_window);
}

void KineticSimulator::refresh_rates()
{
    collisions_.reset(state_);
    loading_.assign(loading_rates(state_, params_.loading));
    since_refresh_ = 0;
}

void KineticSimulator::set_window(const TimeWindow& window)
{
    window_ = window;
    moments_ = WindowMoments{};
    moments_->duration = window.end - window.begin;
    moments_->outcoupled_begin = ledger_.outcoupled;
    moments_->outcoupled_end = ledger_.outcoupled;
    if (params_.window_shells) moments_->shell_integrals.assign(static_cast<std::size_t>(state_.shells()), 0.0);
}

void KineticSimulator::accumulate_window(double from, double to)
{
    if (!window_) return;
    const double lo = std::max(from, window_->begin);
    const double hi = std::min(to, window_->end);
    if (hi <= lo) return;
    const double n0 = static_cast<double>(state_.condensate());
    moments_->n0_integral += n0 * (hi - lo);
    moments_->n0_sq_integral += n0 * n0 * (hi - lo);
    if (params_.window_shells) {
        for (int m = 0; m < state_.shells(); ++m)
            moments_->shell_integrals[static_cast<std::size_t>(m)] += static_cast<double>(state_[m]) * (hi - lo);
    }
    if (params_.window_histogram) {
        const auto k = static_cast<std::size_t>(state_.condensate());
        if (moments_->n0_dwell.size() <= k) moments_->n0_dwell.resize(k + 1, 0.0);
        moments_->n0_dwell[k] += hi - lo;
    }
}

KineticSimulator::StepResult KineticSimulator::step(double horizon)
{
    const double c = collisions_.total();
    const double l = loading_.total();
    const double o = outcoupling_total();
    const double r = c + l + o;
    StepResult result;
    if (!(r > 0.0)) {
        result.dt = std::max(0.0, horizon - t_);
        accumulate_window(t_, horizon);
        t_ = std::max(t_, horizon);
        return result;
    }
    const double dt = stream_.exponential(r);
    if (t_ + dt > horizon) {
        result.dt = std::max(0.0, horizon - t_);
        accumulate_window(t_, horizon);
        t_ = std::max(t_, horizon);
        return result;
    }
    accumulate_window(t_, t_ + dt);
    t_ += dt;
    result.dt = dt;

    double u = stream_.uniform() * r;
    Event& ev = result.event;
    if (c > 0.0 && (u < c || (l <= 0.0 && o <= 0.0))) {
        ev.type = EventType::Collision;
        ev.channel = collisions_.sample(std::min(u, std::nextafter(c, 0.0)));
    } else {
        u -= c;
        if (l > 0.0 && (u < l || o <= 0.0)) {
            ev.type = EventType::Load;
            ev.shell = static_cast<int>(loading_.sample(std::min(u, std::nextafter(l, 0.0))));
        } else {
            ev.type = EventType::Outcouple;
        }
    }
    apply(ev);
    return result;
}

void KineticSimulator::update_changed(std::span<const int> shells)
{
    collisions_.update_shells(state_, shells);
    for (int m : shells)
        loading_.set(static_cast<std::size_t>(m), loading_rate(state_, params_.loading, m));
}

void KineticSimulator::apply(const Event& ev)
{
    int changed[4];
    int n_changed = 0;
    switch (ev.type) {
    case EventType::None: return;
    case EventType::Collision: {
        const auto& ch = ev.channel;
        apply_collision(state_, ch);
        ++counts_.collisions;
        changed[n_changed++] = ch.m1;
        if (ch.m2 != ch.m1) changed[n_changed++] = ch.m2;
        for (int m : {ch.m3, ch.m4}) {
            if (m > cutoff_) {
                state_.add(m, -1);
                ++ledger_.evaporated;
            } else if (n_changed == 0 || changed[n_changed - 1] != m) {
                changed[n_changed++] = m;
            }
        }
        break;
    }
    case EventType::Load:
        ++counts_.loads;
        ++ledger_.loaded;
        if (ev.shell > cutoff_) {
            ++ledger_.not_trapped;
        } else {
            state_.add(ev.shell, 1);
            changed[n_changed++] = ev.shell;
        }
        break;
    case EventType::Outcouple:
        state_.add(0, -1);
        ++counts_.outcouplings;
        ++ledger_.outcoupled;
        changed[n_changed++] = 0;
        break;
    }

    if (++since_refresh_ >= params_.refresh_interval) {
        refresh_rates();
    } else {
        update_changed(std::span<const int>(changed, static_cast<std::size_t>(n_changed)));
    }

    if (params_.check_invariants) {
        if (!state_.consistent()) throw std::logic_error("occupancy cache out of sync");
        std::int64_t initial = 0;
        for (auto n : params_.initial_counts) initial += n;
        if (initial + ledger_.loaded !=
            state_.total() + ledger_.evaporated + ledger_.outcoupled + ledger_.not_trapped)
            throw std::logic_error("atom book-keeping identity violated");
        for (int m = cutoff_ + 1; m < state_.shells(); ++m)
            if (state_[m] != 0) throw std::logic_error("virtual shell populated between events");
    }
}

void KineticSimulator::advance_to(double target)
{
    while (true) {
        while (schedule_.next_boundary() <= t_) schedule_.cross_boundary();
        if (t_ >= target) break;
        double horizon = std::min(target, schedule_.next_boundary());
        bool at_window_edge = false;
        if (window_) {
            for (double edge : {window_->begin, window_->end}) {
                if (edge > t_ && edge <= horizon) {
                    horizon = edge;
                    at_window_edge = true;
                }
            }
        }
        while (t_ < horizon) step(horizon);
        if (at_window_edge) {
            if (t_ == window_->begin) moments_->outcoupled_begin = ledger_.outcoupled;
            if (t_ == window_->end) moments_->outcoupled_end = ledger_.outcoupled;
        }
    }
}

Sample KineticSimulator::sample() const
{
    Sample s;
    s.t = t_;
    s.N = state_.total();
    s.N0 = state_.condensate();
    s.fraction = s.N > 0 ? static_cast<double>(s.N0) / static_cast<double>(s.N) : 0.0;
    s.energy_per_particle = s.N > 0 ? state_.energy() / static_cast<double>(s.N)
                                    : std::numeric_limits<double>::quiet_NaN();
    s.cum_evaporated = ledger_.evaporated;
    s.cum_outcoupled = ledger_.outcoupled;
    s.cum_not_trapped = ledger_.not_trapped;
    s.cum_loaded = ledger_.loaded;
    s.events_total = counts_.total();
    return s;
}

// ---------------------------------------------------------------------------

Trajectory run(const SimulationParams& params, std::uint64_t replica)
{
    params.validate();
    KineticSimulator sim(params, replica);
    Trajectory traj;
    traj.samples.reserve(params.sample_grid.size());
    for (double t : params.sample_grid) {
        sim.advance_to(t);
        Sample s = sim.sample();
        s.t = t;
        traj.samples.push_back(s);
    }
    sim.advance_to(params.t_end);
    traj.final_state = sim.state();
    traj.counts = sim.counts();
    traj.ledger = sim.ledger();
    traj.window = sim.window_moments();
    return traj;
}

SeriesStats reduce_series(const std::vector<std::vector<double>>& columns)
{
    SeriesStats out;
    if (columns.empty()) return out;
    const std::size_t points = columns.front().size();
    out.mean.assign(points, 0.0);
    out.sem.assign(points, 0.0);
    for (std::size_t g = 0; g < points; ++g) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& col : columns) {
            if (std::isfinite(col[g])) {
                sum += col[g];
                ++n;
            }
        }
        if (n == 0) {
            out.mean[g] = std::numeric_limits<double>::quiet_NaN();
            out.sem[g] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& col : columns)
            if (std::isfinite(col[g])) ss += (col[g] - mean) * (col[g] - mean);
        out.mean[g] = mean;
        out.sem[g] = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    }
    return out;
}

EnsembleSummary ensemble(const SimulationParams& params, bool keep_replicas)
{
    params.validate();
    const auto count = static_cast<std::size_t>(params.realizations);
    std::vector<Trajectory> replicas(count);

    unsigned threads = params.threads > 0 ? static_cast<unsigned>(params.threads)
                                          : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t r = next++; r < count; r = next++) {
            try {
                replicas[r] = run(params, r);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    EnsembleSummary summary;
    summary.t = params.sample_grid;
    const auto column = [&](auto field) {
        std::vector<std::vector<double>> cols;
        cols.reserve(count);
        for (const auto& traj : replicas) {
            std::vector<double> col;
            col.reserve(traj.samples.size());
            for (const auto& s : traj.samples) col.push_back(static_cast<double>(s.*field));
            cols.push_back(std::move(col));
        }
        return reduce_series(cols);
    };
    summary.N = column(&Sample::N);
    summary.N0 = column(&Sample::N0);
    summary.fraction = column(&Sample::fraction);
    summary.energy_per_particle = column(&Sample::energy_per_particle);
    summary.cum_evaporated = column(&Sample::cum_evaporated);
    summary.cum_outcoupled = column(&Sample::cum_outcoupled);
    summary.cum_not_trapped = column(&Sample::cum_not_trapped);
    summary.events_total = column(&Sample::events_total);
    if (keep_replicas) summary.replicas = std::move(replicas);
    return summary;
}

}  // namespace condload
