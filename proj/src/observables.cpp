#include "condload/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace condload {

double energy_per_particle(const ShellOccupancy& state)
{
    if (state.total() == 0) return std::numeric_limits<double>::quiet_NaN();
    return state.energy() / static_cast<double>(state.total());
}

void OnsetCriterion::validate() const
{
    if (!(n_abs >= 1.0)) throw InvalidParameter("onset.n_abs must be >= 1");
    if (!(f_rel >= 0.0 && f_rel < 1.0)) throw InvalidParameter("onset.f_rel must lie in [0, 1)");
}

std::optional<double> onset_time(std::span<const double> t, std::span<const double> n0,
                                 std::span<const double> fraction, const OnsetCriterion& crit)
{
    crit.validate();
    if (t.size() != n0.size() || t.size() != fraction.size())
        throw InvalidParameter("onset_time: series lengths differ");
    const auto holds = [&](std::size_t i) { return n0[i] >= crit.n_abs && fraction[i] >= crit.f_rel; };

    if (!crit.sustained) {
        for (std::size_t i = 0; i < t.size(); ++i)
            if (holds(i)) return t[i];
        return std::nullopt;
    }
    std::size_t first = t.size();
    for (std::size_t i = t.size(); i-- > 0;) {
        if (!holds(i)) break;
        first = i;
    }
    if (first == t.size()) return std::nullopt;
    return t[first];
}

std::optional<double> onset_time(const EnsembleSummary& summary, const OnsetCriterion& crit)
{
    return onset_time(summary.t, summary.N0.mean, summary.fraction.mean, crit);
}

StabilizationStats stabilization_stats(std::span<const TracePoint> trace, const TimeWindow& window)
{
    if (!(window.end > window.begin)) throw InvalidParameter("stabilization window is empty");
    if (trace.empty() || trace.front().t > window.begin)
        throw InvalidParameter("trace does not cover the stabilization window");

    double sum = 0.0;
    double sum_sq = 0.0;
    double out_begin = trace.front().outcoupled;
    double out_end = trace.front().outcoupled;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double from = std::max(trace[i].t, window.begin);
        const double to = std::min(i + 1 < trace.size() ? trace[i + 1].t : window.end, window.end);
        if (trace[i].t <= window.begin) out_begin = trace[i].outcoupled;
        if (trace[i].t <= window.end) out_end = trace[i].outcoupled;
        if (to <= from) continue;
        sum += trace[i].n0 * (to - from);
        sum_sq += trace[i].n0 * trace[i].n0 * (to - from);
    }
    WindowMoments m;
    m.duration = window.end - window.begin;
    m.n0_integral = sum;
    m.n0_sq_integral = sum_sq;
    StabilizationStats s = stabilization_stats(m, window);
    s.extracted_atoms = out_end - out_begin;
    s.extraction_rate = s.extracted_atoms / m.duration;
    return s;
}

StabilizationStats stabilization_stats(const WindowMoments& moments, const TimeWindow& window)
{
    if (!(window.end > window.begin) || !(moments.duration > 0.0))
        throw InvalidParameter("stabilization window is empty");
    StabilizationStats s;
    s.window = window;
    s.mean_N0 = moments.n0_integral / moments.duration;
    const double var = moments.n0_sq_integral / moments.duration - s.mean_N0 * s.mean_N0;
    s.std_N0 = std::sqrt(std::max(0.0, var));
    s.extracted_atoms = static_cast<double>(moments.outcoupled_end - moments.outcoupled_begin);
    s.extraction_rate = s.extracted_atoms / moments.duration;
    return s;
}

EnsembleStabilization combine_stabilization(std::span<const StabilizationStats> runs)
{
    EnsembleStabilization e;
    e.runs = runs.size();
    if (runs.empty()) return e;
    const double n = static_cast<double>(runs.size());
    double second = 0.0;
    for (const auto& r : runs) {
        e.mean_N0 += r.mean_N0 / n;
        e.within_run_std += r.std_N0 / n;
        second += (r.std_N0 * r.std_N0 + r.mean_N0 * r.mean_N0) / n;
        e.extracted_atoms += r.extracted_atoms / n;
        e.extraction_rate += r.extraction_rate / n;
    }
    e.pooled_std = std::sqrt(std::max(0.0, second - e.mean_N0 * e.mean_N0));
    if (runs.size() > 1) {
        double ss = 0.0;
        for (const auto& r : runs) ss += (r.mean_N0 - e.mean_N0) * (r.mean_N0 - e.mean_N0);
        e.between_run_std = std::sqrt(ss / (n - 1.0));
    }
    return e;
}

ThresholdBracket bracket_threshold(std::span<const ThresholdPoint> points, double target)
{
    ThresholdBracket b;
    b.target = target;
    if (points.empty()) {
        b.warning = "empty scan grid";
        return b;
    }
    std::size_t i = 0;
    while (i < points.size() && points[i].final_n0 >= target) ++i;
    if (i == 0) {
        b.upper = points.front().xi;
        b.warning = "every scanned xi ends below the target; threshold lies below the grid";
        return b;
    }
    b.lower = points[i - 1].xi;
    if (i == points.size()) {
        b.warning = "no scanned xi ends below the target; threshold lies above the grid";
        return b;
    }
    b.upper = points[i].xi;
    const double y0 = points[i - 1].final_n0;
    const double y1 = points[i].final_n0;
    const double w = y0 > y1 ? (y0 - target) / (y0 - y1) : 0.5;
    b.estimate = *b.lower + w * (*b.upper - *b.lower);
    return b;
}

bool monotone_non_increasing(std::span<const ThresholdPoint> points, double sigmas)
{
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double rise = points[i].final_n0 - points[i - 1].final_n0;
        const double err = std::hypot(points[i].final_n0_sem, points[i - 1].final_n0_sem);
        if (rise > sigmas * err) return false;
    }
    return true;
}

namespace {

ThresholdPoint scan_point(const SimulationParams& base, double xi)
{
    SimulationParams p = base;
    const double start = base.outcoupling.start_time;
    p.outcoupling = OutcouplingPolicy::constant(xi * base.loading.gamma_eff, start);
    p.sample_grid = {start, base.t_end};
    p.stats_window.reset();
    const EnsembleSummary e = ensemble(p);
    return {xi, e.N0.mean[1], e.N0.sem[1], e.N0.mean[0]};
}

}  // namespace

ThresholdScan threshold_scan(const SimulationParams& base, std::span<const double> xi_grid,
                             double retention, int refinements)
{
    if (!(retention > 0.0 && retention <= 1.0)) throw InvalidParameter("retention must lie in (0, 1]");
    if (!(base.outcoupling.start_time < base.t_end))
        throw InvalidParameter("outcoupling must start before the scan horizon");
    if (xi_grid.empty()) throw InvalidParameter("empty xi grid");

    ThresholdScan scan;
    scan.retention = retention;
    std::vector<double> grid(xi_grid.begin(), xi_grid.end());
    std::sort(grid.begin(), grid.end());
    for (double xi : grid) {
        if (!(xi >= 0.0)) throw InvalidParameter("xi must be >= 0");
        scan.points.push_back(scan_point(base, xi));
    }
    scan.initial_n0 = scan.points.front().initial_n0;
    const double target = retention * scan.initial_n0;
    scan.bracket = bracket_threshold(scan.points, target);

    for (int k = 0; k < refinements && scan.bracket.closed(); ++k) {
        const double mid = 0.5 * (*scan.bracket.lower + *scan.bracket.upper);
        ThresholdPoint p = scan_point(base, mid);
        auto pos = std::lower_bound(scan.points.begin(), scan.points.end(), mid,
                                    [](const ThresholdPoint& a, double x) { return a.xi < x; });
        scan.points.insert(pos, p);
        scan.bracket = bracket_threshold(scan.points, target);
    }
    scan.hold = bracket_threshold(scan.points, scan.initial_n0);
    scan.monotone = monotone_non_increasing(scan.points);
    return scan;
}

}  // namespace condload
