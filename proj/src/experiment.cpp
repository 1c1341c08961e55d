#include "condload/experiment.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace condload {

namespace fs = std::filesystem;
using nlohmann::json;

std::string code_version()
{
#ifdef CONDLOAD_VERSION
    return CONDLOAD_VERSION;
#else
    return "unknown";
#endif
}

const std::vector<std::string>& trajectory_columns()
{
    static const std::vector<std::string> cols = {
        "t",  "t_seconds", "N", "N0", "fraction", "energy_per_particle", "cum_evaporated",
        "cum_outcoupled", "cum_not_trapped", "events_total"};
    return cols;
}

ReplicaOnsets replica_onsets(const EnsembleSummary& summary, const OnsetCriterion& crit)
{
    ReplicaOnsets r;
    r.total = static_cast<int>(summary.replicas.size());
    std::vector<double> found;
    for (const auto& traj : summary.replicas) {
        std::vector<double> t, n0, frac;
        for (const auto& s : traj.samples) {
            t.push_back(s.t);
            n0.push_back(static_cast<double>(s.N0));
            frac.push_back(s.fraction);
        }
        if (auto on = onset_time(t, n0, frac, crit)) found.push_back(*on);
    }
    r.found = static_cast<int>(found.size());
    if (found.empty()) {
        r.mean = r.sem = std::nan("");
        return r;
    }
    for (double v : found) r.mean += v / static_cast<double>(found.size());
    if (found.size() > 1) {
        double ss = 0.0;
        for (double v : found) ss += (v - r.mean) * (v - r.mean);
        r.sem = std::sqrt(ss / static_cast<double>(found.size() - 1) / static_cast<double>(found.size()));
    }
    return r;
}

namespace {

std::string num(double v)
{
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json opt_number(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Writer {
public:
    Writer(const ExperimentConfig& cfg, std::ostream* log)
        : dir_(cfg.out_dir), prefix_(cfg.prefix.empty() ? cfg.name : cfg.prefix), log_(log)
    {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_))
            throw std::runtime_error("cannot create output directory '" + dir_.string() + "'");
    }

    void write(const std::string& suffix, const std::string& content)
    {
        const fs::path path = dir_ / (prefix_ + "_" + suffix);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
        files_.push_back(path.string());
        if (log_) *log_ << "wrote " << path.string() << "\n";
    }

    void note(const std::string& line)
    {
        if (log_) *log_ << line << "\n" << std::flush;
    }

    std::vector<std::string> files() const { return files_; }

private:
    fs::path dir_;
    std::string prefix_;
    std::ostream* log_;
    std::vector<std::string> files_;
};

std::string trajectory_csv(const Trajectory& traj, double omega_g)
{
    std::ostringstream out;
    const auto& cols = trajectory_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
    for (const auto& s : traj.samples) {
        out << num(s.t) << "," << num(s.t / omega_g) << "," << s.N << "," << s.N0 << "," << num(s.fraction)
            << "," << num(s.energy_per_particle) << "," << s.cum_evaporated << "," << s.cum_outcoupled
            << "," << s.cum_not_trapped << "," << s.events_total << "\n";
    }
    return out.str();
}

std::string ensemble_csv(const EnsembleSummary& e, double omega_g)
{
    const std::pair<const char*, const SeriesStats*> series[] = {
        {"N", &e.N},
        {"N0", &e.N0},
        {"fraction", &e.fraction},
        {"energy_per_particle", &e.energy_per_particle},
        {"cum_evaporated", &e.cum_evaporated},
        {"cum_outcoupled", &e.cum_outcoupled},
        {"cum_not_trapped", &e.cum_not_trapped},
        {"events_total", &e.events_total}};
    std::ostringstream out;
    out << "t,t_seconds";
    for (const auto& [name, _] : series) out << "," << name << "_mean," << name << "_sem";
    out << "\n";
    for (std::size_t g = 0; g < e.t.size(); ++g) {
        out << num(e.t[g]) << "," << num(e.t[g] / omega_g);
        for (const auto& [_, s] : series) out << "," << num(s->mean[g]) << "," << num(s->sem[g]);
        out << "\n";
    }
    return out.str();
}

json config_json(const ExperimentConfig& cfg)
{
    json j = json::object();
    for (const auto& key : config_keys()) j[key] = get_value(cfg, key);
    return j;
}

json common_summary(const ExperimentConfig& cfg)
{
    json j;
    j["schema"] = "condload.summary";
    j["schema_version"] = kSummarySchemaVersion;
    j["code_version"] = code_version();
    j["experiment"] = cfg.name;
    j["kind"] = to_string(cfg.kind);
    j["seed"] = cfg.seed;
    j["realizations"] = cfg.realizations;
    j["config"] = config_json(cfg);
    if (cfg.kind == ExperimentKind::Bre) return j;

    const double g = cfg.gamma_eff_natural();
    j["loading"] = {{"mode", to_string(cfg.loading_mode)},
                    {"gamma_eff", cfg.gamma_eff},
                    {"gamma_eff_unit", to_string(cfg.gamma_eff_unit)},
                    {"gamma_eff_omega_g", g},
                    {"gamma_eff_per_second", g * cfg.trap.omega_g}};
    const SimulationParams p = cfg.simulation();
    const double delta = p.collision_delta();
    j["collision_delta"] = {{"omega_g", delta}, {"per_second", delta * cfg.trap.omega_g},
                            {"derived", cfg.delta < 0.0}};
    j["onset_criterion"] = {{"n_abs", cfg.onset.n_abs}, {"f_rel", cfg.onset.f_rel},
                            {"sustained", cfg.onset.sustained}, {"applied_to", "ensemble mean"}};

    json reservoir;
    try {
        reservoir["gamma_eff_thermal_occupation_per_second"] =
            gamma_eff_from_reservoir(cfg.reservoir, cfg.trap.mass, GammaEffFormula::ThermalOccupation);
        reservoir["gamma_eff_phase_space_density_per_second"] =
            gamma_eff_from_reservoir(cfg.reservoir, cfg.trap.mass, GammaEffFormula::PhaseSpaceDensity);
    } catch (const InvalidParameter& e) {
        reservoir["error"] = e.what();
    }
    const ValidityReport v = check_large_temperature_regime(cfg.trap, cfg.reservoir);
    reservoir["phase_space_density"] = v.phase_space_density;
    reservoir["all_conditions_pass"] = v.all_pass();
    for (const auto& c : v.conditions)
        reservoir["conditions"].push_back(
            {{"name", c.name}, {"lhs", finite_or_null(c.lhs)}, {"rhs", finite_or_null(c.rhs)}, {"pass", c.pass}});
    j["reservoir"] = reservoir;
    return j;
}

json final_values(const EnsembleSummary& e)
{
    const std::size_t last = e.t.size() - 1;
    return {{"t", e.t[last]},
            {"N_mean", e.N.mean[last]},
            {"N_sem", e.N.sem[last]},
            {"N0_mean", e.N0.mean[last]},
            {"N0_sem", e.N0.sem[last]},
            {"fraction_mean", e.fraction.mean[last]},
            {"fraction_sem", e.fraction.sem[last]},
            {"energy_per_particle_mean", finite_or_null(e.energy_per_particle.mean[last])}};
}

json onset_json(const EnsembleSummary& e, const OnsetCriterion& crit, double omega_g)
{
    const auto on = onset_time(e, crit);
    const ReplicaOnsets r = replica_onsets(e, crit);
    return {{"onset_time", opt_number(on)},
            {"onset_time_seconds", on ? json(*on / omega_g) : json(nullptr)},
            {"replica_mean", finite_or_null(r.mean)},
            {"replica_sem", finite_or_null(r.sem)},
            {"replicas_found", r.found},
            {"replicas_total", r.total}};
}

EnsembleSummary run_ensemble(const SimulationParams& p, Writer& w, const std::string& label)
{
    w.note("running " + label + ": " + std::to_string(p.realizations) + " replica(s) to t = " + num(p.t_end));
    return ensemble(p, true);
}

void write_runs(Writer& w, const EnsembleSummary& e, double omega_g, const std::string& stem)
{
    w.write(stem + "trajectory.csv", trajectory_csv(e.replicas.front(), omega_g));
    w.write(stem + "ensemble.csv", ensemble_csv(e, omega_g));
}

json run_trajectory(const ExperimentConfig& cfg, Writer& w)
{
    const EnsembleSummary e = run_ensemble(cfg.simulation(), w, cfg.name);
    write_runs(w, e, cfg.trap.omega_g, "");
    json j = onset_json(e, cfg.onset, cfg.trap.omega_g);
    j["final"] = final_values(e);
    return j;
}

json run_sweep(const ExperimentConfig& cfg, Writer& w)
{
    std::ostringstream csv;
    csv << "value,t_end,onset,onset_seconds,onset_replica_mean,onset_replica_sem,onset_replicas_found,"
           "final_N_mean,final_N0_mean,final_N0_sem,final_fraction_mean\n";
    json points = json::array();
    for (std::size_t i = 0; i < cfg.sweep.values.size(); ++i) {
        ExperimentConfig point = cfg;
        point.kind = ExperimentKind::Trajectory;
        set_value(point, cfg.sweep.key, cfg.sweep.values[i]);
        if (!cfg.sweep.t_end.empty()) point.t_end = cfg.sweep.t_end[i];
        point.validate();
        const EnsembleSummary e =
            run_ensemble(point.simulation(), w, cfg.sweep.key + " = " + cfg.sweep.values[i]);
        write_runs(w, e, point.trap.omega_g, "point" + std::to_string(i) + "_");

        const json onset = onset_json(e, point.onset, point.trap.omega_g);
        const json fin = final_values(e);
        const ReplicaOnsets r = replica_onsets(e, point.onset);
        const auto on = onset_time(e, point.onset);
        csv << cfg.sweep.values[i] << "," << num(point.t_end) << "," << (on ? num(*on) : "nan") << ","
            << (on ? num(*on / point.trap.omega_g) : "nan") << "," << num(r.mean) << "," << num(r.sem) << ","
            << r.found << "," << num(fin["N_mean"].get<double>()) << "," << num(fin["N0_mean"].get<double>())
            << "," << num(fin["N0_sem"].get<double>()) << "," << num(fin["fraction_mean"].get<double>()) << "\n";
        points.push_back({{"value", cfg.sweep.values[i]}, {"t_end", point.t_end}, {"onset", onset}, {"final", fin}});
    }
    w.write("sweep.csv", csv.str());
    return {{"sweep", {{"key", cfg.sweep.key}, {"points", points}}}};
}

json bracket_json(const ThresholdBracket& b)
{
    return {{"target", b.target},
            {"lower", opt_number(b.lower)},
            {"upper", opt_number(b.upper)},
            {"estimate", opt_number(b.estimate)},
            {"warning", b.warning}};
}

json run_threshold(const ExperimentConfig& cfg, Writer& w)
{
    const SimulationParams base = cfg.simulation();
    const EnsembleSummary e = run_ensemble(base, w, cfg.name + " at xi = " + num(cfg.xi));
    write_runs(w, e, cfg.trap.omega_g, "");

    w.note("scanning " + std::to_string(cfg.threshold.xi.size()) + " outcoupling ratios");
    const ThresholdScan scan =
        threshold_scan(base, cfg.threshold.xi, cfg.threshold.retention, cfg.threshold.refinements);
    std::ostringstream csv;
    csv << "xi,initial_N0,final_N0_mean,final_N0_sem\n";
    json points = json::array();
    for (const auto& p : scan.points) {
        csv << num(p.xi) << "," << num(p.initial_n0) << "," << num(p.final_n0) << "," << num(p.final_n0_sem) << "\n";
        points.push_back({{"xi", p.xi}, {"initial_N0", p.initial_n0}, {"final_N0_mean", p.final_n0},
                          {"final_N0_sem", p.final_n0_sem}});
    }
    w.write("threshold.csv", csv.str());
    const double horizon = cfg.t_end - cfg.start_time;
    json j = {{"threshold",
             {{"initial_N0", scan.initial_n0},
              {"retention", scan.retention},
              {"horizon", horizon},
              {"horizon_seconds", horizon / cfg.trap.omega_g},
              {"bracket", bracket_json(scan.bracket)},
              {"hold_bracket", bracket_json(scan.hold)},
              {"monotone_non_increasing", scan.monotone},
              {"points", points}}},
            {"final", final_values(e)}};
    j.update(onset_json(e, cfg.onset, cfg.trap.omega_g));
    return j;
}

json run_stabilization(const ExperimentConfig& cfg, Writer& w)
{
    const SimulationParams p = cfg.simulation();
    const EnsembleSummary e = run_ensemble(p, w, cfg.name);
    write_runs(w, e, cfg.trap.omega_g, "");
    const TimeWindow window = *p.stats_window;
    const double omega_g = cfg.trap.omega_g;

    std::vector<StabilizationStats> runs;
    std::vector<double> dwell;
    std::ostringstream per_run;
    per_run << "replica,mean_N0,std_N0,extracted_atoms,extraction_rate,extraction_rate_per_second\n";
    for (std::size_t r = 0; r < e.replicas.size(); ++r) {
        const WindowMoments& m = *e.replicas[r].window;
        const StabilizationStats s = stabilization_stats(m, window);
        runs.push_back(s);
        per_run << r << "," << num(s.mean_N0) << "," << num(s.std_N0) << "," << num(s.extracted_atoms) << ","
                << num(s.extraction_rate) << "," << num(s.extraction_rate * omega_g) << "\n";
        if (dwell.size() < m.n0_dwell.size()) dwell.resize(m.n0_dwell.size(), 0.0);
        for (std::size_t k = 0; k < m.n0_dwell.size(); ++k) dwell[k] += m.n0_dwell[k];
    }
    w.write("stabilization.csv", per_run.str());

    double total = 0.0;
    for (double d : dwell) total += d;
    std::ostringstream hist;
    hist << "N0,dwell_fraction\n";
    for (std::size_t k = 0; k < dwell.size(); ++k)
        if (dwell[k] > 0.0) hist << k << "," << num(dwell[k] / total) << "\n";
    w.write("histogram.csv", hist.str());

    const EnsembleStabilization c = combine_stabilization(runs);
    const double duration = window.end - window.begin;
    // a run holds the condensate if it never spends time at N0 = 0
    int held = 0;
    for (const auto& traj : e.replicas) {
        const auto& d = traj.window->n0_dwell;
        held += d.empty() || d[0] == 0.0;
    }
    json j = {{"stabilization",
             {{"window", {window.begin, window.end}},
              {"window_seconds", duration / omega_g},
              {"mean_N0", c.mean_N0},
              {"within_run_std", c.within_run_std},
              {"pooled_std", c.pooled_std},
              {"between_run_std", c.between_run_std},
              {"relative_std_within_run", c.mean_N0 > 0 ? c.within_run_std / c.mean_N0 : 0.0},
              {"relative_std_pooled", c.mean_N0 > 0 ? c.pooled_std / c.mean_N0 : 0.0},
              {"extracted_atoms", c.extracted_atoms},
              {"extraction_rate", c.extraction_rate},
              {"extraction_rate_per_second", c.extraction_rate * omega_g},
              {"replicas_holding_condensate", held},
              {"runs", c.runs}}},
            {"final", final_values(e)}};
    j.update(onset_json(e, cfg.onset, cfg.trap.omega_g));
    return j;
}

json run_equilibrium(const ExperimentConfig& cfg, Writer& w)
{
    const SimulationParams p = cfg.simulation();
    const EnsembleSummary e = run_ensemble(p, w, cfg.name);
    write_runs(w, e, cfg.trap.omega_g, "");
    const int shells = cfg.trap.shell_count();
    std::vector<std::vector<double>> cols;
    for (const auto& traj : e.replicas) {
        const WindowMoments& m = *traj.window;
        std::vector<double> col;
        for (double v : m.shell_integrals) col.push_back(v / m.duration);
        cols.push_back(col);
    }
    const SeriesStats s = reduce_series(cols);
    std::ostringstream csv;
    csv << "m,degeneracy,mean_N,mean_N_sem,occupation_per_state\n";
    for (int m = 0; m < shells; ++m) {
        const auto i = static_cast<std::size_t>(m);
        csv << m << "," << shell_degeneracy(m) << "," << num(s.mean[i]) << "," << num(s.sem[i]) << ","
            << num(s.mean[i] / static_cast<double>(shell_degeneracy(m))) << "\n";
    }
    w.write("shells.csv", csv.str());

    ShellOccupancy initial(p.initial_counts.empty() ? std::vector<std::int64_t>(static_cast<std::size_t>(shells), 0)
                                                    : p.initial_counts);
    json conserved = json::array();
    for (const auto& traj : e.replicas)
        conserved.push_back(traj.final_state.total() == initial.total() &&
                            traj.final_state.energy() == initial.energy());
    return {{"equilibrium",
             {{"N", initial.total()},
              {"energy", initial.energy()},
              {"window", {p.stats_window->begin, p.stats_window->end}},
              {"mean_N", s.mean},
              {"conserved", conserved},
              {"events", e.events_total.mean.back()}}}};
}

json fit_json(const PowerLawFit& f)
{
    return {{"eps_exponent", f.eps_exponent},   {"eps_ci95", finite_or_null(f.eps_ci)},
            {"n0_exponent", finite_or_null(f.n0_exponent)}, {"n0_ci95", finite_or_null(f.n0_ci)},
            {"log_prefactor", f.log_prefactor}, {"rms_residual", f.rms_residual},
            {"points", f.points}};
}

json run_bre(const ExperimentConfig& cfg, Writer& w)
{
    const BreSpec& b = cfg.bre;
    w.note("bre scaling grid: " + std::to_string(b.grid.epsilon.size() * b.grid.n0.size()) + " points");
    const ScalingReport r = scaling_report(b.grid, b.model(0), b.system);
    std::ostringstream csv;
    csv << "epsilon,n0,eps_n0,outside_validity,A0,A1a,A1b,A2a_neutral,A2a_bad,A2a_good,A2a_other,A2b,"
           "residual,full_slow,full_bad,competition_full,competition_closed\n";
    for (const auto& p : r.points) {
        const auto& t = p.terms;
        csv << num(p.epsilon) << "," << p.n0 << "," << num(p.epsilon * static_cast<double>(p.n0)) << ","
            << (p.outside_validity ? 1 : 0) << "," << num(t.A0) << "," << num(t.A1a) << "," << num(t.A1b) << ","
            << num(t.A2a_neutral) << "," << num(t.A2a_bad) << "," << num(t.A2a_good) << "," << num(t.A2a_other)
            << "," << num(t.A2b) << "," << num(t.residual()) << "," << num(p.full.slow) << ","
            << num(p.full.fast_bad) << "," << num(p.competition_full) << "," << num(p.competition_closed) << "\n";
    }
    w.write("bre_points.csv", csv.str());

    const auto kernel = correlation_kernel(b.model(b.kernel_n0), b.system, b.kernel_taus);
    std::ostringstream kcsv;
    kcsv << "tau,magnitude,exp_minus_2_gamma_er_tau\n";
    json kj = json::array();
    for (const auto& k : kernel) {
        const double ref = std::exp(-2.0 * b.system.gamma_er * k.tau);
        kcsv << num(k.tau) << "," << num(k.magnitude) << "," << num(ref) << "\n";
        kj.push_back({{"tau", k.tau}, {"magnitude", k.magnitude}});
    }
    w.write("bre_kernel.csv", kcsv.str());

    return {{"bre",
             {{"a2a_bad_fit", fit_json(r.bad)},
              {"a2a_bad_full_fit", fit_json(r.bad_full)},
              {"a1a_fit", fit_json(r.a1a)},
              {"a1a_resummed_fit", fit_json(r.a1a_resummed)},
              {"competition_max_rel_error", r.competition_max_rel_error},
              {"max_residual", r.max_residual},
              {"max_residual_over_eps_n0_cubed", r.max_residual_bound},
              {"flagged_points", r.flagged},
              {"validity_limit", b.grid.validity_limit},
              {"kernel", kj}}}};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log)
{
    cfg.validate();
    Writer w(cfg, log);
    json summary = common_summary(cfg);
    json body;
    switch (cfg.kind) {
    case ExperimentKind::Trajectory: body = run_trajectory(cfg, w); break;
    case ExperimentKind::Sweep: body = run_sweep(cfg, w); break;
    case ExperimentKind::Threshold: body = run_threshold(cfg, w); break;
    case ExperimentKind::Stabilization: body = run_stabilization(cfg, w); break;
    case ExperimentKind::Equilibrium: body = run_equilibrium(cfg, w); break;
    case ExperimentKind::Bre: body = run_bre(cfg, w); break;
    }
    summary.update(body);
    w.write("summary.json", summary.dump(2) + "\n");
    return {w.files(), summary};
}

}  // namespace condload
