#include "condload/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace condload {

std::string to_string(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::Trajectory: return "trajectory";
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::Threshold: return "threshold";
    case ExperimentKind::Stabilization: return "stabilization";
    case ExperimentKind::Equilibrium: return "equilibrium";
    case ExperimentKind::Bre: return "bre";
    }
    return "trajectory";
}

ExperimentKind parse_experiment_kind(const std::string& text)
{
    for (auto k : {ExperimentKind::Trajectory, ExperimentKind::Sweep, ExperimentKind::Threshold,
                   ExperimentKind::Stabilization, ExperimentKind::Equilibrium, ExperimentKind::Bre})
        if (to_string(k) == text) return k;
    throw ConfigError("unknown experiment kind '" + text +
                      "' (trajectory, sweep, threshold, stabilization, equilibrium, bre)");
}

std::string to_string(RateUnit unit) { return unit == RateUnit::OmegaG ? "omega_g" : "per_second"; }

RateUnit parse_rate_unit(const std::string& text)
{
    if (text == "omega_g") return RateUnit::OmegaG;
    if (text == "per_second") return RateUnit::PerSecond;
    throw ConfigError("unknown rate unit '" + text + "' (omega_g, per_second)");
}

ReducedBREModel BreSpec::model(std::int64_t n0) const
{
    ReducedBREModel m;
    m.M_g = M_g;
    m.occupations.assign(static_cast<std::size_t>(std::max(M_g, 1)), 0);
    m.occupations[0] = n0;
    for (std::size_t i = 0; i < background.size() && i + 1 < m.occupations.size(); ++i)
        m.occupations[i + 1] = background[i];
    m.initial_level = initial_level;
    m.initial_internal = initial_internal;
    return m;
}

double ExperimentConfig::gamma_eff_natural() const
{
    return gamma_eff_unit == RateUnit::OmegaG ? gamma_eff : gamma_eff / trap.omega_g;
}

std::optional<TimeWindow> ExperimentConfig::stats_window() const
{
    if (stats_begin < 0.0 && stats_end < 0.0) return std::nullopt;
    return TimeWindow{std::max(0.0, stats_begin), stats_end < 0.0 ? t_end : stats_end};
}

SimulationParams ExperimentConfig::simulation() const
{
    SimulationParams p;
    p.trap = trap;
    p.loading.gamma_eff = gamma_eff_natural();
    p.loading.mode = loading_mode;
    p.loading.max_load_shell = max_load_shell;
    const double g = p.loading.gamma_eff;
    switch (outcoupling) {
    case OutcouplingKind::Off: p.outcoupling = OutcouplingPolicy::off(); break;
    case OutcouplingKind::Constant: p.outcoupling = OutcouplingPolicy::constant(xi * g, start_time); break;
    case OutcouplingKind::Randomized:
        p.outcoupling = OutcouplingPolicy::randomized(c, f_max, resample_interval, start_time);
        break;
    }
    p.delta = delta;
    p.evaporation = evaporation;
    p.t_end = t_end;
    p.sample_grid = uniform_grid(t_end, grid_points);
    if (outcoupling != OutcouplingKind::Off && start_time > 0.0 && start_time < t_end) {
        auto pos = std::lower_bound(p.sample_grid.begin(), p.sample_grid.end(), start_time);
        if (*pos != start_time) p.sample_grid.insert(pos, start_time);
    }
    p.seed = seed;
    p.realizations = realizations;
    p.threads = threads;
    p.refresh_interval = refresh_interval;
    p.check_invariants = check_invariants;
    if (!initial_occupancy.empty()) {
        if (static_cast<int>(initial_occupancy.size()) > trap.shell_count())
            throw ConfigError("run.initial_occupancy lists more shells than the trap has");
        p.initial_counts = initial_occupancy;
        p.initial_counts.resize(static_cast<std::size_t>(trap.shell_count()), 0);
    }
    p.stats_window = stats_window();
    p.window_shells = kind == ExperimentKind::Equilibrium;
    p.window_histogram = kind == ExperimentKind::Stabilization;
    return p;
}

void ExperimentConfig::validate() const
{
    onset.validate();
    if (!(gamma_eff >= 0.0)) throw InvalidParameter("loading.gamma_eff must be >= 0");
    if (grid_points < 1) throw InvalidParameter("run.grid_points must be >= 1");
    if (kind == ExperimentKind::Bre) {
        bre.system.validate();
        bre.model(1).validate();
        return;
    }
    simulation().validate();
    if (kind == ExperimentKind::Sweep) {
        if (sweep.key.empty() || sweep.values.empty())
            throw InvalidParameter("sweep needs sweep.key and sweep.values");
        if (!sweep.t_end.empty() && sweep.t_end.size() != sweep.values.size())
            throw InvalidParameter("sweep.t_end must list one horizon per value");
        for (const auto& v : sweep.values) {
            ExperimentConfig probe = *this;
            probe.kind = ExperimentKind::Trajectory;
            set_value(probe, sweep.key, v);
        }
    }
    if (kind == ExperimentKind::Threshold) {
        if (threshold.xi.empty()) throw InvalidParameter("threshold.xi is empty");
        if (!(start_time < t_end)) throw InvalidParameter("outcoupling must start before run.t_end");
    }
    if (kind == ExperimentKind::Stabilization && !stats_window())
        throw InvalidParameter("stabilization needs run.stats_begin / run.stats_end");
}

// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    T value{};
    auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ConfigError("invalid value '" + text + "' for " + key);
    return value;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError("invalid boolean '" + text + "' for " + key);
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    if (trim(text).empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text)
{
    std::vector<T> out;
    for (const auto& item : split_list(text)) out.push_back(parse_number<T>(key, item));
    return out;
}

template <typename T>
std::string join(const std::vector<T>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        if constexpr (std::is_same_v<T, double>) out += format_double(v[i]);
        else if constexpr (std::is_same_v<T, std::string>) out += v[i];
        else out += std::to_string(v[i]);
    }
    return out;
}

struct Field {
    std::string key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename T>
Field number(std::string key, T ExperimentConfig::*member)
{
    return {key,
            [member](const ExperimentConfig& c) {
                if constexpr (std::is_same_v<T, double>) return format_double(c.*member);
                else return std::to_string(c.*member);
            },
            [key, member](ExperimentConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); }};
}

template <typename T, typename Get>
Field nested_number(std::string key, Get access)
{
    return {key,
            [access](const ExperimentConfig& c) {
                const T& v = access(c);
                if constexpr (std::is_same_v<T, double>) return format_double(v);
                else return std::to_string(v);
            },
            [key, access](ExperimentConfig& c, const std::string& v) { access(c) = parse_number<T>(key, v); }};
}

template <typename T, typename Get>
Field nested_list(std::string key, Get access)
{
    return {key, [access](const ExperimentConfig& c) { return join(access(c)); },
            [key, access](ExperimentConfig& c, const std::string& v) { access(c) = parse_list<T>(key, v); }};
}

template <typename Get>
Field flag(std::string key, Get access)
{
    return {key,
            [access](const ExperimentConfig& c) {
                return std::string(access(c) ? "true" : "false");
            },
            [key, access](ExperimentConfig& c, const std::string& v) { access(c) = parse_bool(key, v); }};
}

template <typename Get, typename ToStr, typename Parse>
Field enumerated(std::string key, Get access, ToStr to_str, Parse parse)
{
    return {key, [access, to_str](const ExperimentConfig& c) { return to_str(access(c)); },
            [access, parse](ExperimentConfig& c, const std::string& v) { access(c) = parse(trim(v)); }};
}

template <typename Get>
Field text(std::string key, Get access)
{
    return {key, [access](const ExperimentConfig& c) { return access(c); },
            [access](ExperimentConfig& c, const std::string& v) { access(c) = trim(v); }};
}

#define FIELD(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = {
        text("experiment.name", FIELD(name)),
        enumerated("experiment.kind", FIELD(kind), [](ExperimentKind k) { return to_string(k); },
                   parse_experiment_kind),

        nested_number<double>("trap.omega_g", FIELD(trap.omega_g)),
        nested_number<int>("trap.m_max", FIELD(trap.m_max)),
        nested_number<int>("trap.virtual_extra", FIELD(trap.virtual_extra)),
        nested_number<double>("trap.mass", FIELD(trap.mass)),
        nested_number<double>("trap.scattering_length", FIELD(trap.scattering_length)),

        nested_number<double>("reservoir.gamma_eg", FIELD(reservoir.gamma_eg)),
        nested_number<double>("reservoir.n_ex", FIELD(reservoir.n_ex)),
        nested_number<double>("reservoir.N_ex", FIELD(reservoir.N_ex)),
        nested_number<double>("reservoir.T", FIELD(reservoir.T)),
        nested_number<double>("reservoir.omega_e", FIELD(reservoir.omega_e)),
        nested_number<double>("reservoir.omega_rec", FIELD(reservoir.omega_rec)),

        number("loading.gamma_eff", &ExperimentConfig::gamma_eff),
        enumerated("loading.gamma_eff_unit", FIELD(gamma_eff_unit), [](RateUnit u) { return to_string(u); },
                   parse_rate_unit),
        enumerated("loading.mode", FIELD(loading_mode), [](LoadingMode m) { return to_string(m); },
                   [](const std::string& s) {
                       try {
                           return parse_loading_mode(s);
                       } catch (const std::exception& e) {
                           throw ConfigError(e.what());
                       }
                   }),
        number("loading.max_load_shell", &ExperimentConfig::max_load_shell),

        number("collisions.delta", &ExperimentConfig::delta),
        flag("collisions.evaporation", FIELD(evaporation)),

        enumerated("outcoupling.kind", FIELD(outcoupling), [](OutcouplingKind k) { return to_string(k); },
                   [](const std::string& s) {
                       try {
                           return parse_outcoupling_kind(s);
                       } catch (const std::exception& e) {
                           throw ConfigError(e.what());
                       }
                   }),
        number("outcoupling.xi", &ExperimentConfig::xi),
        number("outcoupling.c", &ExperimentConfig::c),
        number("outcoupling.f_max", &ExperimentConfig::f_max),
        number("outcoupling.resample_interval", &ExperimentConfig::resample_interval),
        number("outcoupling.start_time", &ExperimentConfig::start_time),

        number("run.t_end", &ExperimentConfig::t_end),
        number("run.grid_points", &ExperimentConfig::grid_points),
        number("run.seed", &ExperimentConfig::seed),
        number("run.realizations", &ExperimentConfig::realizations),
        number("run.threads", &ExperimentConfig::threads),
        number("run.refresh_interval", &ExperimentConfig::refresh_interval),
        flag("run.check_invariants", FIELD(check_invariants)),
        nested_list<std::int64_t>("run.initial_occupancy", FIELD(initial_occupancy)),
        number("run.stats_begin", &ExperimentConfig::stats_begin),
        number("run.stats_end", &ExperimentConfig::stats_end),

        nested_number<double>("onset.n_abs", FIELD(onset.n_abs)),
        nested_number<double>("onset.f_rel", FIELD(onset.f_rel)),
        flag("onset.sustained", FIELD(onset.sustained)),

        text("sweep.key", FIELD(sweep.key)),
        {"sweep.values", [](const ExperimentConfig& c) { return join(c.sweep.values); },
         [](ExperimentConfig& c, const std::string& v) { c.sweep.values = split_list(v); }},
        nested_list<double>("sweep.t_end", FIELD(sweep.t_end)),

        nested_list<double>("threshold.xi", FIELD(threshold.xi)),
        nested_number<double>("threshold.retention", FIELD(threshold.retention)),
        nested_number<int>("threshold.refinements", FIELD(threshold.refinements)),

        nested_number<double>("bre.gamma_er", FIELD(bre.system.gamma_er)),
        nested_number<double>("bre.gamma_eg", FIELD(bre.system.gamma_eg)),
        nested_number<double>("bre.Omega", FIELD(bre.system.Omega)),
        nested_number<double>("bre.delta", FIELD(bre.system.delta)),
        nested_number<double>("bre.omega_trap", FIELD(bre.system.omega_trap)),
        nested_number<double>("bre.eta", FIELD(bre.system.eta)),
        nested_number<int>("bre.M_g", FIELD(bre.M_g)),
        nested_number<int>("bre.initial_level", FIELD(bre.initial_level)),
        enumerated("bre.initial_internal", FIELD(bre.initial_internal),
                   [](InternalState s) { return std::string(s == InternalState::Excited ? "e" : "r"); },
                   [](const std::string& s) {
                       if (s == "e") return InternalState::Excited;
                       if (s == "r") return InternalState::Auxiliary;
                       throw ConfigError("bre.initial_internal must be 'e' or 'r'");
                   }),
        nested_list<std::int64_t>("bre.background", FIELD(bre.background)),
        nested_list<double>("bre.epsilon", FIELD(bre.grid.epsilon)),
        nested_list<std::int64_t>("bre.n0", FIELD(bre.grid.n0)),
        nested_number<double>("bre.validity_limit", FIELD(bre.grid.validity_limit)),
        nested_list<double>("bre.kernel_taus", FIELD(bre.kernel_taus)),
        nested_number<std::int64_t>("bre.kernel_n0", FIELD(bre.kernel_n0)),

        text("output.dir", FIELD(out_dir)),
        text("output.prefix", FIELD(prefix)),
    };
    return table;
}

#undef FIELD

const Field& find_field(const std::string& key)
{
    for (const auto& f : fields())
        if (f.key == key) return f;
    throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void set_value(ExperimentConfig& cfg, const std::string& key, const std::string& value)
{
    find_field(key).set(cfg, value);
}

std::string get_value(const ExperimentConfig& cfg, const std::string& key)
{
    return find_field(key).get(cfg);
}

std::vector<std::string> config_keys()
{
    std::vector<std::string> keys;
    for (const auto& f : fields()) keys.push_back(f.key);
    return keys;
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    set_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

ExperimentConfig parse_config(std::istream& in)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    ExperimentConfig cfg;
    // A preset line, if present, seeds every field before the explicit keys.
    if (auto p = tree.get_child_optional("experiment.preset")) cfg = preset(trim(p->data()));
    for (const auto& [section, body] : tree) {
        if (body.empty() && !trim(body.data()).empty())
            throw ConfigError("key '" + section + "' outside of any section");
        const auto keys = config_keys();
        if (std::none_of(keys.begin(), keys.end(),
                         [&](const std::string& k) { return k.rfind(section + ".", 0) == 0; }))
            throw ConfigError("unknown config section '" + section + "'");
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            if (full == "experiment.preset") continue;
            set_value(cfg, full, value.data());
        }
    }
    return cfg;
}

ExperimentConfig parse_config_text(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

std::string dump_config(const ExperimentConfig& cfg)
{
    std::string out;
    std::string section;
    for (const auto& f : fields()) {
        const auto dot = f.key.find('.');
        const std::string s = f.key.substr(0, dot);
        if (s != section) {
            if (!section.empty()) out += "\n";
            out += "[" + s + "]\n";
            section = s;
        }
        out += f.key.substr(dot + 1) + " = " + f.get(cfg) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kSecond = 2.0 * constants::pi * 1000.0;  // 1 s in units of 1/omega_g at 1 kHz

ExperimentConfig loading_base(const std::string& name)
{
    ExperimentConfig c;
    c.name = name;
    c.kind = ExperimentKind::Trajectory;
    c.gamma_eff = 0.01;
    c.gamma_eff_unit = RateUnit::PerSecond;
    c.loading_mode = LoadingMode::PerStateErgodic;
    c.trap.m_max = 50;
    c.t_end = 1e5;
    c.grid_points = 200;
    c.realizations = 10;
    c.seed = 20000;

    // Reservoir at phase-space density 1e-5, 100 uK; advisory only.
    c.reservoir.gamma_eg = 100.0;
    c.reservoir.T = 1e-4;
    c.reservoir.omega_e = 0.5 * c.trap.omega_g;
    const double lambda = thermal_wavelength(c.trap.mass, c.reservoir.T);
    c.reservoir.n_ex = 1e-5 / (lambda * lambda * lambda);
    return c;
}

ExperimentConfig outcoupling_base(const std::string& name)
{
    ExperimentConfig c = loading_base(name);
    c.trap.m_max = 10;
    c.gamma_eff = 6.28;
    const double lambda = thermal_wavelength(c.trap.mass, c.reservoir.T);
    c.reservoir.n_ex = 6e-3 / (lambda * lambda * lambda);
    c.start_time = 0.35 * kSecond;
    c.grid_points = 400;
    return c;
}

}  // namespace

std::vector<std::string> preset_names()
{
    return {"fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "thermalization", "bre-scaling"};
}

ExperimentConfig preset(const std::string& name)
{
    if (name == "fig3") return loading_base("fig3");
    if (name == "fig4") {
        ExperimentConfig c = loading_base("fig4");
        c.kind = ExperimentKind::Sweep;
        c.realizations = 4;
        c.grid_points = 300;
        c.sweep = {"loading.gamma_eff", {"0.01", "0.1", "1"}, {6e4, 1.5e4, 2.5e3}};
        return c;
    }
    if (name == "fig5") {
        ExperimentConfig c = loading_base("fig5");
        c.kind = ExperimentKind::Sweep;
        c.realizations = 4;
        c.grid_points = 400;
        c.sweep = {"trap.scattering_length", {"1.25e-09", "6e-09", "2.4e-08"}, {2e5, 6e4, 4e4}};
        return c;
    }
    if (name == "fig6") {
        ExperimentConfig c = loading_base("fig6");
        c.kind = ExperimentKind::Sweep;
        c.realizations = 4;
        c.sweep = {"trap.m_max", {"30", "60"}, {1e5, 1e5}};
        return c;
    }
    if (name == "fig7") {
        ExperimentConfig c = outcoupling_base("fig7");
        c.kind = ExperimentKind::Threshold;
        c.outcoupling = OutcouplingKind::Constant;
        c.xi = 1.14;
        c.t_end = c.start_time + 16.0 * kSecond;
        c.realizations = 4;
        c.threshold.xi = {1.0, 1.05, 1.1, 1.14, 1.2, 1.3, 1.4, 1.6, 2.0};
        c.threshold.retention = 0.5;
        return c;
    }
    if (name == "fig8") {
        ExperimentConfig c = outcoupling_base("fig8");
        c.kind = ExperimentKind::Stabilization;
        c.outcoupling = OutcouplingKind::Randomized;
        c.c = 1.17;
        c.f_max = 0.05;
        c.t_end = c.start_time + 40.0 * kSecond;
        c.stats_begin = c.start_time;
        c.stats_end = c.t_end;
        c.realizations = 10;
        return c;
    }
    if (name == "thermalization") {
        ExperimentConfig c;
        c.name = name;
        c.kind = ExperimentKind::Equilibrium;
        c.trap.m_max = 14;
        c.trap.virtual_extra = 0;
        c.evaporation = false;
        c.gamma_eff = 0.0;
        c.delta = 1.0;
        c.initial_occupancy.assign(15, 0);
        c.initial_occupancy[7] = 200;
        c.t_end = 1000.0;
        c.grid_points = 100;
        c.stats_begin = 50.0;
        c.stats_end = 1000.0;
        c.realizations = 2;
        c.seed = 31;
        return c;
    }
    if (name == "bre-scaling") {
        ExperimentConfig c;
        c.name = name;
        c.kind = ExperimentKind::Bre;
        c.bre.system.gamma_er = 1.0;
        c.bre.system.eta = 0.3;
        c.bre.M_g = 4;
        c.bre.initial_level = 3;
        return c;
    }
    std::string names;
    for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "'; available: " + names);
}

}  // namespace condload
