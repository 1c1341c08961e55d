// Command-line entry point: run an experiment, dump a preset, or run the
// branching-ratio scaling scan.
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "condload/config.hpp"
#include "condload/experiment.hpp"

namespace {

struct Options {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<int> realizations;
    std::optional<std::string> out_dir;
    std::vector<std::string> overrides;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Options& o, bool with_output)
{
    cmd->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
    cmd->add_option("--preset", o.preset, "named preset");
    cmd->add_option("--seed", o.seed, "base seed");
    cmd->add_option("--realizations", o.realizations, "number of replicas")->check(CLI::PositiveNumber);
    cmd->add_option("--set", o.overrides, "override section.key=value (repeatable)");
    if (with_output) {
        cmd->add_option("--out-dir", o.out_dir, "output directory");
        cmd->add_flag("-q,--quiet", o.quiet, "no progress output");
    }
}

condload::ExperimentConfig resolve(const Options& o, const std::string& fallback)
{
    if (!o.config.empty() && !o.preset.empty())
        throw condload::ConfigError("--config and --preset are mutually exclusive");
    condload::ExperimentConfig cfg;
    if (!o.config.empty())
        cfg = condload::load_config(o.config);
    else if (!o.preset.empty())
        cfg = condload::preset(o.preset);
    else if (!fallback.empty())
        cfg = condload::preset(fallback);
    else
        throw condload::ConfigError("one of --config or --preset is required");

    for (const auto& a : o.overrides) condload::apply_override(cfg, a);
    if (o.seed) cfg.seed = *o.seed;
    if (o.realizations) cfg.realizations = *o.realizations;
    if (o.out_dir) cfg.out_dir = *o.out_dir;
    cfg.validate();
    return cfg;
}

int execute(const condload::ExperimentConfig& cfg, bool quiet)
{
    const auto result = condload::run_experiment(cfg, quiet ? nullptr : &std::cerr);
    for (const auto& f : result.files) std::cout << f << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stochastic kinetic simulator of continuous condensate loading"};
    app.set_version_flag("--version", condload::code_version());
    app.require_subcommand(1);

    Options run_opts, dump_opts, bre_opts;
    auto* run = app.add_subcommand("run", "run an experiment and write CSV/JSON outputs");
    add_common(run, run_opts, true);
    auto* dump = app.add_subcommand("preset-dump", "print the fully expanded config");
    add_common(dump, dump_opts, false);
    dump->add_option("name", dump_opts.preset, "preset name (same as --preset)");
    auto* bre = app.add_subcommand("bre-scan", "branching-ratio scaling scan (defaults to the bre-scaling preset)");
    add_common(bre, bre_opts, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return execute(resolve(run_opts, ""), run_opts.quiet);
        if (*dump) {
            std::cout << condload::dump_config(resolve(dump_opts, ""));
            return 0;
        }
        if (*bre) {
            const auto cfg = resolve(bre_opts, "bre-scaling");
            if (cfg.kind != condload::ExperimentKind::Bre)
                throw condload::ConfigError("bre-scan needs experiment.kind = bre, got " +
                                            condload::to_string(cfg.kind));
            return execute(cfg, bre_opts.quiet);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
