// Runs a configured experiment and writes its CSV and JSON outputs.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "condload/config.hpp"

namespace condload {

inline constexpr int kSummarySchemaVersion = 1;

std::string code_version();

/// Column order of every trajectory CSV.
const std::vector<std::string>& trajectory_columns();

struct ExperimentResult {
    std::vector<std::string> files;  // written paths, in write order
    nlohmann::json summary;
};

/// Validates `cfg`, runs it and writes `<out_dir>/<prefix>_*` files. Progress
/// lines go to `log` when given. Throws on invalid configs or unwritable paths.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Mean and standard error of per-replica onset times, over the replicas
/// that reach the criterion.
struct ReplicaOnsets {
    double mean = 0.0;
    double sem = 0.0;
    int found = 0;
    int total = 0;
};

ReplicaOnsets replica_onsets(const EnsembleSummary& summary, const OnsetCriterion& crit);

}  // namespace condload
