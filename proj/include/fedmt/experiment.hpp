#pragma once

#include <map>
#include <string>
#include <vector>

#include "fedmt/config.hpp"
#include "fedmt/fl.hpp"
#include "fedmt/stats.hpp"

namespace fedmt {

struct ExperimentResult {
    std::vector<stats::EvalReport> reports;  // per task: baseline row then FL row
    std::map<std::string, stats::ComparisonResult> comparisons;  // task -> FL vs baseline
    std::vector<RoundLogEntry> round_log;
};

// Trains one centralized baseline per task plus one federated run across all
// tasks, evaluates the metric suite on each validation split, and writes
// metrics.csv, comparison.json, rounds.csv, run-meta.json, and per-task
// Grad-CAM renders under the configured output directory.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool quiet = false);

std::string summary_table(const ExperimentResult& result);

}  // namespace fedmt
