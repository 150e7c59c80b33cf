#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fedhvac/orchestrator/experiment.hpp"
#include "fedhvac/orchestrator/summary.hpp"

namespace fedhvac::cli {

/// One completed run directory, reduced to its final-checkpoint evaluation.
struct RunRecord {
  std::filesystem::path dir;
  orchestrator::ExperimentConfig config;
  orchestrator::RunResult result;
};

/// nullopt (with a reason) when the directory lacks config.resolved or eval_metrics.csv.
std::optional<RunRecord> load_run(const std::filesystem::path& dir, std::string* reason = nullptr);

/// Markdown tables: client optimizers, server optimizers, federated vs independent.
/// Skipped directories are reported on `warnings`.
std::string build_report(const std::vector<std::filesystem::path>& run_dirs, std::ostream& warnings,
                         std::size_t resamples = 10'000);

std::string markdown_table(const std::string& title, const std::vector<orchestrator::ConfigSummary>& rows);

}  // namespace fedhvac::cli
