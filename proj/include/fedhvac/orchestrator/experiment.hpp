#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedhvac/env/hvac_env.hpp"
#include "fedhvac/fed/aggregation.hpp"
#include "fedhvac/fed/server.hpp"
#include "fedhvac/orchestrator/policy.hpp"
#include "fedhvac/sac/agent.hpp"
#include "fedhvac/sac/checkpoint.hpp"

namespace fedhvac::orchestrator {

enum class Mode { kFederated, kIndependent, kPid };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

enum class CheckpointPolicy { kAll, kFinal, kNone };

std::string_view to_string(CheckpointPolicy p);
CheckpointPolicy checkpoint_policy_from_string(std::string_view name);

struct ExperimentConfig {
  std::string name = "experiment";
  Mode mode = Mode::kFederated;
  sac::SacConfig sac;
  fed::ServerConfig server;
  env::EnvConfig env;
  std::size_t local_updates = 24;
  std::size_t episodes = 15;
  std::vector<std::string> clients = env::training_climate_names();
  std::string eval_climate{env::kEvalClimate};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::size_t eval_episodes = 3;
  PidGains pid;
  std::uint64_t weather_seed = 2023;  // base weather years, shared by every run
  std::size_t workers = 0;            // 0: one per hardware thread
  CheckpointPolicy checkpoints = CheckpointPolicy::kAll;
  std::filesystem::path output_dir = "runs";

  ExperimentConfig();
  /// Copies environment dimensions (obs_dim, action box) into the SAC config.
  void sync_dims();
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Client RNG seed = base * 1000 + index; evaluation seeds = base * 1000 + 900 + i.
std::uint64_t client_seed(std::uint64_t base_seed, std::size_t client_index);
std::vector<std::uint64_t> eval_seeds(std::uint64_t base_seed, std::size_t n);
std::uint64_t client_episode_seed(std::uint64_t client_seed, std::size_t episode);
/// Base-weather seed of a climate; independent of the run seed.
std::uint64_t weather_seed_for(std::uint64_t weather_seed, std::string_view climate);

env::HvacEnv make_env(const ExperimentConfig& config, std::string_view climate);

struct TrainRow {
  std::uint64_t seed = 0;
  std::string client;
  std::size_t episode = 0;  // 1-based
  double e_tot_kwh = 0.0;
  double violation_pct = 0.0;
  double mean_return = 0.0;
};

struct EvalRow {
  std::uint64_t seed = 0;
  std::string client;  // empty for a global model
  std::size_t episode = 0;
  std::size_t eval_episode = 0;
  double e_tot_kwh = 0.0;
  double violation_pct = 0.0;
  double mean_return = 0.0;
};

struct WeeklyRow {
  std::uint64_t seed = 0;
  std::string client;
  std::size_t episode = 0;
  std::size_t week = 0;
  double violation_pct = 0.0;
};

struct RoundRow {
  std::uint64_t round = 0;
  std::string network;
  fed::NetworkRoundStats stats;
};

struct NamedCheckpoint {
  std::string file;  // relative to checkpoints/
  sac::Checkpoint checkpoint;
};

struct RunMetrics {
  std::vector<TrainRow> train;
  std::vector<EvalRow> eval;
  std::vector<WeeklyRow> weekly;
  std::vector<RoundRow> rounds;
  std::vector<NamedCheckpoint> checkpoints;
};

/// Progress hook: (episode, total episodes). Called on the coordinator thread.
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

RunMetrics run_federated(const ExperimentConfig& config, std::uint64_t seed, const ProgressFn& progress = {});
RunMetrics run_independent(const ExperimentConfig& config, std::uint64_t seed, const ProgressFn& progress = {});
RunMetrics run_pid(const ExperimentConfig& config, std::uint64_t seed);
RunMetrics run_experiment(const ExperimentConfig& config, std::uint64_t seed, const ProgressFn& progress = {});

/// Evaluates a checkpointed agent on the configured evaluation climate.
RunMetrics evaluate_checkpoint(const ExperimentConfig& config, const sac::Checkpoint& ckpt, std::uint64_t seed);

std::string run_id(const ExperimentConfig& config, std::uint64_t seed);

void write_train_csv(const std::filesystem::path& path, const std::vector<TrainRow>& rows);
/// Adds a client_id column when any row names a client.
void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows);
void write_weekly_csv(const std::filesystem::path& path, const std::vector<WeeklyRow>& rows);
void write_round_csv(const std::filesystem::path& path, const std::vector<RoundRow>& rows);

/// Writes the CSVs and checkpoints into `dir` (created if missing). `resolved_config`
/// is echoed verbatim into config.resolved.
void write_run(const std::filesystem::path& dir, const RunMetrics& metrics, const std::string& resolved_config);

}  // namespace fedhvac::orchestrator
