#include "fedhvac/orchestrator/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "fedhvac/env/episode_stats.hpp"
#include "fedhvac/fed/client.hpp"
#include "fedhvac/fed/worker_pool.hpp"
#include "fedhvac/orchestrator/csv.hpp"

namespace fedhvac::orchestrator {
namespace {

std::size_t worker_count(const ExperimentConfig& config, std::size_t tasks) {
  std::size_t w = config.workers;
  if (w == 0) w = std::max<unsigned>(std::thread::hardware_concurrency(), 1);
  return std::max<std::size_t>(std::min(w, tasks), 1);
}

void record_episode(RunMetrics& m, std::uint64_t seed, const std::string& client, std::size_t episode,
                    const env::EpisodeStats& stats) {
  m.train.push_back({seed, client, episode, stats.energy_kwh(), stats.violation_pct(), stats.total_return});
  const auto weekly = stats.weekly_violation_pct();
  for (std::size_t w = 0; w < weekly.size(); ++w) m.weekly.push_back({seed, client, episode, w + 1, weekly[w]});
}

void record_eval(RunMetrics& m, std::uint64_t seed, const std::string& client, std::size_t episode,
                 const EvalResult& r) {
  for (std::size_t i = 0; i < r.episodes.size(); ++i) {
    const auto& s = r.episodes[i];
    m.eval.push_back({seed, client, episode, i + 1, s.energy_kwh(), s.violation_pct(), s.total_return});
  }
}

bool wants_checkpoint(const ExperimentConfig& config, std::size_t episode) {
  switch (config.checkpoints) {
    case CheckpointPolicy::kAll:
      return true;
    case CheckpointPolicy::kFinal:
      return episode == config.episodes;
    case CheckpointPolicy::kNone:
      return false;
  }
  return false;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kFederated:
      return "federated";
    case Mode::kIndependent:
      return "independent";
    case Mode::kPid:
      return "pid";
  }
  return "?";
}

Mode mode_from_string(std::string_view name) {
  if (name == "federated") return Mode::kFederated;
  if (name == "independent") return Mode::kIndependent;
  if (name == "pid") return Mode::kPid;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "' (expected federated|independent|pid)");
}

std::string_view to_string(CheckpointPolicy p) {
  switch (p) {
    case CheckpointPolicy::kAll:
      return "all";
    case CheckpointPolicy::kFinal:
      return "final";
    case CheckpointPolicy::kNone:
      return "none";
  }
  return "?";
}

CheckpointPolicy checkpoint_policy_from_string(std::string_view name) {
  if (name == "all") return CheckpointPolicy::kAll;
  if (name == "final") return CheckpointPolicy::kFinal;
  if (name == "none") return CheckpointPolicy::kNone;
  throw std::invalid_argument("unknown checkpoint policy '" + std::string(name) + "' (expected all|final|none)");
}

ExperimentConfig::ExperimentConfig() {
  sac.optimizer.learning_rate = 1e-3;
  sync_dims();
}

void ExperimentConfig::sync_dims() {
  sac.obs_dim = env.obs_dim();
  sac.action_box = fed::action_box_from(env.bounds);
}

void ExperimentConfig::validate() const {
  sac.validate();
  server.validate();
  env.validate();
  pid.validate();
  if (sac.obs_dim != env.obs_dim()) throw std::invalid_argument("sac.obs_dim disagrees with the environment");
  if (sac.action_box != fed::action_box_from(env.bounds)) {
    throw std::invalid_argument("sac action box disagrees with the environment bounds");
  }
  if (episodes < 1) throw std::invalid_argument("experiment.episodes must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("experiment.eval_episodes must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("experiment.seeds must not be empty");
  if (mode != Mode::kPid && clients.empty()) throw std::invalid_argument("experiment.clients must not be empty");
  for (const auto& c : clients) {
    (void)env::climate_by_name(c);
    if (c == eval_climate) throw std::invalid_argument("evaluation climate '" + c + "' is also a client");
    if (std::count(clients.begin(), clients.end(), c) > 1) {
      throw std::invalid_argument("client climate '" + c + "' listed twice");
    }
  }
  (void)env::climate_by_name(eval_climate);
  if (local_updates < 1) throw std::invalid_argument("fed.local_updates must be >= 1");
  if (env::kEpisodeSteps % sac.train_freq != 0) {
    throw std::invalid_argument("sac.train_freq must divide the episode length");
  }
  if (mode == Mode::kFederated && env::kEpisodeSteps % (sac.train_freq * local_updates) != 0) {
    throw std::invalid_argument("rounds must not straddle episodes: train_freq * local_updates must divide " +
                                std::to_string(env::kEpisodeSteps));
  }
}

std::uint64_t client_seed(std::uint64_t base_seed, std::size_t client_index) {
  return base_seed * 1000 + client_index;
}

std::vector<std::uint64_t> eval_seeds(std::uint64_t base_seed, std::size_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = base_seed * 1000 + 900 + i;
  return s;
}

std::uint64_t client_episode_seed(std::uint64_t seed, std::size_t episode) {
  return derive_seed(seed, 100 + episode);
}

std::uint64_t weather_seed_for(std::uint64_t weather_seed, std::string_view climate) {
  return derive_seed(weather_seed, fnv1a(climate));
}

env::HvacEnv make_env(const ExperimentConfig& config, std::string_view climate) {
  const auto& profile = env::climate_by_name(climate);
  return env::HvacEnv(profile, weather_seed_for(config.weather_seed, climate), config.env);
}

RunMetrics run_federated(const ExperimentConfig& config, std::uint64_t seed, const ProgressFn& progress) {
  config.validate();
  const std::size_t k_clients = config.clients.size();
  std::vector<std::unique_ptr<fed::HvacClient>> clients;
  for (std::size_t k = 0; k < k_clients; ++k) {
    clients.push_back(std::make_unique<fed::HvacClient>(make_env(config, config.clients[k]), config.sac,
                                                        client_seed(seed, k)));
  }
  // Every client starts from the same server-initialized networks.
  const sac::SacAgent init = sac::SacAgent::create(config.sac, derive_seed(client_seed(seed, 999), 1));
  fed::ServerState server = fed::ServerState::create(config.server, fed::extract_networks(init));
  Rng select_rng(derive_seed(client_seed(seed, 998), 1));
  fed::WorkerPool pool(worker_count(config, k_clients));

  std::vector<std::size_t> episode_of(k_clients, 0);
  std::vector<bool> running(k_clients, false);
  const std::size_t rounds_per_episode = env::kEpisodeSteps / (config.sac.train_freq * config.local_updates);
  env::HvacEnv eval_env = make_env(config, config.eval_climate);
  const auto eseeds = eval_seeds(seed, config.eval_episodes);
  const double tau = config.server.tau_mask;

  RunMetrics m;
  for (std::size_t ep = 1; ep <= config.episodes; ++ep) {
    for (std::size_t r = 0; r < rounds_per_episode; ++r) {
      const auto selected = fed::select_clients(k_clients, config.server.fraction, select_rng);
      for (std::size_t k : selected) {
        if (!running[k]) {
          clients[k]->begin_episode(client_episode_seed(client_seed(seed, k), episode_of[k]));
          running[k] = true;
        }
      }
      std::vector<fed::ClientUpdate> updates(selected.size());
      try {
        pool.run(selected.size(), [&](std::size_t i) {
          updates[i] = fed::run_client_round(*clients[selected[i]], server.globals, config.local_updates);
        });
      } catch (const fed::TaskError& e) {
        throw std::runtime_error("client '" + config.clients[selected[e.task()]] + "' failed in round " +
                                 std::to_string(server.round) + ": " + e.what());
      }

      const auto delta = fed::aggregate(updates);
      std::vector<fed::MaskVector> masks;
      for (std::size_t n = 0; n < delta.size(); ++n) {
        const auto agreement = fed::agreement_scores(updates, n);
        masks.push_back(config.server.masking ? fed::mask_from_agreement(agreement, tau)
                                              : fed::MaskVector{std::vector<double>(delta[n].size(), 1.0)});
        m.rounds.push_back({server.round, std::string(fed::kNetworkNames[n]),
                            fed::round_stats(delta[n], agreement, masks.back(), tau)});
      }
      fed::server_step(server, delta, masks);

      for (std::size_t k : selected) {
        if (clients[k]->episode_done()) {
          ++episode_of[k];
          record_episode(m, seed, config.clients[k], episode_of[k], clients[k]->stats());
          running[k] = false;
        }
      }
    }

    // Global model for evaluation: federated networks plus pooled normalizer statistics.
    sac::SacAgent global = clients.front()->agent();
    fed::load_networks(global, server.globals);
    double log_alpha = 0.0;
    std::uint64_t grad_steps = 0, env_steps = 0;
    std::vector<sac::RunningNormalizer> parts;
    for (const auto& c : clients) {
      log_alpha += c->agent().log_alpha;
      grad_steps += c->agent().gradient_steps;
      env_steps += c->env_steps();
      parts.push_back(c->normalizer());
    }
    global.log_alpha = log_alpha / static_cast<double>(k_clients);
    global.gradient_steps = grad_steps;
    sac::RunningNormalizer pooled = sac::pool_normalizers(parts);
    pooled.training = false;
    SacPolicy policy(global, pooled);
    record_eval(m, seed, "", ep, evaluate_policy(policy, eval_env, eseeds));

    if (wants_checkpoint(config, ep)) {
      sac::Checkpoint ck = sac::make_checkpoint(global, pooled);
      ck.env_steps = env_steps;
      ck.episode = ep;
      ck.round = server.round;
      m.checkpoints.push_back({"ep" + std::to_string(ep) + ".ckpt", std::move(ck)});
    }
    if (progress) progress(ep, config.episodes);
  }
  return m;
}

RunMetrics run_independent(const ExperimentConfig& config, std::uint64_t seed, const ProgressFn& progress) {
  config.validate();
  const std::size_t k_clients = config.clients.size();
  std::vector<RunMetrics> parts(k_clients);
  const auto eseeds = eval_seeds(seed, config.eval_episodes);
  std::mutex progress_mu;
  std::size_t finished = 0;
  fed::WorkerPool pool(worker_count(config, k_clients));

  try {
    pool.run(k_clients, [&](std::size_t k) {
      const std::string& name = config.clients[k];
      const std::uint64_t cs = client_seed(seed, k);
      fed::HvacClient client(make_env(config, name), config.sac, cs);
      env::HvacEnv eval_env = make_env(config, config.eval_climate);
      RunMetrics& m = parts[k];
      for (std::size_t ep = 1; ep <= config.episodes; ++ep) {
        client.begin_episode(client_episode_seed(cs, ep - 1));
        while (!client.episode_done()) client.local_update();
        record_episode(m, seed, name, ep, client.stats());

        sac::RunningNormalizer frozen = client.normalizer();
        frozen.training = false;
        SacPolicy policy(client.agent(), frozen);
        record_eval(m, seed, name, ep, evaluate_policy(policy, eval_env, eseeds));
        if (wants_checkpoint(config, ep)) {
          sac::Checkpoint ck = sac::make_checkpoint(client.agent(), frozen);
          ck.env_steps = client.env_steps();
          ck.episode = ep;
          m.checkpoints.push_back({"ep" + std::to_string(ep) + "_" + name + ".ckpt", std::move(ck)});
        }
        if (progress) {
          std::lock_guard lock(progress_mu);
          progress(++finished, config.episodes * k_clients);
        }
      }
    });
  } catch (const fed::TaskError& e) {
    throw std::runtime_error("independent client '" + config.clients[e.task()] + "' failed: " + e.what());
  }

  RunMetrics out;
  for (auto& p : parts) {
    std::move(p.train.begin(), p.train.end(), std::back_inserter(out.train));
    std::move(p.eval.begin(), p.eval.end(), std::back_inserter(out.eval));
    std::move(p.weekly.begin(), p.weekly.end(), std::back_inserter(out.weekly));
    std::move(p.checkpoints.begin(), p.checkpoints.end(), std::back_inserter(out.checkpoints));
  }
  return out;
}

RunMetrics run_pid(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  RunMetrics m;
  PidController pid(config.pid, config.env.bounds);
  for (std::size_t k = 0; k < config.clients.size(); ++k) {
    env::HvacEnv e = make_env(config, config.clients[k]);
    const std::uint64_t s[] = {client_episode_seed(client_seed(seed, k), 0)};
    const EvalResult r = evaluate_policy(pid, e, s);
    record_episode(m, seed, config.clients[k], 1, r.episodes.front());
  }
  env::HvacEnv eval_env = make_env(config, config.eval_climate);
  const auto eseeds = eval_seeds(seed, config.eval_episodes);
  record_eval(m, seed, "", 1, evaluate_policy(pid, eval_env, eseeds));
  return m;
}

RunMetrics run_experiment(const ExperimentConfig& config, std::uint64_t seed, const ProgressFn& progress) {
  switch (config.mode) {
    case Mode::kFederated:
      return run_federated(config, seed, progress);
    case Mode::kIndependent:
      return run_independent(config, seed, progress);
    case Mode::kPid:
      return run_pid(config, seed);
  }
  throw std::logic_error("unhandled mode");
}

RunMetrics evaluate_checkpoint(const ExperimentConfig& config, const sac::Checkpoint& ckpt, std::uint64_t seed) {
  const sac::SacAgent agent = sac::restore_agent(ckpt, seed);
  if (agent.obs_dim() != config.env.obs_dim()) {
    throw std::invalid_argument("checkpoint observation size does not match the configured environment");
  }
  sac::RunningNormalizer frozen = ckpt.normalizer;
  frozen.training = false;
  SacPolicy policy(agent, frozen);
  env::HvacEnv eval_env = make_env(config, config.eval_climate);
  const auto eseeds = eval_seeds(seed, config.eval_episodes);
  RunMetrics m;
  record_eval(m, seed, "", ckpt.episode, evaluate_policy(policy, eval_env, eseeds));
  return m;
}

std::string run_id(const ExperimentConfig& config, std::uint64_t seed) {
  return config.name + "-" + std::string(to_string(config.mode)) + "-s" + std::to_string(seed);
}

void write_train_csv(const std::filesystem::path& path, const std::vector<TrainRow>& rows) {
  CsvWriter w(path, {"seed", "client_id", "episode", "e_tot_kwh", "violation_pct", "mean_return"});
  for (const auto& r : rows) {
    w.cell(r.seed).cell(r.client).cell(std::uint64_t{r.episode}).cell(r.e_tot_kwh).cell(r.violation_pct)
        .cell(r.mean_return);
    w.end_row();
  }
}

void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows) {
  const bool per_client = std::any_of(rows.begin(), rows.end(), [](const EvalRow& r) { return !r.client.empty(); });
  std::vector<std::string> cols{"seed"};
  if (per_client) cols.push_back("client_id");
  for (const char* c : {"episode", "eval_episode", "e_tot_kwh", "violation_pct", "mean_return"}) cols.push_back(c);
  CsvWriter w(path, cols);
  for (const auto& r : rows) {
    w.cell(r.seed);
    if (per_client) w.cell(r.client);
    w.cell(std::uint64_t{r.episode}).cell(std::uint64_t{r.eval_episode}).cell(r.e_tot_kwh).cell(r.violation_pct)
        .cell(r.mean_return);
    w.end_row();
  }
}

void write_weekly_csv(const std::filesystem::path& path, const std::vector<WeeklyRow>& rows) {
  CsvWriter w(path, {"seed", "client_id", "episode", "week", "violation_pct"});
  for (const auto& r : rows) {
    w.cell(r.seed).cell(r.client).cell(std::uint64_t{r.episode}).cell(std::uint64_t{r.week}).cell(r.violation_pct);
    w.end_row();
  }
}

void write_round_csv(const std::filesystem::path& path, const std::vector<RoundRow>& rows) {
  CsvWriter w(path, {"round", "network", "delta_norm", "mean_mask", "agree_frac"});
  for (const auto& r : rows) {
    w.cell(r.round).cell(r.network).cell(r.stats.delta_norm).cell(r.stats.mean_mask).cell(r.stats.agree_frac);
    w.end_row();
  }
}

void write_run(const std::filesystem::path& dir, const RunMetrics& metrics, const std::string& resolved_config) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_train_csv(dir / "train_metrics.csv", metrics.train);
  write_eval_csv(dir / "eval_metrics.csv", metrics.eval);
  write_weekly_csv(dir / "weekly_violations.csv", metrics.weekly);
  write_round_csv(dir / "round_log.csv", metrics.rounds);
  if (!metrics.checkpoints.empty()) {
    std::filesystem::create_directories(dir / "checkpoints", ec);
    if (ec) throw IoError("cannot create checkpoint directory: " + ec.message());
    for (const auto& c : metrics.checkpoints) sac::save_checkpoint(dir / "checkpoints" / c.file, c.checkpoint);
  }
  std::ofstream cfg(dir / "config.resolved", std::ios::binary);
  if (!cfg) throw IoError("cannot write config.resolved in " + dir.string());
  cfg << resolved_config;
}

}  // namespace fedhvac::orchestrator
