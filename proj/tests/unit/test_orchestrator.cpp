#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fedhvac/orchestrator/csv.hpp"
#include "fedhvac/orchestrator/experiment.hpp"
#include "fedhvac/orchestrator/policy.hpp"
#include "fedhvac/orchestrator/summary.hpp"
#include "fedhvac/sac/checkpoint.hpp"

using namespace fedhvac;
using namespace fedhvac::orchestrator;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Tiny two-client configuration; one episode takes a few seconds.
ExperimentConfig tiny_config(Mode mode) {
  ExperimentConfig c;
  c.name = "tiny";
  c.mode = mode;
  c.sac.hidden = {8};
  c.sac.batch_size = 8;
  c.sac.buffer_capacity = 5000;
  c.clients = {"arizona", "tokyo"};
  c.episodes = 1;
  c.eval_episodes = 1;
  c.local_updates = 24;
  c.workers = 2;
  c.sync_dims();
  return c;
}

class Recorder final : public Policy {
 public:
  env::ActionVector act(const env::Observation& o) override {
    seen.push_back(o);
    return {22.5, 22.5, 22.5, 22.5};
  }
  void reset() override { ++resets; }
  std::vector<env::Observation> seen;
  int resets = 0;
};

}  // namespace

TEST_CASE("seed derivation") {
  CHECK(client_seed(3, 0) == 3000);
  CHECK(client_seed(3, 10) == 3010);
  CHECK(eval_seeds(2, 3) == std::vector<std::uint64_t>{2900, 2901, 2902});
  CHECK(client_episode_seed(5, 0) != client_episode_seed(5, 1));
  CHECK(weather_seed_for(2023, "tokyo") == weather_seed_for(2023, "tokyo"));
  CHECK(weather_seed_for(2023, "tokyo") != weather_seed_for(2023, "bogota"));
  ExperimentConfig c;
  c.sync_dims();
  CHECK(run_id(c, 2) == "experiment-federated-s2");
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  c.sync_dims();
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.clients.push_back("helsinki");
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.clients = {"tokyo", "tokyo"};
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.local_updates = 7;
  CHECK_THROWS(bad.validate());
  bad.mode = Mode::kIndependent;
  CHECK_NOTHROW(bad.validate());
  bad = c;
  bad.env.time_features = false;
  CHECK_THROWS(bad.validate());
  bad.sync_dims();
  CHECK_NOTHROW(bad.validate());
  bad = c;
  bad.clients = {"atlantis"};
  CHECK_THROWS(bad.validate());
  CHECK(mode_from_string("independent") == Mode::kIndependent);
  CHECK_THROWS(mode_from_string("central"));
  CHECK(checkpoint_policy_from_string("final") == CheckpointPolicy::kFinal);
}

TEST_CASE("evaluation is reproducible and counts violations per step") {
  env::HvacEnv e(env::climate_by_name("helsinki"), 2023);
  ConstantPolicy p({22.5, 22.5, 22.5, 22.5});
  const std::vector<std::uint64_t> seeds{900, 901};
  const auto a = evaluate_policy(p, e, seeds);
  const auto b = evaluate_policy(p, e, seeds);
  CHECK(a.mean_energy_gwh == b.mean_energy_gwh);
  CHECK(a.mean_violation_pct == b.mean_violation_pct);
  CHECK(a.mean_return == b.mean_return);
  REQUIRE(a.episodes.size() == 2);
  double v = 0.0;
  for (const auto& s : a.episodes) {
    CHECK(s.steps == 35'040);
    v += 100.0 * double(s.violations) / 35'040.0;
  }
  CHECK(a.mean_violation_pct == doctest::Approx(v / 2.0).epsilon(1e-14));
  CHECK(a.mean_energy_gwh > 0.0);
  CHECK(a.mean_violation_pct >= 0.0);
  CHECK(a.mean_violation_pct <= 100.0);
  CHECK(a.episodes[0].energy_joules != a.episodes[1].energy_joules);
}

TEST_CASE("energy accounting on a 10-step trace") {
  env::HvacEnv e("flat", env::WeatherSeries::constant(35.0, 40.0));
  e.reset(1);
  env::EpisodeStats s;
  double kwh = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto r = e.step({20.0, 22.5, 20.0, 22.5});
    kwh += (r.info.p_it + r.info.p_hvac) * 900.0 / 3.6e6;
    s.add(r, 900.0);
  }
  CHECK(s.energy_kwh() == doctest::Approx(kwh).epsilon(1e-13));
  CHECK(s.energy_gwh() == doctest::Approx(kwh / 1e6).epsilon(1e-13));
}

TEST_CASE("evaluation leaves the agent and normalizer untouched") {
  auto c = tiny_config(Mode::kIndependent);
  sac::SacAgent agent = sac::SacAgent::create(c.sac, 3);
  sac::RunningNormalizer norm(c.sac.obs_dim);
  norm.observe(std::vector<double>(c.sac.obs_dim, 1.0));
  norm.training = false;
  const auto ck_before = sac::serialize_checkpoint(sac::make_checkpoint(agent, norm));
  env::HvacEnv e = make_env(c, "helsinki");
  SacPolicy policy(agent, norm);
  const std::uint64_t seeds[] = {1};
  const auto r = evaluate_policy(policy, e, seeds);
  CHECK(r.mean_energy_gwh > 0.0);
  CHECK(sac::serialize_checkpoint(sac::make_checkpoint(agent, norm)) == ck_before);
}

TEST_CASE("evaluate_policy resets the policy once per episode") {
  env::HvacEnv e("flat", env::WeatherSeries::constant(22.5, 50.0));
  Recorder rec;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  evaluate_policy(rec, e, seeds);
  CHECK(rec.resets == 3);
  CHECK(rec.seen.size() == 3 * 35'040);
}

TEST_CASE("PID: zero gains pin the setpoints") {
  PidGains g;
  g.kp = g.ki = g.kd = 0.0;
  PidController pid(g);
  env::HvacEnv e(env::climate_by_name("tokyo"), 5);
  auto obs = e.reset(1);
  pid.reset();
  for (int i = 0; i < 35'040; ++i) {
    const auto a = pid.act(obs);
    REQUIRE(a == env::ActionVector{22.5, 22.5, 22.5, 22.5});
    obs = e.step(a).obs;
  }
}

TEST_CASE("PID: anti-windup and direction") {
  PidController pid(PidGains{});
  env::Observation hot(22, 0.0);
  hot[env::kWestTemp] = 40.0;
  hot[env::kEastTemp] = 10.0;
  pid.reset();
  env::ActionVector a{};
  for (int i = 0; i < 10'000; ++i) a = pid.act(hot);
  CHECK(std::abs(pid.integral_term(0)) <= 5.0 + 1e-12);
  CHECK(std::abs(pid.integral_term(1)) <= 5.0 + 1e-12);
  CHECK(a[0] == 15.0);   // hot west zone: lowest cooling setpoint
  CHECK(a[1] == 22.5);
  CHECK(a[3] == 30.0);   // cold east zone: highest heating setpoint
  CHECK(a[2] == 22.5);
  PidGains bad;
  bad.integral_clamp = -1.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("PID: mild constant weather holds comfort all year") {
  env::HvacEnv e("mild", env::WeatherSeries::constant(15.0, 60.0));
  PidController pid(PidGains{});
  const std::uint64_t seeds[] = {1};
  const auto r = evaluate_policy(pid, e, seeds);
  CHECK(r.mean_violation_pct == 0.0);
  CHECK(r.mean_energy_gwh > 0.0);
}

TEST_CASE("PID: positive energy in every climate") {
  PidController pid(PidGains{});
  for (const auto& p : env::builtin_climates()) {
    env::HvacEnv e(p, weather_seed_for(2023, p.name));
    const std::uint64_t seeds[] = {1};
    CHECK(evaluate_policy(pid, e, seeds).mean_energy_gwh > 0.0);
  }
}

TEST_CASE("bootstrap intervals") {
  const double one[] = {4.2};
  const auto i1 = bootstrap_ci(one);
  CHECK(i1.lo == 4.2);
  CHECK(i1.hi == 4.2);
  const double same[] = {3.0, 3.0, 3.0};
  CHECK(bootstrap_ci(same).width() == 0.0);
  const double three[] = {1.0, 2.0, 3.0};
  const auto i3 = bootstrap_ci(three);
  CHECK(i3.lo >= 1.0);
  CHECK(i3.hi <= 3.0);
  CHECK(i3.lo < 2.0);
  CHECK(i3.hi > 2.0);
  CHECK(bootstrap_ci(three).lo == i3.lo);
  CHECK_THROWS(bootstrap_ci(std::span<const double>{}));
}

TEST_CASE("summaries group by configuration and flag the best return") {
  const std::vector<RunResult> runs{{"b", 1, 1.0, 2.0, 10.0}, {"a", 1, 2.0, 1.0, 5.0},
                                    {"b", 2, 3.0, 4.0, 20.0}, {"a", 2, 2.0, 1.0, 5.0}};
  const auto s = summarize(runs, 1000);
  REQUIRE(s.size() == 2);
  CHECK(s[0].config == "a");
  CHECK(s[0].e_tot_ci.width() == 0.0);
  CHECK_FALSE(s[0].best);
  CHECK(s[1].best);
  CHECK(s[1].e_tot_gwh == 2.0);
  CHECK(s[1].violation_pct == 3.0);
  CHECK(s[1].runs == 2);
  CHECK_THROWS(summarize(std::vector<RunResult>{}));
}

TEST_CASE("csv: schema column, shortest doubles and read-back") {
  const auto path = std::filesystem::temp_directory_path() / "fedhvac_csv_test.csv";
  {
    CsvWriter w(path, {"a", "b"});
    w.cell(0.1).cell("x");
    w.end_row();
    w.cell(std::uint64_t{7}).cell(1e-300);
    w.end_row();
  }
  CHECK(slurp(path) == "schema_version,a,b\n1,0.1,x\n1,7,1e-300\n");
  const auto t = read_csv(path);
  CHECK(t.column("b") == 2);
  CHECK(t.rows.size() == 2);
  CHECK_THROWS_AS(t.column("zzz"), IoError);
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_csv("/nonexistent/file.csv"), IoError);
}

TEST_CASE("tiny federated run: determinism, layout and scheduling independence") {
  auto c = tiny_config(Mode::kFederated);
  const auto a = run_experiment(c, 1);
  auto serial = c;
  serial.workers = 1;
  const auto b = run_experiment(serial, 1);

  REQUIRE(a.train.size() == 2);
  REQUIRE(a.eval.size() == 1);
  CHECK(a.eval[0].client.empty());
  CHECK(a.weekly.size() == 2 * 53);
  CHECK(a.rounds.size() == 365 * 5);
  REQUIRE(a.checkpoints.size() == 1);
  CHECK(a.checkpoints[0].file == "ep1.ckpt");
  CHECK(a.checkpoints[0].checkpoint.env_steps == 2 * 35'040);
  for (const auto& r : a.train) {
    CHECK(r.e_tot_kwh > 0.0);
    CHECK(r.violation_pct >= 0.0);
    CHECK(r.violation_pct <= 100.0);
  }
  for (const auto& w : a.weekly) {
    CHECK(w.violation_pct >= 0.0);
    CHECK(w.violation_pct <= 100.0);
  }

  const auto root = std::filesystem::temp_directory_path() / "fedhvac_orch_test";
  std::filesystem::remove_all(root);
  write_run(root / "a", a, "resolved\n");
  write_run(root / "b", b, "resolved\n");
  for (const char* f : {"train_metrics.csv", "eval_metrics.csv", "weekly_violations.csv", "round_log.csv",
                        "checkpoints/ep1.ckpt", "config.resolved"}) {
    INFO(std::string(f));
    CHECK(std::filesystem::exists(root / "a" / f));
    CHECK(slurp(root / "a" / f) == slurp(root / "b" / f));
  }
  CHECK(read_csv(root / "a" / "weekly_violations.csv").rows.size() == 106);

  // A checkpoint re-evaluated from disk reproduces the in-run evaluation.
  const auto ck = sac::load_checkpoint(root / "a" / "checkpoints" / "ep1.ckpt");
  const auto re = evaluate_checkpoint(c, ck, 1);
  CHECK(re.eval[0].violation_pct == a.eval[0].violation_pct);
  CHECK(re.eval[0].e_tot_kwh == a.eval[0].e_tot_kwh);
  std::filesystem::remove_all(root);
}

TEST_CASE("tiny independent run: per-client checkpoints and equal budgets") {
  auto c = tiny_config(Mode::kIndependent);
  const auto m = run_experiment(c, 2);
  REQUIRE(m.checkpoints.size() == 2);
  CHECK(m.checkpoints[0].file == "ep1_arizona.ckpt");
  CHECK(m.checkpoints[1].file == "ep1_tokyo.ckpt");
  for (const auto& ck : m.checkpoints) CHECK(ck.checkpoint.env_steps == 35'040);
  REQUIRE(m.eval.size() == 2);
  CHECK(m.eval[0].client == "arizona");
  CHECK(m.rounds.empty());
  CHECK(run_experiment(c, 2).eval[1].violation_pct == m.eval[1].violation_pct);
}

TEST_CASE("PID mode: one training year per client climate and an evaluation") {
  auto c = tiny_config(Mode::kPid);
  c.eval_episodes = 2;
  const auto m = run_experiment(c, 1);
  CHECK(m.train.size() == 2);
  CHECK(m.eval.size() == 2);
  CHECK(m.checkpoints.empty());
}
