#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedhvac/cli/app.hpp"
#include "fedhvac/cli/config.hpp"
#include "fedhvac/cli/report.hpp"
#include "fedhvac/orchestrator/csv.hpp"

using namespace fedhvac;
using namespace fedhvac::cli;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

constexpr const char* kTinyConfig = R"(# two clients, one short episode
[experiment]
name = "tiny"
episodes = 1
eval_episodes = 1
clients = [arizona, tokyo]
seeds = [4]

[sac]
hidden = [8]
batch_size = 8
buffer_size = 5000
)";

}  // namespace

TEST_CASE("empty config resolves to the documented defaults") {
  const auto f = parse_config("");
  orchestrator::ExperimentConfig d;
  d.sync_dims();
  CHECK(f.experiment == d);
  CHECK(f.explicit_keys.empty());
  CHECK(f.sweep.axes.empty());
  const auto& e = f.experiment;
  CHECK(e.episodes == 15);
  CHECK(e.seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(e.server.tau_mask == 0.4);
  CHECK(e.server.fraction == 1.0);
  CHECK(e.sac.gamma == 0.99);
  CHECK(e.sac.polyak == 0.005);
  CHECK(e.sac.batch_size == 256);
  CHECK(e.sac.hidden == std::vector<std::size_t>{256, 256});
  CHECK(e.env.reward.lambda_p == 1e-5);
  CHECK(e.clients.size() == 11);
  CHECK(e.eval_climate == "helsinki");
}

TEST_CASE("emit and parse round-trip") {
  auto f = parse_config(kTinyConfig, "tiny.toml");
  CHECK(f.sets("sac.hidden"));
  CHECK_FALSE(f.sets("sac.gamma"));
  auto c = f.experiment;
  c.server.kind = fed::ServerKind::kFedAdam;
  c.sac.target_entropy = -3.5;
  c.env.reward.lambda_t = 0.125;
  c.output_dir = "some dir/with space";
  const SweepSpec sweep = default_sweep();
  const std::string text = emit_config(c, &sweep);
  const auto back = parse_config(text, "emitted");
  CHECK(back.experiment == c);
  CHECK(back.sweep == sweep);
  CHECK(emit_config(back.experiment, &back.sweep) == text);
  // Every registered key appears in the emitted document.
  for (const auto& key : config_keys()) {
    const auto dot = key.find('.');
    CHECK_MESSAGE(text.find("\n" + key.substr(dot + 1) + " = ") != std::string::npos, key);
  }
}

TEST_CASE("config errors name the line or key") {
  auto message = [](std::string_view text) {
    try {
      parse_config(text, "run.toml");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const auto typo = message("[fed]\nalgo = fedavg\nmasking_treshold = 0.4\n");
  CHECK(typo.find("run.toml:3") != std::string::npos);
  CHECK(typo.find("masking_treshold") != std::string::npos);
  CHECK(message("[nosuch]\nx = 1\n").find("run.toml:1") != std::string::npos);
  CHECK(message("[sac]\ngamma = 0.9\ngamma = 0.8\n").find("run.toml:3") != std::string::npos);
  CHECK(message("[sac]\ngamma = fast\n").find("sac.gamma") != std::string::npos);
  CHECK(message("gamma = 0.9\n").find("run.toml:1") != std::string::npos);
  CHECK(message("[sac]\ngamma 0.9\n").find("run.toml:2") != std::string::npos);
  CHECK(message("[fed]\nmasking_threshold = 0\n").find("invalid config") != std::string::npos);
  CHECK(message("[experiment]\nclients = [helsinki]\n").find("evaluation climate") != std::string::npos);
  CHECK(message("[fed]\nalgo = fedprox\n").find("fed.algo") != std::string::npos);
  CHECK(message("[sweep]\nsac.learning_rate = []\n") != "no error");
  CHECK(message("[sweep]\nsac.nope = [1]\n") != "no error");
  CHECK(message("[experiment]\nclients = [tokyo,\n  arizona\n[sac]\n").find("run.toml:2") !=
        std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.toml"), orchestrator::IoError);
}

TEST_CASE("lists may span lines") {
  const auto f = parse_config("[experiment]\nclients = [tokyo,   # first\n\n  arizona]\n", "m.toml");
  CHECK(f.experiment.clients == std::vector<std::string>{"tokyo", "arizona"});
  try {
    parse_config("[experiment]\nclients = [tokyo,\n  arizona]\n[sac]\ngamma = fast\n", "m.toml");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("m.toml:5") != std::string::npos);
  }
}

TEST_CASE("overrides") {
  orchestrator::ExperimentConfig c;
  c.sync_dims();
  apply_overrides(c, {{"sac.learning_rate", "0.01"}, {"fed.algo", "fedavgm"}, {"sac.learning_rate", "0.1"}});
  CHECK(c.sac.optimizer.learning_rate == 0.1);
  CHECK(c.server.kind == fed::ServerKind::kFedAvgM);
  apply_overrides(c, {{"env.time_features", "false"}});
  CHECK(c.sac.obs_dim == 18);
  CHECK_THROWS_AS(apply_overrides(c, {{"sac.nope", "1"}}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(c, {{"fed.local_updates", "7"}}), ConfigError);
}

TEST_CASE("sweep expansion") {
  orchestrator::ExperimentConfig base;
  base.sync_dims();
  const auto points = expand_sweep(base, default_sweep());
  REQUIRE(points.size() == 12);
  CHECK(default_sweep().size() == 12);
  CHECK(points[0].config.sac.optimizer.learning_rate == 0.0003);
  CHECK(points[0].config.local_updates == 4);
  CHECK(points[1].config.local_updates == 12);
  CHECK(points[3].config.sac.optimizer.learning_rate == 0.001);
  CHECK(points[11].config.local_updates == 24);
  CHECK(points[0].config.name != points[1].config.name);
  CHECK(points[0].config.name.rfind("experiment", 0) == 0);

  const auto dry = invoke({"sweep", "--dry-run"});
  CHECK(dry.code == kExitOk);
  CHECK(dry.out.find("12 configurations x 3 seeds = 36 runs") != std::string::npos);
  std::size_t lines = 0;
  for (char ch : dry.out) lines += ch == '\n';
  CHECK(lines == 37);
}

TEST_CASE("exit codes and error lines") {
  auto r = invoke({});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.rfind("error kind=usage code=2 message=", 0) == 0);
  CHECK(invoke({"fly"}).code == kExitUsage);
  CHECK(invoke({"fed-train", "--bogus"}).code == kExitUsage);
  CHECK(invoke({"eval"}).code == kExitUsage);
  CHECK(invoke({"--help"}).code == kExitOk);

  r = invoke({"fed-train", "--set", "sac.gamma=2"});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.rfind("error kind=config code=3 ", 0) == 0);
  CHECK(invoke({"fed-train", "--config", "/nonexistent/c.toml"}).code == kExitIo);
  CHECK(invoke({"fed-train", "--set", "fed.masking_treshold=0.4"}).code == kExitConfig);
  CHECK(invoke({"fed-train", "--set", "nokey"}).code == kExitConfig);
  CHECK(invoke({"fed-train", "--local-updates", "7"}).code == kExitConfig);

  const auto dir = fresh_dir("fedhvac_cli_codes");
  write_file(dir / "junk.ckpt", "not a checkpoint");
  r = invoke({"eval", "--checkpoint", (dir / "junk.ckpt").string(), "--out", dir.string()});
  CHECK(r.code == kExitIo);
  CHECK(r.err.rfind("error kind=io code=4 ", 0) == 0);
  CHECK(invoke({"report", "/nonexistent/runs"}).code == kExitIo);
  fs::remove_all(dir);
}

TEST_CASE("the installed binary reports the same exit codes") {
  const std::string bin = FEDHVAC_CLI_PATH;
  REQUIRE(fs::exists(bin));
  auto status = [&](const std::string& args) {
    const int raw = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  CHECK(status("") == 2);
  CHECK(status("fed-train --set fed.masking_treshold=0.4") == 3);
  CHECK(status("eval --checkpoint /nonexistent/x.ckpt") == 4);
  CHECK(status("sweep --dry-run") == 0);
}

TEST_CASE("pid-baseline output precedence and byte-identical reruns") {
  const auto dir = fresh_dir("fedhvac_cli_pid");
  write_file(dir / "pid.toml", "[experiment]\nname = \"pid\"\nseeds = [1]\nclients = [tokyo]\n[output]\ndir = \"" +
                                   (dir / "from_file").string() + "\"\n");
  auto r = invoke({"pid-baseline", "--config", (dir / "pid.toml").string(), "--quiet"});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(dir / "from_file" / "pid-pid-s1" / "eval_metrics.csv"));
  r = invoke({"pid-baseline", "--config", (dir / "pid.toml").string(), "--out", (dir / "flag").string()});
  REQUIRE(r.code == kExitOk);
  const auto a = dir / "from_file" / "pid-pid-s1", b = dir / "flag" / "pid-pid-s1";
  for (std::string f : {"train_metrics.csv", "eval_metrics.csv", "weekly_violations.csv"}) {
    INFO(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  // The echoed configs differ only in the output directory.
  auto without_dir = [](std::string text) {
    const auto at = text.find("\ndir = ");
    return text.erase(at, text.find('\n', at + 1) - at);
  };
  CHECK(without_dir(slurp(a / "config.resolved")) == without_dir(slurp(b / "config.resolved")));
  // config.resolved parses back to the same effective configuration.
  CHECK(load_config(a / "config.resolved").experiment.clients == std::vector<std::string>{"tokyo"});
  fs::remove_all(dir);
}

TEST_CASE("fed-train, eval and report end to end") {
  const auto dir = fresh_dir("fedhvac_cli_e2e");
  write_file(dir / "tiny.toml", kTinyConfig);
  const std::string cfg = (dir / "tiny.toml").string();
  auto r = invoke({"fed-train", "--config", cfg, "--out", (dir / "runs").string(), "--quiet"});
  REQUIRE(r.code == kExitOk);
  const auto run = dir / "runs" / "tiny-federated-s4";
  for (const char* f : {"train_metrics.csv", "eval_metrics.csv", "weekly_violations.csv", "round_log.csv",
                        "checkpoints/ep1.ckpt", "config.resolved"}) {
    CHECK_MESSAGE(fs::exists(run / f), f);
  }
  r = invoke({"solo-train", "--config", cfg, "--out", (dir / "runs").string(), "--quiet", "--set",
              "experiment.name=\"tiny\""});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(dir / "runs" / "tiny-independent-s4" / "checkpoints" / "ep1_tokyo.ckpt"));
  const auto solo_eval = orchestrator::read_csv(dir / "runs" / "tiny-independent-s4" / "eval_metrics.csv");
  CHECK(solo_eval.column("client_id") == 2);

  r = invoke({"eval", "--config", cfg, "--checkpoint", (run / "checkpoints" / "ep1.ckpt").string(), "--out",
              (dir / "evals").string()});
  REQUIRE(r.code == kExitOk);
  const auto fresh = orchestrator::read_csv(dir / "evals" / "eval-ep1-s4" / "eval_metrics.csv");
  const auto orig = orchestrator::read_csv(run / "eval_metrics.csv");
  CHECK(fresh.rows.at(0).at(fresh.column("violation_pct")) == orig.rows.at(0).at(orig.column("violation_pct")));

  fs::create_directories(dir / "runs" / "incomplete");
  r = invoke({"report", (dir / "runs").string(), "--output", (dir / "report.md").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.err.find("skipping") != std::string::npos);
  const std::string md = slurp(dir / "report.md");
  for (const char* t : {"### Client optimizers", "### Server optimizers", "### Federated vs independent",
                        "### All configurations", "| federated |", "| independent |", "adam lr=0.001 U=24",
                        "fedavg eta_g=1"}) {
    CHECK_MESSAGE(md.find(t) != std::string::npos, t);
  }
  fs::remove_all(dir);
}

TEST_CASE("report tables on synthetic runs") {
  orchestrator::ConfigSummary s;
  s.config = "x";
  s.runs = 1;
  s.best = true;
  const auto single = markdown_table("T", {s});
  CHECK(single.find("95% CI") == std::string::npos);
  CHECK(single.find(" * |") != std::string::npos);
  s.runs = 3;
  CHECK(markdown_table("T", {s}).find("95% CI") != std::string::npos);
  std::ostringstream warn;
  CHECK(build_report({}, warn).find("No complete runs") != std::string::npos);
}
