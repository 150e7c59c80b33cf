#include "fedhvac/cli/app.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "fedhvac/cli/config.hpp"
#include "fedhvac/cli/report.hpp"
#include "fedhvac/orchestrator/csv.hpp"
#include "fedhvac/orchestrator/experiment.hpp"
#include "fedhvac/sac/checkpoint.hpp"

namespace fedhvac::cli {
namespace {

using orchestrator::ExperimentConfig;
namespace fs = std::filesystem;

constexpr const char* kExitHelp =
    "Exit codes: 0 success, 2 usage error, 3 config error, 4 I/O error, 5 runtime error.\n"
    "Output root: --out, else [output] dir from the config file, else $FEDHVAC_OUT, else ./runs.";

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string algo;
  std::string client_opt;
  std::optional<double> lr;
  std::optional<std::size_t> local_updates;
  std::optional<std::size_t> episodes;
  std::string clients;
  std::vector<std::string> sets;
  std::string checkpoint;
  std::vector<std::string> run_dirs;
  std::string report_out;
  bool dry_run = false;
  bool quiet = false;
};

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int report_error(std::ostream& err, const char* kind, int code, const std::string& msg) {
  err << "error kind=" << kind << " code=" << code << " message=" << one_line(msg) << '\n';
  return code;
}

std::vector<std::pair<std::string, std::string>> overrides_from(const Options& o) {
  std::vector<std::pair<std::string, std::string>> ov;
  if (!o.algo.empty()) ov.emplace_back("fed.algo", o.algo);
  if (!o.client_opt.empty()) ov.emplace_back("sac.optimizer", o.client_opt);
  if (o.lr) ov.emplace_back("sac.learning_rate", orchestrator::format_double(*o.lr));
  if (o.local_updates) ov.emplace_back("fed.local_updates", std::to_string(*o.local_updates));
  if (o.episodes) ov.emplace_back("experiment.episodes", std::to_string(*o.episodes));
  if (!o.clients.empty()) ov.emplace_back("experiment.clients", "[" + o.clients + "]");
  if (o.seed) ov.emplace_back("experiment.seeds", "[" + std::to_string(*o.seed) + "]");
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + s + "'");
    ov.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return ov;
}

ConfigFile resolve(const Options& o, std::optional<orchestrator::Mode> force_mode) {
  ConfigFile file;
  if (!o.config_path.empty()) file = load_config(o.config_path);
  auto ov = overrides_from(o);
  if (force_mode) ov.insert(ov.begin(), {"experiment.mode", std::string(orchestrator::to_string(*force_mode))});
  if (!o.out.empty()) {
    ov.emplace_back("output.dir", "\"" + o.out + "\"");
  } else if (!file.sets("output.dir")) {
    if (const char* env = std::getenv("FEDHVAC_OUT"); env && *env) {
      ov.emplace_back("output.dir", "\"" + std::string(env) + "\"");
    }
  }
  apply_overrides(file.experiment, ov);
  return file;
}

void train(const ExperimentConfig& config, bool quiet, std::ostream& out, std::ostream& err) {
  const std::string resolved = emit_config(config);
  for (std::uint64_t seed : config.seeds) {
    const std::string id = orchestrator::run_id(config, seed);
    orchestrator::ProgressFn progress;
    if (!quiet) {
      progress = [&](std::size_t done, std::size_t total) {
        err << id << ": " << done << "/" << total << " episodes\n";
      };
    }
    const auto metrics = orchestrator::run_experiment(config, seed, progress);
    const fs::path dir = config.output_dir / id;
    orchestrator::write_run(dir, metrics, resolved);
    out << dir.string() << '\n';
  }
}

int cmd_eval(const Options& o, std::ostream& out) {
  const ConfigFile file = resolve(o, std::nullopt);
  const ExperimentConfig& config = file.experiment;
  const sac::Checkpoint ckpt = sac::load_checkpoint(o.checkpoint);
  const std::uint64_t seed = o.seed.value_or(config.seeds.front());
  const auto metrics = orchestrator::evaluate_checkpoint(config, ckpt, seed);
  const fs::path dir = config.output_dir / ("eval-" + fs::path(o.checkpoint).stem().string() + "-s" + std::to_string(seed));
  fs::create_directories(dir);
  orchestrator::write_eval_csv(dir / "eval_metrics.csv", metrics.eval);
  std::ofstream cfg(dir / "config.resolved", std::ios::binary);
  if (!cfg) throw orchestrator::IoError("cannot write " + (dir / "config.resolved").string());
  cfg << emit_config(config);
  out << dir.string() << '\n';
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  const ConfigFile file = resolve(o, std::nullopt);
  const SweepSpec spec = file.sweep.axes.empty() ? default_sweep() : file.sweep;
  const auto points = expand_sweep(file.experiment, spec);
  if (o.dry_run) {
    for (const auto& p : points) {
      for (std::uint64_t s : p.config.seeds) out << orchestrator::run_id(p.config, s) << '\n';
    }
    out << points.size() << " configurations x " << file.experiment.seeds.size()
        << " seeds = " << points.size() * file.experiment.seeds.size() << " runs\n";
    return kExitOk;
  }
  for (const auto& p : points) train(p.config, o.quiet, out, err);
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> dirs;
  for (const auto& d : o.run_dirs) {
    if (!fs::is_directory(d)) throw orchestrator::IoError("not a directory: " + d);
    if (fs::exists(fs::path(d) / "config.resolved")) {
      dirs.emplace_back(d);
      continue;
    }
    std::vector<fs::path> children;
    for (const auto& e : fs::directory_iterator(d)) {
      if (e.is_directory()) children.push_back(e.path());
    }
    std::sort(children.begin(), children.end());
    dirs.insert(dirs.end(), children.begin(), children.end());
  }
  const std::string md = build_report(dirs, err);
  if (o.report_out.empty()) {
    out << md;
  } else {
    std::ofstream f(o.report_out, std::ios::binary);
    if (!f) throw orchestrator::IoError("cannot write " + o.report_out);
    f << md;
    out << o.report_out << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated soft actor-critic for data-center HVAC control", "fedhvac"};
  app.footer(kExitHelp);
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Config file");
    sub->add_option("--seed", o.seed, "Run a single base seed instead of experiment.seeds");
    sub->add_option("--out", o.out, "Output root directory");
    sub->add_option("--set", o.sets, "Override any key: section.key=value (repeatable)");
    sub->add_flag("--quiet", o.quiet, "No progress output");
  };
  auto add_train = [&](CLI::App* sub) {
    add_common(sub);
    sub->add_option("--algo", o.algo, "Server optimizer: fedavg|fedavgm|fedadam");
    sub->add_option("--client-opt", o.client_opt, "Client optimizer: sgd|sgdm|adam");
    sub->add_option("--lr", o.lr, "Client learning rate");
    sub->add_option("--local-updates", o.local_updates, "Local updates per round (U)");
    sub->add_option("--episodes", o.episodes, "Training episodes (simulated years)");
    sub->add_option("--clients", o.clients, "Comma-separated client climates");
  };

  auto* fed_train = app.add_subcommand("fed-train", "Train a federated agent");
  add_train(fed_train);
  auto* solo_train = app.add_subcommand("solo-train", "Train one independent agent per client");
  add_train(solo_train);
  auto* pid = app.add_subcommand("pid-baseline", "Run the PID baseline");
  add_train(pid);
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the evaluation climate");
  add_common(eval);
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  auto* sweep = app.add_subcommand("sweep", "Run every configuration of the [sweep] grid");
  add_train(sweep);
  sweep->add_flag("--dry-run", o.dry_run, "List the runs without executing them");
  auto* report = app.add_subcommand("report", "Summarize run directories as markdown");
  report->add_option("runs", o.run_dirs, "Run directories, or roots containing them")->required();
  report->add_option("--output", o.report_out, "Write the report to a file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return report_error(err, "usage", kExitUsage, e.what());
  }

  try {
    if (fed_train->parsed()) {
      train(resolve(o, orchestrator::Mode::kFederated).experiment, o.quiet, out, err);
    } else if (solo_train->parsed()) {
      train(resolve(o, orchestrator::Mode::kIndependent).experiment, o.quiet, out, err);
    } else if (pid->parsed()) {
      train(resolve(o, orchestrator::Mode::kPid).experiment, o.quiet, out, err);
    } else if (eval->parsed()) {
      return cmd_eval(o, out);
    } else if (sweep->parsed()) {
      return cmd_sweep(o, out, err);
    } else if (report->parsed()) {
      return cmd_report(o, out, err);
    }
  } catch (const ConfigError& e) {
    return report_error(err, "config", kExitConfig, e.what());
  } catch (const orchestrator::IoError& e) {
    return report_error(err, "io", kExitIo, e.what());
  } catch (const sac::CheckpointError& e) {
    return report_error(err, "io", kExitIo, e.what());
  } catch (const fs::filesystem_error& e) {
    return report_error(err, "io", kExitIo, e.what());
  } catch (const std::exception& e) {
    return report_error(err, "runtime", kExitRuntime, e.what());
  }
  return kExitOk;
}

int run_command(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace fedhvac::cli
