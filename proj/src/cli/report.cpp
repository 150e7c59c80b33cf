#include "fedhvac/cli/report.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "fedhvac/cli/config.hpp"
#include "fedhvac/orchestrator/csv.hpp"

namespace fedhvac::cli {
namespace {

using orchestrator::ConfigSummary;
using orchestrator::format_double;
using orchestrator::Mode;
using orchestrator::RunResult;

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::string interval(const orchestrator::Interval& ci, int digits) {
  return "[" + fixed(ci.lo, digits) + ", " + fixed(ci.hi, digits) + "]";
}

std::string client_key(const orchestrator::ExperimentConfig& c) {
  return std::string(nn::to_string(c.sac.optimizer.kind)) + " lr=" + format_double(c.sac.optimizer.learning_rate) +
         " U=" + std::to_string(c.local_updates);
}

std::string server_key(const orchestrator::ExperimentConfig& c) {
  std::string k = std::string(fed::to_string(c.server.kind)) + " eta_g=" + format_double(c.server.eta_g);
  if (c.server.kind == fed::ServerKind::kFedAvgM) k += " mu=" + format_double(c.server.momentum);
  if (c.server.kind == fed::ServerKind::kFedAdam) {
    k += " b1=" + format_double(c.server.beta1) + " b2=" + format_double(c.server.beta2);
  }
  if (!c.server.masking) k += " nomask";
  return k;
}

}  // namespace

std::optional<RunRecord> load_run(const std::filesystem::path& dir, std::string* reason) {
  auto fail = [&](const std::string& why) -> std::optional<RunRecord> {
    if (reason) *reason = why;
    return std::nullopt;
  };
  const auto cfg_path = dir / "config.resolved";
  const auto eval_path = dir / "eval_metrics.csv";
  if (!std::filesystem::exists(cfg_path)) return fail("missing config.resolved");
  if (!std::filesystem::exists(eval_path)) return fail("missing eval_metrics.csv");
  RunRecord rec;
  rec.dir = dir;
  try {
    rec.config = load_config(cfg_path).experiment;
    const auto table = orchestrator::read_csv(eval_path);
    if (table.rows.empty()) return fail("eval_metrics.csv has no rows");
    const auto c_seed = table.column("seed");
    const auto c_ep = table.column("episode");
    const auto c_e = table.column("e_tot_kwh");
    const auto c_v = table.column("violation_pct");
    const auto c_r = table.column("mean_return");
    std::size_t last = 0;
    for (const auto& row : table.rows) last = std::max<std::size_t>(last, std::stoull(row[c_ep]));
    double e = 0.0, v = 0.0, r = 0.0;
    std::size_t n = 0;
    for (const auto& row : table.rows) {
      if (std::stoull(row[c_ep]) != last) continue;
      e += std::stod(row[c_e]);
      v += std::stod(row[c_v]);
      r += std::stod(row[c_r]);
      ++n;
    }
    rec.result.config = rec.config.name;
    rec.result.seed = std::stoull(table.rows.front()[c_seed]);
    rec.result.e_tot_gwh = e / static_cast<double>(n) / 1e6;
    rec.result.violation_pct = v / static_cast<double>(n);
    rec.result.mean_return = r / static_cast<double>(n);
  } catch (const std::exception& ex) {
    return fail(ex.what());
  }
  return rec;
}

std::string markdown_table(const std::string& title, const std::vector<ConfigSummary>& rows) {
  const bool show_ci = std::any_of(rows.begin(), rows.end(), [](const ConfigSummary& s) { return s.runs > 1; });
  std::ostringstream out;
  out << "### " << title << "\n\n";
  out << "| Configuration | Runs | E_tot (GWh) | Viol. (%) | Mean return |";
  if (show_ci) out << " E_tot 95% CI | Viol. 95% CI | Return 95% CI |";
  out << " Best |\n";
  out << "|---|---:|---:|---:|---:|";
  if (show_ci) out << "---|---|---|";
  out << ":---:|\n";
  for (const auto& s : rows) {
    out << "| " << s.config << " | " << s.runs << " | " << fixed(s.e_tot_gwh, 4) << " | " << fixed(s.violation_pct, 4)
        << " | " << fixed(s.mean_return, 1) << " |";
    if (show_ci) {
      out << ' ' << interval(s.e_tot_ci, 4) << " | " << interval(s.violation_ci, 4) << " | "
          << interval(s.return_ci, 1) << " |";
    }
    out << (s.best ? " * |" : "  |") << '\n';
  }
  out << '\n';
  return out.str();
}

std::string build_report(const std::vector<std::filesystem::path>& run_dirs, std::ostream& warnings,
                         std::size_t resamples) {
  std::vector<RunRecord> runs;
  for (const auto& d : run_dirs) {
    std::string why;
    if (auto r = load_run(d, &why)) {
      runs.push_back(std::move(*r));
    } else {
      warnings << "warning: skipping " << d.string() << ": " << why << '\n';
    }
  }
  std::ostringstream out;
  out << "# Run report\n\n";
  if (runs.empty()) {
    out << "No complete runs.\n";
    return out.str();
  }

  auto table = [&](const std::string& title, const std::function<bool(const RunRecord&)>& keep,
                   const std::function<std::string(const RunRecord&)>& key) {
    std::vector<RunResult> results;
    for (const auto& r : runs) {
      if (!keep(r)) continue;
      RunResult x = r.result;
      x.config = key(r);
      results.push_back(x);
    }
    if (!results.empty()) out << markdown_table(title, orchestrator::summarize(results, resamples));
  };
  auto federated = [](const RunRecord& r) { return r.config.mode == Mode::kFederated; };
  table("Client optimizers", federated, [](const RunRecord& r) { return client_key(r.config); });
  table("Server optimizers", federated, [](const RunRecord& r) { return server_key(r.config); });
  table("Federated vs independent", [](const RunRecord&) { return true; },
        [](const RunRecord& r) { return std::string(orchestrator::to_string(r.config.mode)); });
  table("All configurations", [](const RunRecord&) { return true; }, [](const RunRecord& r) { return r.config.name; });
  return out.str();
}

}  // namespace fedhvac::cli
