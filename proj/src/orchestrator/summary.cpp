#include "fedhvac/orchestrator/summary.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "fedhvac/core/rng.hpp"

namespace fedhvac::orchestrator {
namespace {

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

Interval bootstrap_ci(std::span<const double> values, std::size_t resamples, double level, std::uint64_t seed) {
  if (values.empty()) throw std::invalid_argument("bootstrap of an empty sample");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must lie in (0, 1)");
  if (resamples == 0) throw std::invalid_argument("bootstrap needs at least one resample");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (*mn == *mx) return {*mn, *mn};

  Rng rng(seed);
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[rng.index(values.size())];
    m = s / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  const double alpha = 0.5 * (1.0 - level);
  auto pick = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(resamples - 1)));
    return means[std::min(idx, resamples - 1)];
  };
  return {pick(alpha), pick(1.0 - alpha)};
}

std::vector<ConfigSummary> summarize(std::span<const RunResult> runs, std::size_t resamples) {
  if (runs.empty()) throw std::invalid_argument("nothing to summarize");
  std::map<std::string, std::vector<const RunResult*>> groups;
  for (const auto& r : runs) groups[r.config].push_back(&r);

  std::vector<ConfigSummary> out;
  for (const auto& [name, members] : groups) {
    std::vector<double> e, v, ret;
    for (const auto* r : members) {
      e.push_back(r->e_tot_gwh);
      v.push_back(r->violation_pct);
      ret.push_back(r->mean_return);
    }
    ConfigSummary s;
    s.config = name;
    s.runs = members.size();
    s.e_tot_gwh = mean_of(e);
    s.violation_pct = mean_of(v);
    s.mean_return = mean_of(ret);
    s.e_tot_ci = bootstrap_ci(e, resamples);
    s.violation_ci = bootstrap_ci(v, resamples);
    s.return_ci = bootstrap_ci(ret, resamples);
    out.push_back(std::move(s));
  }
  auto best = std::max_element(out.begin(), out.end(),
                               [](const ConfigSummary& a, const ConfigSummary& b) { return a.mean_return < b.mean_return; });
  best->best = true;
  return out;
}

}  // namespace fedhvac::orchestrator
