#include "fedhvac/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "fedhvac/orchestrator/csv.hpp"

namespace fedhvac::cli {
namespace {

using orchestrator::ExperimentConfig;
using orchestrator::format_double;

struct Value {
  std::string text;                // scalar text, unquoted
  std::vector<std::string> items;  // list items, unquoted
  bool is_list = false;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  if (!s.empty() && (s.front() == '"' || s.back() == '"')) throw ConfigError("unterminated string " + s);
  return s;
}

std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

Value parse_value(const std::string& raw) {
  Value v;
  if (raw.empty()) throw ConfigError("missing value");
  if (raw.front() == '[') {
    if (raw.back() != ']') throw ConfigError("unterminated list " + raw);
    v.is_list = true;
    const std::string body = trim(std::string_view(raw).substr(1, raw.size() - 2));
    if (!body.empty()) {
      std::stringstream ss(body);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (t.empty()) throw ConfigError("empty list element in " + raw);
        v.items.push_back(unquote(t));
      }
    }
    return v;
  }
  v.text = unquote(raw);
  return v;
}

double to_double(const std::string& s) {
  double d = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), d);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(d)) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  return d;
}

std::uint64_t to_uint(const std::string& s) {
  std::uint64_t u = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), u);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("expected a non-negative integer, got '" + s + "'");
  }
  return u;
}

bool to_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("expected true or false, got '" + s + "'");
}

const std::string& scalar(const Value& v) {
  if (v.is_list) throw ConfigError("expected a scalar, got a list");
  return v.text;
}

const std::vector<std::string>& list(const Value& v) {
  if (!v.is_list) throw ConfigError("expected a list [a, b, ...]");
  return v.items;
}

std::string quote_str(const std::string& s) { return "\"" + s + "\""; }

struct KeyDef {
  std::string section;
  std::string key;
  std::function<void(ExperimentConfig&, const Value&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
  std::string path() const { return section + "." + key; }
};

template <class Access>
KeyDef real(std::string section, std::string key, Access acc) {
  return {std::move(section), std::move(key), [acc](ExperimentConfig& c, const Value& v) { acc(c) = to_double(scalar(v)); },
          [acc](const ExperimentConfig& c) { return format_double(acc(const_cast<ExperimentConfig&>(c))); }};
}

template <class Access>
KeyDef count(std::string section, std::string key, Access acc) {
  return {std::move(section), std::move(key),
          [acc](ExperimentConfig& c, const Value& v) {
            acc(c) = static_cast<std::remove_reference_t<decltype(acc(c))>>(to_uint(scalar(v)));
          },
          [acc](const ExperimentConfig& c) { return std::to_string(acc(const_cast<ExperimentConfig&>(c))); }};
}

template <class Access>
KeyDef flag(std::string section, std::string key, Access acc) {
  return {std::move(section), std::move(key), [acc](ExperimentConfig& c, const Value& v) { acc(c) = to_bool(scalar(v)); },
          [acc](const ExperimentConfig& c) { return std::string(acc(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); }};
}

template <class Access>
KeyDef text(std::string section, std::string key, Access acc) {
  return {std::move(section), std::move(key), [acc](ExperimentConfig& c, const Value& v) { acc(c) = scalar(v); },
          [acc](const ExperimentConfig& c) { return quote_str(acc(const_cast<ExperimentConfig&>(c))); }};
}

const std::vector<KeyDef>& registry() {
  static const std::vector<KeyDef> keys = [] {
    std::vector<KeyDef> k;
    using C = ExperimentConfig;
    // [experiment]
    k.push_back(text("experiment", "name", [](C& c) -> std::string& { return c.name; }));
    k.push_back({"experiment", "mode",
                 [](C& c, const Value& v) { c.mode = orchestrator::mode_from_string(scalar(v)); },
                 [](const C& c) { return quote_str(std::string(orchestrator::to_string(c.mode))); }});
    k.push_back(count("experiment", "episodes", [](C& c) -> std::size_t& { return c.episodes; }));
    k.push_back(count("experiment", "eval_episodes", [](C& c) -> std::size_t& { return c.eval_episodes; }));
    k.push_back({"experiment", "seeds",
                 [](C& c, const Value& v) {
                   c.seeds.clear();
                   for (const auto& s : list(v)) c.seeds.push_back(to_uint(s));
                 },
                 [](const C& c) {
                   std::string out = "[";
                   for (std::size_t i = 0; i < c.seeds.size(); ++i) out += (i ? ", " : "") + std::to_string(c.seeds[i]);
                   return out + "]";
                 }});
    k.push_back({"experiment", "clients",
                 [](C& c, const Value& v) { c.clients = list(v); },
                 [](const C& c) {
                   std::string out = "[";
                   for (std::size_t i = 0; i < c.clients.size(); ++i) out += (i ? ", " : "") + quote_str(c.clients[i]);
                   return out + "]";
                 }});
    k.push_back(text("experiment", "eval_climate", [](C& c) -> std::string& { return c.eval_climate; }));
    k.push_back(count("experiment", "weather_seed", [](C& c) -> std::uint64_t& { return c.weather_seed; }));
    k.push_back(count("experiment", "workers", [](C& c) -> std::size_t& { return c.workers; }));
    // [sac]
    k.push_back({"sac", "hidden",
                 [](C& c, const Value& v) {
                   c.sac.hidden.clear();
                   for (const auto& s : list(v)) c.sac.hidden.push_back(to_uint(s));
                 },
                 [](const C& c) {
                   std::string out = "[";
                   for (std::size_t i = 0; i < c.sac.hidden.size(); ++i) {
                     out += (i ? ", " : "") + std::to_string(c.sac.hidden[i]);
                   }
                   return out + "]";
                 }});
    k.push_back(real("sac", "gamma", [](C& c) -> double& { return c.sac.gamma; }));
    k.push_back(real("sac", "polyak", [](C& c) -> double& { return c.sac.polyak; }));
    k.push_back(count("sac", "batch_size", [](C& c) -> std::size_t& { return c.sac.batch_size; }));
    k.push_back(count("sac", "train_freq", [](C& c) -> std::size_t& { return c.sac.train_freq; }));
    k.push_back(count("sac", "gradient_steps", [](C& c) -> std::size_t& { return c.sac.gradient_steps; }));
    k.push_back(count("sac", "learning_starts", [](C& c) -> std::size_t& { return c.sac.learning_starts; }));
    k.push_back(count("sac", "buffer_size", [](C& c) -> std::size_t& { return c.sac.buffer_capacity; }));
    k.push_back({"sac", "target_entropy",
                 [](C& c, const Value& v) {
                   const auto& s = scalar(v);
                   if (s == "auto") {
                     c.sac.target_entropy.reset();
                   } else {
                     c.sac.target_entropy = to_double(s);
                   }
                 },
                 [](const C& c) {
                   return c.sac.target_entropy ? format_double(*c.sac.target_entropy) : std::string("\"auto\"");
                 }});
    k.push_back(real("sac", "initial_log_alpha", [](C& c) -> double& { return c.sac.initial_log_alpha; }));
    k.push_back(real("sac", "log_std_min", [](C& c) -> double& { return c.sac.log_std_min; }));
    k.push_back(real("sac", "log_std_max", [](C& c) -> double& { return c.sac.log_std_max; }));
    k.push_back({"sac", "optimizer",
                 [](C& c, const Value& v) { c.sac.optimizer.kind = nn::optimizer_kind_from_string(scalar(v)); },
                 [](const C& c) { return quote_str(std::string(nn::to_string(c.sac.optimizer.kind))); }});
    k.push_back(real("sac", "learning_rate", [](C& c) -> double& { return c.sac.optimizer.learning_rate; }));
    k.push_back(real("sac", "beta1", [](C& c) -> double& { return c.sac.optimizer.beta1; }));
    k.push_back(real("sac", "beta2", [](C& c) -> double& { return c.sac.optimizer.beta2; }));
    k.push_back(real("sac", "epsilon", [](C& c) -> double& { return c.sac.optimizer.epsilon; }));
    k.push_back(real("sac", "momentum", [](C& c) -> double& { return c.sac.optimizer.momentum; }));
    // [fed]
    k.push_back({"fed", "algo",
                 [](C& c, const Value& v) { c.server.kind = fed::server_kind_from_string(scalar(v)); },
                 [](const C& c) { return quote_str(std::string(fed::to_string(c.server.kind))); }});
    k.push_back(count("fed", "local_updates", [](C& c) -> std::size_t& { return c.local_updates; }));
    k.push_back(real("fed", "eta_g", [](C& c) -> double& { return c.server.eta_g; }));
    k.push_back(real("fed", "momentum", [](C& c) -> double& { return c.server.momentum; }));
    k.push_back(real("fed", "beta1", [](C& c) -> double& { return c.server.beta1; }));
    k.push_back(real("fed", "beta2", [](C& c) -> double& { return c.server.beta2; }));
    k.push_back(real("fed", "epsilon", [](C& c) -> double& { return c.server.epsilon; }));
    k.push_back(flag("fed", "masking", [](C& c) -> bool& { return c.server.masking; }));
    k.push_back(real("fed", "masking_threshold", [](C& c) -> double& { return c.server.tau_mask; }));
    k.push_back(real("fed", "fraction", [](C& c) -> double& { return c.server.fraction; }));
    // [env]
    k.push_back(flag("env", "time_features", [](C& c) -> bool& { return c.env.time_features; }));
    k.push_back(real("env", "initial_temp", [](C& c) -> double& { return c.env.initial_temp; }));
    k.push_back(real("env", "initial_rh", [](C& c) -> double& { return c.env.initial_rh; }));
    k.push_back(real("env", "ou_tau", [](C& c) -> double& { return c.env.ou.tau; }));
    k.push_back(real("env", "ou_sigma", [](C& c) -> double& { return c.env.ou.sigma; }));
    k.push_back(real("env", "ou_mu", [](C& c) -> double& { return c.env.ou.mu; }));
    k.push_back(real("env", "ou_initial", [](C& c) -> double& { return c.env.ou.initial; }));
    k.push_back(real("env", "ou_max_temp_offset", [](C& c) -> double& { return c.env.ou.max_temp_offset; }));
    k.push_back(real("env", "ou_max_rh_offset", [](C& c) -> double& { return c.env.ou.max_rh_offset; }));
    k.push_back(real("env", "lambda_p", [](C& c) -> double& { return c.env.reward.lambda_p; }));
    k.push_back(real("env", "lambda_g", [](C& c) -> double& { return c.env.reward.lambda_g; }));
    k.push_back(real("env", "lambda_t", [](C& c) -> double& { return c.env.reward.lambda_t; }));
    k.push_back(real("env", "comfort_min", [](C& c) -> double& { return c.env.reward.t_min; }));
    k.push_back(real("env", "comfort_max", [](C& c) -> double& { return c.env.reward.t_max; }));
    k.push_back(real("env", "comfort_target", [](C& c) -> double& { return c.env.reward.t_target; }));
    k.push_back(real("env", "west_heat_capacity", [](C& c) -> double& { return c.env.building.west.heat_capacity; }));
    k.push_back(real("env", "west_ua_out", [](C& c) -> double& { return c.env.building.west.ua_out; }));
    k.push_back(real("env", "west_it_load", [](C& c) -> double& { return c.env.building.west.it_load; }));
    k.push_back(real("env", "east_heat_capacity", [](C& c) -> double& { return c.env.building.east.heat_capacity; }));
    k.push_back(real("env", "east_ua_out", [](C& c) -> double& { return c.env.building.east.ua_out; }));
    k.push_back(real("env", "east_it_load", [](C& c) -> double& { return c.env.building.east.it_load; }));
    k.push_back(real("env", "ua_zone", [](C& c) -> double& { return c.env.building.ua_zone; }));
    k.push_back(real("env", "it_diurnal_fraction", [](C& c) -> double& { return c.env.building.it_diurnal_fraction; }));
    k.push_back(real("env", "cooling_gain", [](C& c) -> double& { return c.env.building.cooling_gain; }));
    k.push_back(real("env", "cooling_capacity", [](C& c) -> double& { return c.env.building.cooling_capacity; }));
    k.push_back(real("env", "cooling_cop", [](C& c) -> double& { return c.env.building.cooling_cop; }));
    k.push_back(real("env", "heating_gain", [](C& c) -> double& { return c.env.building.heating_gain; }));
    k.push_back(real("env", "heating_capacity", [](C& c) -> double& { return c.env.building.heating_capacity; }));
    k.push_back(real("env", "heating_cop", [](C& c) -> double& { return c.env.building.heating_cop; }));
    k.push_back(real("env", "fan_power", [](C& c) -> double& { return c.env.building.fan_power; }));
    k.push_back(real("env", "humidity_time_constant_h",
                     [](C& c) -> double& { return c.env.building.humidity_time_constant_h; }));
    k.push_back(real("env", "dehumidification_per_h", [](C& c) -> double& { return c.env.building.dehumidification_per_h; }));
    // [pid]
    k.push_back(real("pid", "kp", [](C& c) -> double& { return c.pid.kp; }));
    k.push_back(real("pid", "ki", [](C& c) -> double& { return c.pid.ki; }));
    k.push_back(real("pid", "kd", [](C& c) -> double& { return c.pid.kd; }));
    k.push_back(real("pid", "scale", [](C& c) -> double& { return c.pid.scale; }));
    k.push_back(real("pid", "integral_clamp", [](C& c) -> double& { return c.pid.integral_clamp; }));
    k.push_back(real("pid", "target", [](C& c) -> double& { return c.pid.target; }));
    // [output]
    k.push_back({"output", "dir",
                 [](C& c, const Value& v) { c.output_dir = scalar(v); },
                 [](const C& c) { return quote_str(c.output_dir.string()); }});
    k.push_back({"output", "checkpoints",
                 [](C& c, const Value& v) { c.checkpoints = orchestrator::checkpoint_policy_from_string(scalar(v)); },
                 [](const C& c) { return quote_str(std::string(orchestrator::to_string(c.checkpoints))); }});
    return k;
  }();
  return keys;
}

const KeyDef* find_key(std::string_view path) {
  for (const auto& k : registry()) {
    if (k.path() == path) return &k;
  }
  return nullptr;
}

const std::set<std::string>& sections() {
  static const std::set<std::string> s{"experiment", "sac", "fed", "env", "pid", "output", "sweep"};
  return s;
}

void set_key(ExperimentConfig& c, const std::string& path, const Value& v) {
  const KeyDef* k = find_key(path);
  if (!k) throw ConfigError("unknown key '" + path + "'");
  try {
    k->set(c, v);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void finish(ExperimentConfig& c, std::string_view source) {
  c.sync_dims();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(source) + ": invalid config: " + e.what());
  }
}

}  // namespace

bool ConfigFile::sets(std::string_view path) const {
  return std::find(explicit_keys.begin(), explicit_keys.end(), path) != explicit_keys.end();
}

std::size_t SweepSpec::size() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.second.size();
  return n;
}

SweepSpec default_sweep() {
  SweepSpec s;
  s.axes.push_back({"sac.learning_rate", {"0.0003", "0.001", "0.01", "0.1"}});
  s.axes.push_back({"fed.local_updates", {"4", "12", "24"}});
  return s;
}

ConfigFile parse_config(std::string_view text, std::string_view source) {
  ConfigFile out;
  ExperimentConfig& c = out.experiment;
  std::set<std::string> seen;
  std::string section;
  std::vector<std::string> lines;
  {
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) lines.push_back(trim(strip_comment(line)));
  }
  std::size_t entry = 0;  // zero-based index of the entry's first line
  auto fail = [&](const std::string& msg) {
    throw ConfigError(std::string(source) + ":" + std::to_string(entry + 1) + ": " + msg);
  };
  for (std::size_t next = 0; next < lines.size();) {
    entry = next++;
    const std::string& body = lines[entry];
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') fail("malformed section header '" + body + "'");
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      if (!sections().count(section)) fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail("expected 'key = value', got '" + body + "'");
    if (section.empty()) fail("key outside of any section");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    std::string raw = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) fail("missing key name");
    // A list continues over following lines until its closing bracket or a section header.
    if (!raw.empty() && raw.front() == '[') {
      while (raw.back() != ']' && next < lines.size() &&
             (lines[next].empty() || lines[next].front() != '[')) {
        raw = trim(raw + ' ' + lines[next++]);
      }
    }
    try {
      const Value v = parse_value(raw);
      if (section == "sweep") {
        if (!find_key(key)) fail("unknown sweep key '" + key + "'");
        if (!v.is_list || v.items.empty()) fail("sweep." + key + ": expected a nonempty list");
        for (const auto& a : out.sweep.axes) {
          if (a.first == key) fail("duplicate key 'sweep." + key + "'");
        }
        out.sweep.axes.push_back({key, v.items});
        continue;
      }
      const std::string path = section + "." + key;
      if (!seen.insert(path).second) fail("duplicate key '" + path + "'");
      set_key(c, path, v);
    } catch (const ConfigError& e) {
      if (std::string_view(e.what()).starts_with(source)) throw;
      fail(e.what());
    }
  }
  out.explicit_keys.assign(seen.begin(), seen.end());
  finish(c, source);
  for (const auto& axis : out.sweep.axes) {
    for (const auto& v : axis.second) {
      ExperimentConfig probe = c;
      set_key(probe, axis.first, parse_value(v));
    }
  }
  return out;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw orchestrator::IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void apply_overrides(ExperimentConfig& config, const std::vector<std::pair<std::string, std::string>>& overrides) {
  for (const auto& [path, value] : overrides) set_key(config, path, parse_value(trim(value)));
  finish(config, "overrides");
}

std::string emit_config(const ExperimentConfig& config, const SweepSpec* sweep) {
  std::ostringstream out;
  std::string section;
  for (const auto& k : registry()) {
    if (k.section != section) {
      if (!section.empty()) out << '\n';
      section = k.section;
      out << '[' << section << "]\n";
    }
    out << k.key << " = " << k.get(config) << '\n';
  }
  if (sweep && !sweep->axes.empty()) {
    out << "\n[sweep]\n";
    for (const auto& [key, values] : sweep->axes) {
      out << key << " = [";
      for (std::size_t i = 0; i < values.size(); ++i) out << (i ? ", " : "") << values[i];
      out << "]\n";
    }
  }
  return out.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : registry()) out.push_back(k.path());
  return out;
}

std::vector<SweepPoint> expand_sweep(const ExperimentConfig& base, const SweepSpec& sweep) {
  if (sweep.axes.empty()) throw ConfigError("sweep has no axes");
  for (const auto& a : sweep.axes) {
    if (a.second.empty()) throw ConfigError("sweep." + a.first + ": empty value list");
  }
  std::vector<SweepPoint> points;
  std::vector<std::size_t> idx(sweep.axes.size(), 0);
  const std::size_t total = sweep.size();
  for (std::size_t n = 0; n < total; ++n) {
    SweepPoint p;
    p.config = base;
    std::string suffix;
    for (std::size_t a = 0; a < sweep.axes.size(); ++a) {
      const auto& [key, values] = sweep.axes[a];
      const std::string& v = values[idx[a]];
      set_key(p.config, key, parse_value(v));
      p.assignment.push_back({key, v});
      suffix += "-" + key.substr(key.find('.') + 1) + "=" + v;
    }
    p.config.name = base.name + suffix;
    finish(p.config, "sweep");
    points.push_back(std::move(p));
    for (std::size_t a = sweep.axes.size(); a-- > 0;) {
      if (++idx[a] < sweep.axes[a].second.size()) break;
      idx[a] = 0;
    }
  }
  return points;
}

}  // namespace fedhvac::cli
