#include "pinnstab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pinnstab/errors.hpp"

namespace pinnstab {

std::filesystem::path default_output_root() {
  const char* env = std::getenv(kOutEnv);
  if (env != nullptr && *env != '\0') return env;
  return "out";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

// Thrown by the value parsers; rewrapped with line context.
struct BadValue {
  std::string what;
};

double as_real(std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw BadValue{"expected a real number, got '" + s + "'"};
  return d;
}

template <class Int>
Int as_integer(std::string_view v) {
  Int x{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) {
    throw BadValue{"expected an integer, got '" + std::string(v) + "'"};
  }
  return x;
}

bool as_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw BadValue{"expected true or false, got '" + std::string(v) + "'"};
}

template <class T, class F>
std::vector<T> as_list(std::string_view v, F item) {
  std::vector<T> out;
  for (auto s : split_list(v)) out.push_back(item(s));
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.pde", [](RunConfig& c, std::string_view v) { select_pdes(c, v); }},
      {"run.experiment", [](RunConfig& c, std::string_view v) { select_experiments(c, v); }},
      {"run.seed", [](RunConfig& c, std::string_view v) { c.seed = as_integer<std::uint64_t>(v); }},
      {"run.widths", [](RunConfig& c, std::string_view v) { c.widths = as_list<int>(v, as_integer<int>); }},
      {"run.probe", [](RunConfig& c, std::string_view v) { c.probe = as_integer<int>(v); }},
      {"run.out", [](RunConfig& c, std::string_view v) { c.out = std::string(v); }},
      {"run.jobs", [](RunConfig& c, std::string_view v) { c.jobs = as_integer<int>(v); }},
      {"run.overwrite", [](RunConfig& c, std::string_view v) { c.overwrite = as_bool(v); }},

      {"train.optimizer", [](RunConfig& c, std::string_view v) { c.train.optimizer = parse_optimizer(v); }},
      {"train.steps", [](RunConfig& c, std::string_view v) { c.train.steps = as_integer<std::size_t>(v); }},
      {"train.eta0", [](RunConfig& c, std::string_view v) { c.train.eta0 = as_real(v); }},
      {"train.schedule", [](RunConfig& c, std::string_view v) { c.train.schedule = parse_schedule(v); }},
      {"train.tau", [](RunConfig& c, std::string_view v) { c.train.tau = as_real(v); }},
      {"train.beta1", [](RunConfig& c, std::string_view v) { c.train.beta1 = as_real(v); }},
      {"train.beta2", [](RunConfig& c, std::string_view v) { c.train.beta2 = as_real(v); }},
      {"train.epsilon", [](RunConfig& c, std::string_view v) { c.train.epsilon = as_real(v); }},
      {"train.checkpoint_every",
       [](RunConfig& c, std::string_view v) { c.train.checkpoint_every = as_integer<std::size_t>(v); }},

      {"grids.interior", [](RunConfig& c, std::string_view v) { c.grids.interior = as_integer<int>(v); }},
      {"grids.boundary", [](RunConfig& c, std::string_view v) { c.grids.boundary = as_integer<int>(v); }},
      {"grids.initial", [](RunConfig& c, std::string_view v) { c.grids.initial = as_integer<int>(v); }},

      {"perturbation.eps_min", [](RunConfig& c, std::string_view v) { c.eps_min = as_real(v); }},
      {"perturbation.eps_max", [](RunConfig& c, std::string_view v) { c.eps_max = as_real(v); }},
      {"perturbation.eps_count", [](RunConfig& c, std::string_view v) { c.eps_count = as_integer<int>(v); }},
      {"perturbation.directions", [](RunConfig& c, std::string_view v) { c.directions = as_integer<int>(v); }},

      {"capacity.widths",
       [](RunConfig& c, std::string_view v) { c.capacity_widths = as_list<int>(v, as_integer<int>); }},

      {"energy.times", [](RunConfig& c, std::string_view v) { c.energy_times = as_integer<int>(v); }},
      {"energy.widths", [](RunConfig& c, std::string_view v) { c.energy_widths = as_list<int>(v, as_integer<int>); }},

      {"regularization.betas", [](RunConfig& c, std::string_view v) { c.betas = as_list<double>(v, as_real); }},
      {"regularization.k", [](RunConfig& c, std::string_view v) { c.sobolev_k = as_integer<int>(v); }},

      {"refinement.initial_M", [](RunConfig& c, std::string_view v) { c.refine_initial = as_integer<int>(v); }},
      {"refinement.max_M", [](RunConfig& c, std::string_view v) { c.refine_max = as_integer<int>(v); }},
      {"refinement.overlap", [](RunConfig& c, std::string_view v) { c.refine_overlap = as_real(v); }},
      {"refinement.steps", [](RunConfig& c, std::string_view v) { c.refine_steps = as_integer<std::size_t>(v); }},

      {"noniid.rhos", [](RunConfig& c, std::string_view v) { c.rhos = as_list<double>(v, as_real); }},
      {"noniid.steps", [](RunConfig& c, std::string_view v) { c.noniid_steps = as_integer<std::size_t>(v); }},
      {"noniid.swap", [](RunConfig& c, std::string_view v) { c.noniid_swap = as_integer<std::size_t>(v); }},
      {"noniid.width", [](RunConfig& c, std::string_view v) { c.noniid_width = as_integer<int>(v); }},
      {"noniid.eta0", [](RunConfig& c, std::string_view v) { c.noniid_eta0 = as_real(v); }},
      {"noniid.tau", [](RunConfig& c, std::string_view v) { c.noniid_tau = as_real(v); }},

      {"thresholds.perturbation_r2",
       [](RunConfig& c, std::string_view v) { c.thresholds.perturbation_r2 = as_real(v); }},
      {"thresholds.consistency_spearman",
       [](RunConfig& c, std::string_view v) { c.thresholds.consistency_spearman = as_real(v); }},
      {"thresholds.energy_loss", [](RunConfig& c, std::string_view v) { c.thresholds.energy_loss = as_real(v); }},
      {"thresholds.energy_rate_rel",
       [](RunConfig& c, std::string_view v) { c.thresholds.energy_rate_rel = as_real(v); }},
      {"thresholds.energy_drift", [](RunConfig& c, std::string_view v) { c.thresholds.energy_drift = as_real(v); }},
      {"thresholds.energy_mean_error",
       [](RunConfig& c, std::string_view v) { c.thresholds.energy_mean_error = as_real(v); }},
      {"thresholds.regularization_ratio",
       [](RunConfig& c, std::string_view v) { c.thresholds.regularization_ratio = as_real(v); }},
      {"thresholds.noniid_factor",
       [](RunConfig& c, std::string_view v) { c.thresholds.noniid_factor = as_real(v); }},
      {"thresholds.noniid_coverage",
       [](RunConfig& c, std::string_view v) { c.thresholds.noniid_coverage = as_real(v); }},
      {"thresholds.noniid_b3", [](RunConfig& c, std::string_view v) { c.thresholds.noniid_b3 = as_real(v); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

void select_pdes(RunConfig& config, std::string_view names) {
  names = trim(names);
  if (names == "all") {
    config.pdes = {PdeKind::burgers, PdeKind::poisson, PdeKind::wave};
    return;
  }
  std::vector<PdeKind> kinds;
  for (auto n : split_list(names)) {
    const PdeKind k = parse_pde(n);
    if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
  }
  config.pdes = kinds;
}

void select_experiments(RunConfig& config, std::string_view names) {
  names = trim(names);
  if (names == "all") {
    config.experiments.clear();
    return;
  }
  std::vector<std::string> exps;
  for (auto n : split_list(names)) {
    const std::string s(n);
    const auto& known = experiment_names();
    if (std::find(known.begin(), known.end(), s) == known.end()) throw ConfigError("unknown experiment '" + s + "'");
    if (std::find(exps.begin(), exps.end(), s) == exps.end()) exps.push_back(s);
  }
  config.experiments = exps;
}

void apply_config_text(RunConfig& config, std::string_view text, const std::string& origin) {
  static const std::vector<std::string> sections = {"run",    "train",          "grids",      "perturbation",
                                                    "capacity", "energy",      "regularization", "refinement",
                                                    "noniid", "thresholds"};
  std::string section = "run";
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    std::string_view line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header '" + std::string(line) + "'");
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (std::find(sections.begin(), sections.end(), name) == sections.end()) {
        throw ConfigError(where + ": unknown section '" + name + "'");
      }
      section = name;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value, got '" + std::string(line) + "'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const std::string full = section + "." + key;
    const auto it = setters().find(full);
    if (it == setters().end()) throw ConfigError(where + ": unknown key '" + key + "' in section [" + section + "]");
    if (value.empty()) throw ConfigError(where + ": key '" + key + "' has no value");
    try {
      it->second(config, value);
    } catch (const BadValue& e) {
      throw ConfigError(where + ": key '" + key + "': " + e.what);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": key '" + key + "': " + e.what());
    }
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(config, ss.str(), path.string());
}

RunConfig parse_config(const Overrides& flags) {
  RunConfig config;
  config.out = default_output_root();
  if (flags.config) apply_config_file(config, *flags.config);
  if (flags.pde) select_pdes(config, *flags.pde);
  if (flags.experiment) select_experiments(config, *flags.experiment);
  if (flags.out) config.out = *flags.out;
  if (flags.seed) config.seed = *flags.seed;
  if (flags.jobs) config.jobs = *flags.jobs;
  if (flags.overwrite) config.overwrite = true;
  config.validate();
  return config;
}

}  // namespace pinnstab
