#include "avgbound/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace avgbound {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty()) throw ConfigError(key + ": empty value");
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty() || v[0] == '-') throw ConfigError(key + ": not a nonnegative integer: '" + v + "'");
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size()) throw ConfigError(key + ": not an integer: '" + v + "'");
  return static_cast<std::uint64_t>(x);
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  const std::string v = trim(value);
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  return out;
}

/// "{1}{2}" or "{1,2}": braces delimit blocks, entries are 1-based indices.
std::vector<std::vector<std::size_t>> parse_blocks(const std::string& key,
                                                   const std::string& value) {
  std::vector<std::vector<std::size_t>> blocks;
  const std::string v = trim(value);
  std::size_t i = 0;
  while (i < v.size()) {
    if (std::isspace(static_cast<unsigned char>(v[i]))) {
      ++i;
      continue;
    }
    if (v[i] != '{') throw ConfigError(key + ": expected '{' at position " + std::to_string(i));
    const std::size_t close = v.find('}', i);
    if (close == std::string::npos) throw ConfigError(key + ": unbalanced '{'");
    std::vector<std::size_t> block;
    std::stringstream ss(v.substr(i + 1, close - i - 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::uint64_t idx = parse_u64(key, item);
      if (idx == 0) throw ConfigError(key + ": indices are 1-based");
      block.push_back(static_cast<std::size_t>(idx));
    }
    if (block.empty()) throw ConfigError(key + ": empty block");
    blocks.push_back(std::move(block));
    i = close + 1;
  }
  if (blocks.empty()) throw ConfigError(key + ": no blocks given");
  return blocks;
}

class KeyMap {
 public:
  explicit KeyMap(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
      if (!map_.emplace(key, value).second) throw ConfigError("duplicate key: " + key);
    }
  }

  [[nodiscard]] bool has(const std::string& key) const { return map_.count(key) != 0; }

  [[nodiscard]] const std::string* get(const std::string& key) {
    auto it = map_.find(key);
    if (it == map_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
  }

  void reject_unconsumed() const {
    for (const auto& [key, value] : map_)
      if (consumed_.count(key) == 0) throw ConfigError("unknown key: " + key);
  }

 private:
  std::map<std::string, std::string> map_;
  std::set<std::string> consumed_;
};

}  // namespace

RunConfig parse_config(const std::string& text) {
  KeyMap keys(text);
  RunConfig cfg;

  if (const auto* v = keys.get("example.id")) cfg.example_id = *v;

  if (const auto* v = keys.get("example.figure")) {
    const std::string f = *v;
    if (f.size() != 1) throw ConfigError("example.figure: expected one of a, b, c, d");
    try {
      cfg.params = rigid_body::figure_config(f[0]);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("example.figure: ") + e.what());
    }
  }

  if (const auto* v = keys.get("example.mu")) cfg.params.mu = parse_double("example.mu", *v);
  if (const auto* v = keys.get("example.lambda1"))
    cfg.params.lambda1 = parse_double("example.lambda1", *v);
  if (const auto* v = keys.get("example.lambda2"))
    cfg.params.lambda2 = parse_double("example.lambda2", *v);
  if (const auto* v = keys.get("example.I0_1"))
    cfg.params.initial_action[0] = parse_double("example.I0_1", *v);
  if (const auto* v = keys.get("example.I0_2"))
    cfg.params.initial_action[1] = parse_double("example.I0_2", *v);
  if (const auto* v = keys.get("example.epsilon"))
    cfg.params.epsilon = parse_double("example.epsilon", *v);
  if (const auto* v = keys.get("example.U")) cfg.params.horizon = parse_double("example.U", *v);

  if (const auto* v = keys.get("flow.source")) {
    if (*v == "closed_form")
      cfg.flow_source = AveragedFlow::Source::closed_form;
    else if (*v == "numeric")
      cfg.flow_source = AveragedFlow::Source::numeric;
    else
      throw ConfigError("flow.source: expected closed_form or numeric, got '" + *v + "'");
  }

  if (const auto* v = keys.get("seminorms.kind")) {
    if (*v == "component")
      cfg.family_kind = SeminormFamily::Kind::component;
    else if (*v == "partition")
      cfg.family_kind = SeminormFamily::Kind::partition;
    else
      throw ConfigError("seminorms.kind: expected component or partition, got '" + *v + "'");
  }
  if (const auto* v = keys.get("seminorms.blocks")) {
    if (cfg.family_kind != SeminormFamily::Kind::partition)
      throw ConfigError("seminorms.blocks requires seminorms.kind = partition");
    cfg.blocks = parse_blocks("seminorms.blocks", *v);
  }
  if (cfg.family_kind == SeminormFamily::Kind::partition && cfg.blocks.empty())
    throw ConfigError("seminorms.kind = partition requires seminorms.blocks");

  if (const auto* v = keys.get("n_op.method")) {
    if (*v == "rkf45")
      cfg.n_cfg.method = OdeMethod::rkf45;
    else if (*v == "rk4")
      cfg.n_cfg.method = OdeMethod::rk4;
    else
      throw ConfigError("n_op.method: expected rkf45 or rk4, got '" + *v + "'");
  }
  if (const auto* v = keys.get("n_op.step")) cfg.n_cfg.step = parse_double("n_op.step", *v);
  if (const auto* v = keys.get("n_op.abs_tol"))
    cfg.n_cfg.abs_tol = parse_double("n_op.abs_tol", *v);
  if (const auto* v = keys.get("n_op.rel_tol"))
    cfg.n_cfg.rel_tol = parse_double("n_op.rel_tol", *v);
  if (const auto* v = keys.get("n_op.initial_step"))
    cfg.n_cfg.initial_step = parse_double("n_op.initial_step", *v);
  if (const auto* v = keys.get("n_op.max_step"))
    cfg.n_cfg.max_step = parse_double("n_op.max_step", *v);
  if (const auto* v = keys.get("n_op.max_steps"))
    cfg.n_cfg.max_steps = static_cast<std::size_t>(parse_u64("n_op.max_steps", *v));
  if (cfg.n_cfg.method == OdeMethod::rk4 && cfg.n_cfg.step <= 0.0)
    throw ConfigError("n_op.method = rk4 requires n_op.step > 0");

  if (const auto* v = keys.get("l_op.steps_per_period")) {
    cfg.l_cfg.steps_per_period = parse_double("l_op.steps_per_period", *v);
    if (cfg.l_cfg.steps_per_period <= 0.0)
      throw ConfigError("l_op.steps_per_period must be positive");
  }
  if (const auto* v = keys.get("l_op.step")) {
    cfg.l_cfg.step_override = parse_double("l_op.step", *v);
    if (cfg.l_cfg.step_override <= 0.0) throw ConfigError("l_op.step must be positive");
  }
  if (const auto* v = keys.get("l_op.max_steps"))
    cfg.l_cfg.max_steps = static_cast<std::size_t>(parse_u64("l_op.max_steps", *v));

  if (const auto* v = keys.get("samples.count")) {
    cfg.sample_count = static_cast<std::size_t>(parse_u64("samples.count", *v));
    if (cfg.sample_count < 2) throw ConfigError("samples.count must be at least 2");
  }
  if (const auto* v = keys.get("samples.windows")) {
    cfg.windows = static_cast<std::size_t>(parse_u64("samples.windows", *v));
    if (cfg.windows == 0) throw ConfigError("samples.windows must be positive");
  }
  if (const auto* v = keys.get("audit.nodes")) {
    cfg.audit_nodes = static_cast<std::size_t>(parse_u64("audit.nodes", *v));
    if (cfg.audit_nodes < 2) throw ConfigError("audit.nodes must be at least 2");
  }
  if (const auto* v = keys.get("output.rows")) {
    cfg.output_rows = static_cast<std::size_t>(parse_u64("output.rows", *v));
    if (cfg.output_rows < 2) throw ConfigError("output.rows must be at least 2");
  }
  if (const auto* v = keys.get("output.dir")) cfg.output_dir = *v;
  if (const auto* v = keys.get("rng.seed")) cfg.seed = parse_u64("rng.seed", *v);

  if (const auto* v = keys.get("check.samples"))
    cfg.check_samples = static_cast<std::size_t>(parse_u64("check.samples", *v));
  if (const auto* v = keys.get("check.family_trials"))
    cfg.family_trials = static_cast<std::size_t>(parse_u64("check.family_trials", *v));
  if (const auto* v = keys.get("check.bundle_trials"))
    cfg.bundle_trials = static_cast<std::size_t>(parse_u64("check.bundle_trials", *v));
  if (const auto* v = keys.get("check.fd_step")) {
    cfg.fd_step = parse_double("check.fd_step", *v);
    if (cfg.fd_step <= 0.0) throw ConfigError("check.fd_step must be positive");
  }

  if (const auto* v = keys.get("debug.corrupt_s")) cfg.corrupt_s = parse_bool("debug.corrupt_s", *v);

  const auto sweep_list = [&](const char* key, std::optional<std::vector<double>>& dst) {
    if (const auto* v = keys.get(key)) {
      dst = parse_double_list(key, *v);
      cfg.has_sweep_keys = true;
    }
  };
  sweep_list("sweep.epsilon", cfg.sweep_epsilon);
  sweep_list("sweep.mu", cfg.sweep_mu);
  sweep_list("sweep.lambda1", cfg.sweep_lambda1);
  sweep_list("sweep.lambda2", cfg.sweep_lambda2);
  sweep_list("sweep.U", cfg.sweep_U);
  if (const auto* v = keys.get("sweep.threads"))
    cfg.sweep_threads = static_cast<std::size_t>(parse_u64("sweep.threads", *v));

  keys.reject_unconsumed();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace avgbound
