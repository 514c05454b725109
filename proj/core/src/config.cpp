#include "resprect/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string_view>

#include "resprect/errors.hpp"
#include "resprect/rng.hpp"

namespace resprect {

namespace {

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  const std::size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::string format_float(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

float parse_float(const std::string& key, const std::string& v) {
  try {
    std::size_t idx = 0;
    const float out = std::stof(v, &idx);
    if (idx != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' wants a number, got '" + v + "'");
  }
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    std::size_t idx = 0;
    const unsigned long long out = std::stoull(v, &idx);
    if (idx != v.size()) throw std::invalid_argument(v);
    return static_cast<std::size_t>(out);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' wants a non-negative integer, got '" +
                      v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: '" + key + "' wants true/false, got '" + v + "'");
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

/// The schema: one row per key, in canonical echo order.
const std::vector<Field>& schema() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    auto str = [&f](const char* k, std::string RunConfig::* m) {
      f.push_back({k, [m, k](RunConfig& c, const std::string& v) { c.*m = v; },
                   [m](const RunConfig& c) { return c.*m; }});
    };
    auto flt = [&f](const char* k, float RunConfig::* m) {
      f.push_back({k,
                   [m, k](RunConfig& c, const std::string& v) {
                     c.*m = parse_float(k, v);
                   },
                   [m](const RunConfig& c) { return format_float(c.*m); }});
    };
    auto num = [&f](const char* k, std::size_t RunConfig::* m) {
      f.push_back({k,
                   [m, k](RunConfig& c, const std::string& v) {
                     c.*m = parse_size(k, v);
                   },
                   [m](const RunConfig& c) { return std::to_string(c.*m); }});
    };
    auto bol = [&f](const char* k, bool RunConfig::* m) {
      f.push_back({k,
                   [m, k](RunConfig& c, const std::string& v) {
                     c.*m = parse_bool(k, v);
                   },
                   [m](const RunConfig& c) { return c.*m ? "true" : "false"; }});
    };
    auto u64 = [&f](const char* k, std::uint64_t RunConfig::* m) {
      f.push_back({k,
                   [m, k](RunConfig& c, const std::string& v) {
                     c.*m = parse_size(k, v);
                   },
                   [m](const RunConfig& c) { return std::to_string(c.*m); }});
    };

    str("mode", &RunConfig::mode);
    u64("seed", &RunConfig::seed);
    str("optimizer", &RunConfig::optimizer);
    flt("lr", &RunConfig::lr);
    flt("gamma", &RunConfig::gamma);
    num("buffer_size", &RunConfig::buffer_size);
    num("hidden_layers", &RunConfig::hidden_layers);
    num("hidden", &RunConfig::hidden);
    num("batch_size", &RunConfig::batch_size);
    str("target_entropy", &RunConfig::target_entropy);
    str("nonlinearity", &RunConfig::nonlinearity);
    flt("tau", &RunConfig::tau);
    num("target_update_interval", &RunConfig::target_update_interval);
    num("gradient_steps", &RunConfig::gradient_steps);
    num("training_frequency", &RunConfig::training_frequency);
    num("total_timesteps", &RunConfig::total_timesteps);
    flt("init_entropy_coef", &RunConfig::init_entropy_coef);
    bol("fixed_alpha", &RunConfig::fixed_alpha);
    num("learning_starts", &RunConfig::learning_starts);
    flt("residual_scale", &RunConfig::residual_scale);
    num("finetune_gradient_steps", &RunConfig::finetune_gradient_steps);
    num("fingers", &RunConfig::fingers);
    num("max_steps", &RunConfig::max_steps);
    flt("obs_noise_sigma", &RunConfig::obs_noise_sigma);
    bol("reach_only", &RunConfig::reach_only);
    str("task_family", &RunConfig::task_family);
    num("demo_episodes", &RunConfig::demo_episodes);
    num("reptile_inner_steps", &RunConfig::reptile_inner_steps);
    num("reptile_outer_loops", &RunConfig::reptile_outer_loops);
    flt("reptile_eps", &RunConfig::reptile_eps);
    num("eval_episodes", &RunConfig::eval_episodes);
    str("run_dir", &RunConfig::run_dir);
    str("base_checkpoint", &RunConfig::base_checkpoint);
    return f;
  }();
  return fields;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError("config: " + message);
}

}  // namespace

float RunConfig::resolved_target_entropy(std::size_t action_dim) const {
  if (target_entropy == "auto") return -static_cast<float>(action_dim);
  return parse_float("target_entropy", target_entropy);
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    out.emplace_back(key, value);
  }
  return out;
}

void apply_key_values(RunConfig& cfg, const KeyValues& kvs) {
  for (const auto& [key, value] : kvs) {
    bool found = false;
    for (const Field& f : schema()) {
      if (key == f.key) {
        f.set(cfg, value);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("config: unknown key '" + key + "'");
  }
}

void validate_config(const RunConfig& cfg) {
  static const char* kModes[] = {"scratch", "resprect",        "residual_plain",
                                 "finetune", "reptile",         "reptile_pretrain",
                                 "demo",     "eval"};
  bool mode_ok = false;
  for (const char* m : kModes) mode_ok |= cfg.mode == m;
  require(mode_ok, "unknown mode '" + cfg.mode + "'");

  require(cfg.optimizer == "adam", "only optimizer = adam is implemented");
  require(cfg.nonlinearity == "relu", "only nonlinearity = relu is implemented");
  require(cfg.hidden_layers == 2, "only hidden_layers = 2 is implemented");

  require(cfg.lr > 0.0f, "lr must be positive");
  require(cfg.gamma > 0.0f && cfg.gamma <= 1.0f, "gamma must be in (0,1]");
  require(cfg.tau > 0.0f && cfg.tau <= 1.0f, "tau must be in (0,1]");
  require(cfg.hidden >= 1, "hidden must be positive");
  require(cfg.batch_size >= 1, "batch_size must be positive");
  require(cfg.buffer_size >= cfg.batch_size, "buffer_size must cover one batch");
  require(cfg.target_update_interval >= 1, "target_update_interval must be >= 1");
  require(cfg.training_frequency >= 1, "training_frequency must be >= 1");
  require(cfg.init_entropy_coef > 0.0f, "init_entropy_coef must be positive");
  require(cfg.finetune_gradient_steps >= 1, "finetune_gradient_steps must be >= 1");
  require(cfg.residual_scale > 0.0f && cfg.residual_scale <= 1.0f,
          "residual_scale must be in (0,1]");
  require(cfg.reptile_eps >= 0.0f && cfg.reptile_eps <= 1.0f,
          "reptile_eps must be in [0,1]");
  require(cfg.fingers >= 2, "fingers must be >= 2");
  require(cfg.max_steps >= 1, "max_steps must be >= 1");
  require(cfg.obs_noise_sigma >= 0.0f, "obs_noise_sigma must be >= 0");

  if (cfg.target_entropy != "auto") {
    parse_float("target_entropy", cfg.target_entropy);  // throws if malformed
  }

  // The family must be resolvable by the object sampler.
  Rng probe(0);
  object_sampler(cfg.task_family, probe);

  const bool needs_base = cfg.mode == "resprect" || cfg.mode == "residual_plain" ||
                          cfg.mode == "finetune" || cfg.mode == "reptile" ||
                          cfg.mode == "eval";
  if (needs_base) {
    require(!cfg.base_checkpoint.empty(),
            "mode '" + cfg.mode + "' requires base_checkpoint");
  }
}

RunConfig load_config(const std::string& path, const KeyValues& overrides) {
  RunConfig cfg;
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config file '" + path + "' does not exist");
    std::stringstream buffer;
    buffer << is.rdbuf();
    apply_key_values(cfg, parse_key_values(buffer.str()));
  }
  apply_key_values(cfg, overrides);
  validate_config(cfg);
  return cfg;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : schema()) keys.emplace_back(f.key);
  return keys;
}

std::string echo_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const Field& f : schema()) os << f.key << " = " << f.get(cfg) << "\n";
  return os.str();
}

std::string config_hash(const RunConfig& cfg) {
  // run_dir is an output location, not a behavioral knob: two otherwise
  // identical runs writing to different directories share a hash.
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (const Field& f : schema()) {
    if (std::string_view(f.key) == "run_dir") continue;
    const std::string line = std::string(f.key) + " = " + f.get(cfg) + "\n";
    for (unsigned char c : line) {
      h ^= c;
      h *= 1099511628211ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EnvConfig env_config(const RunConfig& cfg) {
  EnvConfig e;
  e.fingers = cfg.fingers;
  e.max_steps = cfg.max_steps;
  e.obs_noise_sigma = cfg.obs_noise_sigma;
  e.reach_only = cfg.reach_only;
  return e;
}

SacConfig sac_config(const RunConfig& cfg, std::size_t obs_dim,
                     std::size_t action_dim) {
  SacConfig s;
  s.obs_dim = obs_dim;
  s.action_dim = action_dim;
  s.hidden = cfg.hidden;
  s.residual_scale = cfg.residual_scale;
  s.lr = cfg.lr;
  s.gamma = cfg.gamma;
  s.tau = cfg.tau;
  s.target_update_interval = cfg.target_update_interval;
  s.batch_size = cfg.batch_size;
  s.gradient_steps = cfg.gradient_steps;
  s.training_frequency = cfg.training_frequency;
  s.init_entropy_coef = cfg.init_entropy_coef;
  s.fixed_alpha = cfg.fixed_alpha;
  s.target_entropy = cfg.resolved_target_entropy(action_dim);
  return s;
}

}  // namespace resprect
