#include "cutmpc/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace cutmpc::cli {

namespace {

struct KeyDef {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number: '" + s + "'");
  }
}

long parse_int(const std::string& s) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer: '" + s + "'");
  }
}

std::vector<std::string> parse_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i != 0 ? "," : "") + v[i];
  return s;
}

#define DOUBLE_KEY(sec, name, field)                                            \
  {sec, name, [](const RunConfig& c) { return fmt_g(c.field); },                \
   [](RunConfig& c, const std::string& v) { c.field = parse_double(v); }}
#define INT_KEY(sec, name, field)                                               \
  {sec, name, [](const RunConfig& c) { return std::to_string(c.field); },       \
   [](RunConfig& c, const std::string& v) { c.field = static_cast<int>(parse_int(v)); }}
#define LIST_KEY(sec, name, field)                                              \
  {sec, name, [](const RunConfig& c) { return join(c.field); },                 \
   [](RunConfig& c, const std::string& v) { c.field = parse_list(v); }}

const std::vector<KeyDef>& schema() {
  static const std::vector<KeyDef> defs = {
      {"run", "seed", [](const RunConfig& c) { return std::to_string(c.seed); },
       [](RunConfig& c, const std::string& v) {
         c.seed = static_cast<std::uint64_t>(parse_int(v));
       }},
      {"run", "materials_file", [](const RunConfig& c) { return c.materials_file; },
       [](RunConfig& c, const std::string& v) { c.materials_file = v; }},

      DOUBLE_KEY("plant", "dt", plant.dt),
      DOUBLE_KEY("plant", "actuator_tau", plant.actuator_tau),
      DOUBLE_KEY("plant", "v_ref", plant.v_ref),
      DOUBLE_KEY("plant", "table_z", plant.table_z),

      INT_KEY("collect", "trials_per_material", trials_per_material),
      LIST_KEY("collect", "train_materials", train_materials),
      LIST_KEY("collect", "held_out", held_out),
      DOUBLE_KEY("collect", "duration_min", duration_min),
      DOUBLE_KEY("collect", "duration_max", duration_max),
      DOUBLE_KEY("collect", "saw_range", saw_range),
      DOUBLE_KEY("collect", "saw_period_min", saw_period_min),
      DOUBLE_KEY("collect", "saw_period_max", saw_period_max),
      DOUBLE_KEY("collect", "ka_min", ka_min),
      DOUBLE_KEY("collect", "ka_max", ka_max),
      DOUBLE_KEY("collect", "kp_min", kp_min),
      DOUBLE_KEY("collect", "kp_max", kp_max),
      DOUBLE_KEY("collect", "trial_extra_s", trial_extra_s),

      INT_KEY("dataset", "block_m", block_m),
      DOUBLE_KEY("dataset", "train_fraction", train_fraction),

      DOUBLE_KEY("train", "stage1_lr", stage1_lr),
      INT_KEY("train", "stage1_epochs", stage1_epochs),
      DOUBLE_KEY("train", "stage2_lr", stage2_lr),
      INT_KEY("train", "stage2_epochs", stage2_epochs),
      DOUBLE_KEY("train", "stage3_lr", stage3_lr),
      INT_KEY("train", "stage3_epochs", stage3_epochs),
      INT_KEY("train", "minibatch", minibatch),
      DOUBLE_KEY("train", "momentum", momentum),
      DOUBLE_KEY("train", "clip_norm", clip_norm),
      INT_KEY("train", "horizon_blocks", horizon_blocks),
      INT_KEY("train", "hidden", hidden),
      INT_KEY("train", "latent", latent),
      INT_KEY("train", "rnn_units", rnn_units),

      INT_KEY("mpc", "candidates", candidates),
      DOUBLE_KEY("mpc", "force_amp", force_amp),
      DOUBLE_KEY("mpc", "c_cut", c_cut),
      DOUBLE_KEY("mpc", "c_saw", c_saw),
      DOUBLE_KEY("mpc", "c_v", c_v),
      DOUBLE_KEY("mpc", "control_rate", control_rate),
      DOUBLE_KEY("mpc", "deploy_ka", deploy_ka),
      DOUBLE_KEY("mpc", "timeout_s", timeout_s),
      DOUBLE_KEY("mpc", "force_limit_n", force_limit_n),
      DOUBLE_KEY("mpc", "complete_tol_m", complete_tol_m),

      INT_KEY("eval", "n", eval_n),
      LIST_KEY("eval", "materials", eval_materials),
  };
  return defs;
}

#undef DOUBLE_KEY
#undef INT_KEY
#undef LIST_KEY

const KeyDef* find_key(const std::string& section, const std::string& key) {
  for (const auto& d : schema())
    if (d.section == section && d.key == key) return &d;
  return nullptr;
}

}  // namespace

void RunConfig::validate() const {
  plant.validate();
  if (trials_per_material < 1) throw ConfigError("collect.trials_per_material must be >= 1");
  if (train_materials.empty()) throw ConfigError("collect.train_materials must not be empty");
  for (const auto& h : held_out)
    for (const auto& t : train_materials)
      if (h == t) throw ConfigError("held-out material '" + h + "' is in train_materials");
  if (block_m < 1) throw ConfigError("dataset.block_m must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("dataset.train_fraction must be in (0, 1)");
  if (minibatch < 1) throw ConfigError("train.minibatch must be >= 1");
  if (horizon_blocks < 1) throw ConfigError("train.horizon_blocks must be >= 1");
  if (candidates < 1) throw ConfigError("mpc.candidates must be >= 1");
  if (!(force_amp > 0.0)) throw ConfigError("mpc.force_amp must be > 0");
  if (!(deploy_ka > 0.0)) throw ConfigError("mpc.deploy_ka must be > 0");
  if (eval_n < 1) throw ConfigError("eval.n must be >= 1");
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string ctx = path + ":" + std::to_string(lineno);
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(ctx + ": malformed section header");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(ctx + ": expected key = value");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
    };
    trim(key);
    trim(val);
    const KeyDef* def = find_key(section, key);
    if (def == nullptr)
      throw ConfigError(ctx + ": unknown config key [" + section + "] " + key);
    try {
      def->set(cfg, val);
    } catch (const ConfigError& e) {
      throw ConfigError(ctx + ": " + e.what());
    }
  }
  return cfg;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override must look like section.key=value, got '" + assignment + "'");
  const std::string section = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  const std::string val = assignment.substr(eq + 1);
  const KeyDef* def = find_key(section, key);
  if (def == nullptr) throw ConfigError("unknown config key [" + section + "] " + key);
  def->set(cfg, val);
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& d : schema()) {
    if (d.section != section) {
      if (!section.empty()) out << '\n';
      section = d.section;
      out << '[' << section << "]\n";
    }
    out << d.key << " = " << d.get(cfg) << '\n';
  }
  return out.str();
}

void write_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write config snapshot: " + path);
  out << serialize_config(cfg);
}

}  // namespace cutmpc::cli
