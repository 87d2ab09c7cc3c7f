#include "rclub/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rclub {

namespace {

// Minimal flat-tables reader: [section] headers (dotted allowed), bare
// key = value pairs, scalars and one-line arrays of scalars, # comments.
// Everything a config needs here and nothing more; strictness over breadth.

struct TomlValue {
  enum class Kind { Int, Float, Bool, Str, Array } kind = Kind::Int;
  long long i = 0;
  double f = 0.0;
  bool b = false;
  std::string s;
  std::vector<TomlValue> arr;
  long line = 0;
};

struct TomlSection {
  std::string name;
  long line = 0;
  std::vector<std::pair<std::string, TomlValue>> entries;
};

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(long line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

TomlValue parse_scalar(const std::string& raw, long line) {
  TomlValue v;
  v.line = line;
  std::string s = trim(raw);
  if (s.empty()) fail(line, "empty value");
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"')
      fail(line, "unterminated string");
    v.kind = TomlValue::Kind::Str;
    v.s = s.substr(1, s.size() - 2);
    if (v.s.find('"') != std::string::npos)
      fail(line, "embedded quote in string");
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = TomlValue::Kind::Bool;
    v.b = s == "true";
    return v;
  }
  bool int_like = !s.empty() && s.find_first_not_of("+-0123456789") ==
                                    std::string::npos &&
                  s.find_first_of("0123456789") != std::string::npos;
  if (int_like) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v.i);
    if (ec == std::errc() && p == s.data() + s.size()) {
      v.kind = TomlValue::Kind::Int;
      return v;
    }
  }
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v.f);
  if (ec == std::errc() && p == s.data() + s.size()) {
    v.kind = TomlValue::Kind::Float;
    return v;
  }
  fail(line, "cannot parse value '" + s + "'");
}

TomlValue parse_value(const std::string& raw, long line) {
  std::string s = trim(raw);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') fail(line, "unterminated array");
    TomlValue v;
    v.kind = TomlValue::Kind::Array;
    v.line = line;
    std::string inner = s.substr(1, s.size() - 2);
    std::string field;
    bool any = false;
    for (char c : inner) {
      if (c == ',') {
        v.arr.push_back(parse_scalar(field, line));
        field.clear();
        any = true;
      } else {
        field += c;
      }
    }
    if (!trim(field).empty()) {
      v.arr.push_back(parse_scalar(field, line));
    } else if (any) {
      fail(line, "trailing comma in array");
    }
    return v;
  }
  return parse_scalar(s, line);
}

std::string strip_comment(const std::string& line, long ln) {
  std::string out;
  bool in_str = false;
  for (char c : line) {
    if (c == '"') in_str = !in_str;
    if (c == '#' && !in_str) break;
    out += c;
  }
  if (in_str) fail(ln, "unterminated string");
  return out;
}

std::vector<TomlSection> parse_toml(const std::string& text) {
  std::vector<TomlSection> sections;
  sections.push_back({"", 0, {}});  // root
  std::istringstream in(text);
  std::string line;
  long ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string s = trim(strip_comment(line, ln));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(ln, "malformed section header");
      std::string name = trim(s.substr(1, s.size() - 2));
      if (name.empty()) fail(ln, "empty section name");
      for (const auto& sec : sections)
        if (sec.name == name) fail(ln, "duplicate section [" + name + "]");
      sections.push_back({name, ln, {}});
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) fail(ln, "expected key = value");
    std::string key = trim(s.substr(0, eq));
    if (key.empty() ||
        key.find_first_not_of("abcdefghijklmnopqrstuvwxyz"
                              "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_") !=
            std::string::npos)
      fail(ln, "malformed key '" + key + "'");
    for (const auto& [k, v] : sections.back().entries)
      if (k == key) fail(ln, "duplicate key '" + key + "'");
    sections.back().entries.emplace_back(key, parse_value(s.substr(eq + 1), ln));
  }
  return sections;
}

// Typed accessors over one section, recording which keys were consumed so
// leftovers can be reported as hard errors.
class SectionReader {
 public:
  explicit SectionReader(const TomlSection& sec) : sec_(sec) {}

  const TomlValue* find(const std::string& key) {
    for (const auto& [k, v] : sec_.entries)
      if (k == key) {
        used_.insert(key);
        return &v;
      }
    return nullptr;
  }

  long get_int(const std::string& key, long def) {
    const TomlValue* v = find(key);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::Int)
      fail(v->line, "'" + key + "' must be an integer");
    return static_cast<long>(v->i);
  }

  double get_float(const std::string& key, double def) {
    const TomlValue* v = find(key);
    if (!v) return def;
    if (v->kind == TomlValue::Kind::Int) return static_cast<double>(v->i);
    if (v->kind != TomlValue::Kind::Float)
      fail(v->line, "'" + key + "' must be a number");
    return v->f;
  }

  // number, or the string "auto" mapped to the sentinel
  double get_float_or_auto(const std::string& key, double def,
                           double auto_value) {
    const TomlValue* v = find(key);
    if (!v) return def;
    if (v->kind == TomlValue::Kind::Str) {
      if (v->s == "auto") return auto_value;
      fail(v->line, "'" + key + "' must be a number or \"auto\"");
    }
    if (v->kind == TomlValue::Kind::Int) return static_cast<double>(v->i);
    if (v->kind != TomlValue::Kind::Float)
      fail(v->line, "'" + key + "' must be a number or \"auto\"");
    return v->f;
  }

  bool get_bool(const std::string& key, bool def) {
    const TomlValue* v = find(key);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::Bool)
      fail(v->line, "'" + key + "' must be true or false");
    return v->b;
  }

  std::string get_string(const std::string& key, const std::string& def) {
    const TomlValue* v = find(key);
    if (!v) return def;
    if (v->kind != TomlValue::Kind::Str)
      fail(v->line, "'" + key + "' must be a string");
    return v->s;
  }

  std::vector<uint64_t> get_uint_array(const std::string& key) {
    const TomlValue* v = find(key);
    if (!v) return {};
    std::vector<uint64_t> out;
    if (v->kind == TomlValue::Kind::Int) {
      out.push_back(static_cast<uint64_t>(v->i));
      return out;
    }
    if (v->kind != TomlValue::Kind::Array)
      fail(v->line, "'" + key + "' must be an array of integers");
    for (const auto& e : v->arr) {
      if (e.kind != TomlValue::Kind::Int)
        fail(e.line, "'" + key + "' must contain only integers");
      out.push_back(static_cast<uint64_t>(e.i));
    }
    return out;
  }

  void finish() const {
    for (const auto& [k, v] : sec_.entries)
      if (!used_.count(k))
        fail(v.line, "unknown key '" + k + "' in [" + sec_.name + "]");
  }

 private:
  const TomlSection& sec_;
  std::set<std::string> used_;
};

PolicySpecEntry read_policy(const TomlSection& sec, const std::string& name) {
  SectionReader r(sec);
  PolicySpecEntry p;
  p.name = name;
  std::string kind = r.get_string("kind", "");
  if (kind.empty()) fail(sec.line, "[policy." + name + "] needs a kind");
  auto k = policy_kind_from_name(kind);
  if (!k) fail(sec.line, "unknown policy kind '" + kind + "'");
  p.kind = *k;
  p.cfg.lambda = r.get_float("lambda", 1.0);
  p.cfg.alpha = r.get_float_or_auto("alpha", -1.0, -1.0);
  p.cfg.alpha1 = r.get_float("alpha1", 1.0);
  p.cfg.delta = r.get_float_or_auto("delta", -1.0, -1.0);
  p.cfg.cbar = r.get_float_or_auto("cbar", -1.0, -1.0);
  p.cfg.weights_enabled = r.get_bool("weights", true);
  p.cfg.deletion_enabled = r.get_bool("deletion", true);
  p.cfg.lagged_weights = r.get_bool("lagged_weights", false);
  p.cfg.beta_cluster_counts = r.get_bool("beta_cluster_counts", false);
  r.finish();
  return p;
}

}  // namespace

long ExperimentConfig::resolved_trace_stride() const {
  if (trace_stride > 0) return trace_stride;
  return std::max(1L, horizon / 1000);
}

long ExperimentConfig::resolved_detect_every() const {
  if (detector.detect_every > 0) return detector.detect_every;
  return std::max(1L, horizon / 5);
}

double ExperimentConfig::resolved_lambda_x() const {
  if (diagnostics.lambda_x > 0.0) return diagnostics.lambda_x;
  return 1.0 / (2.0 * (instance.dim - 1));
}

double ExperimentConfig::resolved_sigma() const {
  if (diagnostics.sigma > 0.0) return diagnostics.sigma;
  return resolved_lambda_x() / 2.0;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  auto sections = parse_toml(text);
  ExperimentConfig cfg;
  bool saw_instance = false, saw_run = false;

  for (const auto& sec : sections) {
    if (sec.name.empty()) {
      if (!sec.entries.empty())
        fail(sec.entries.front().second.line,
             "top-level keys are not allowed; use a [section]");
      continue;
    }
    if (sec.name == "instance") {
      saw_instance = true;
      SectionReader r(sec);
      cfg.instance.users = static_cast<int>(r.get_int("users", 0));
      cfg.instance.clusters = static_cast<int>(r.get_int("clusters", 1));
      cfg.instance.dim = static_cast<int>(r.get_int("dim", 0));
      cfg.instance.arm_pool = static_cast<int>(r.get_int("arm_pool", 0));
      cfg.instance.corrupted_fraction = r.get_float("corrupted_fraction", 0.0);
      cfg.arms_per_round = static_cast<int>(r.get_int("arms_per_round", 20));
      cfg.noise_sd = r.get_float("noise_sd", 0.1);
      r.finish();
    } else if (sec.name == "corruption") {
      SectionReader r(sec);
      std::string mode = r.get_string("mode", "none");
      if (mode == "none")
        cfg.corruption_mode = CorruptionMode::None;
      else if (mode == "flip_prefix")
        cfg.corruption_mode = CorruptionMode::FlipPrefix;
      else
        fail(sec.line, "unknown corruption mode '" + mode + "'");
      cfg.corruption_k = r.get_int("k", 0);
      r.finish();
    } else if (sec.name == "run") {
      saw_run = true;
      SectionReader r(sec);
      cfg.horizon = r.get_int("horizon", 0);
      cfg.seeds = r.get_uint_array("seeds");
      cfg.out_dir = r.get_string("out_dir", cfg.out_dir);
      cfg.trace_stride = r.get_int("trace_stride", 0);
      cfg.track_potential = r.get_bool("track_potential", false);
      cfg.record_rounds = r.get_bool("record_rounds", false);
      cfg.svg = r.get_bool("svg", true);
      r.finish();
    } else if (sec.name == "detector") {
      SectionReader r(sec);
      cfg.detector.detect_every = r.get_int("detect_every", 0);
      cfg.detector.delta = r.get_float_or_auto("delta", -1.0, -1.0);
      cfg.detector.gcud_fraction =
          r.get_float_or_auto("gcud_fraction", -1.0, -1.0);
      r.finish();
    } else if (sec.name == "diagnostics") {
      SectionReader r(sec);
      cfg.diagnostics.lambda_x = r.get_float_or_auto("lambda_x", -1.0, -1.0);
      cfg.diagnostics.sigma = r.get_float_or_auto("sigma", -1.0, -1.0);
      r.finish();
    } else if (sec.name.rfind("policy.", 0) == 0) {
      std::string name = sec.name.substr(7);
      if (name.empty()) fail(sec.line, "policy section needs a name");
      for (const auto& p : cfg.policies)
        if (p.name == name) fail(sec.line, "duplicate policy '" + name + "'");
      cfg.policies.push_back(read_policy(sec, name));
    } else {
      fail(sec.line, "unknown section [" + sec.name + "]");
    }
  }

  if (!saw_instance) throw ConfigError("config: missing [instance] section");
  if (!saw_run) throw ConfigError("config: missing [run] section");
  if (cfg.horizon < 1) throw ConfigError("config: horizon must be >= 1");
  if (cfg.seeds.empty()) throw ConfigError("config: need at least one seed");
  if (cfg.policies.empty()) throw ConfigError("config: need at least one policy");
  if (cfg.instance.users < 1) throw ConfigError("config: users must be >= 1");
  if (cfg.instance.dim < 2) throw ConfigError("config: dim must be >= 2");
  if (cfg.instance.arm_pool < 1)
    throw ConfigError("config: arm_pool must be >= 1");
  if (cfg.arms_per_round < 1 || cfg.arms_per_round > cfg.instance.arm_pool)
    throw ConfigError("config: need 1 <= arms_per_round <= arm_pool");
  if (cfg.noise_sd < 0.0) throw ConfigError("config: noise_sd must be >= 0");
  if (cfg.corruption_k < 0) throw ConfigError("config: k must be >= 0");
  if (cfg.resolved_detect_every() > cfg.horizon)
    throw ConfigError("config: detect_every must be <= horizon");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

}  // namespace rclub
