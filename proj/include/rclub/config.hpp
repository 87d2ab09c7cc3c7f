#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rclub/bandits.hpp"
#include "rclub/envsim.hpp"

namespace rclub {

// Anything wrong with a config file: syntax, unknown keys, bad values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DetectorConfig {
  long detect_every = 0;       // 0 = horizon / 5
  double delta = -1.0;         // < 0 = each scan uses the policy's delta
  double gcud_fraction = -1.0; // < 0 = the instance's corrupted fraction
};

struct DiagnosticsConfig {
  double lambda_x = -1.0;  // < 0 = 1 / (2 (dim - 1)), exact for the generator
  double sigma = -1.0;     // < 0 = lambda_x / 2
};

struct PolicySpecEntry {
  std::string name;
  PolicyKind kind = PolicyKind::LinUcb;
  PolicyConfig cfg;
};

struct ExperimentConfig {
  InstanceConfig instance;
  int arms_per_round = 20;
  double noise_sd = 0.1;

  CorruptionMode corruption_mode = CorruptionMode::None;
  long corruption_k = 0;

  long horizon = 0;
  std::vector<uint64_t> seeds;
  std::string out_dir = "results";
  long trace_stride = 0;  // 0 = about 1000 trace points
  bool track_potential = false;
  bool record_rounds = false;
  bool svg = true;

  DetectorConfig detector;
  DiagnosticsConfig diagnostics;
  std::vector<PolicySpecEntry> policies;  // file order

  long resolved_trace_stride() const;
  long resolved_detect_every() const;
  double resolved_lambda_x() const;
  double resolved_sigma() const;
};

ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace rclub
