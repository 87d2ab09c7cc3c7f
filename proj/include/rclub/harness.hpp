#pragma once

#include <string>
#include <vector>

#include "rclub/config.hpp"
#include "rclub/detector.hpp"

namespace rclub {

struct DetectionOutcome {
  long t = 0;
  DetectionReport occud;
  DetectionReport gcud;
  // NaN when undefined (no corrupted users to rank against).
  double occud_auc = 0.0;
  double gcud_auc = 0.0;
};

// Ground-truth-cluster elliptical potential audit: per true cluster j, the
// running sum of min(||x_t||^2 in the inverse of reg*I + sum of unit outer
// products from j's rounds, 1), which must stay below 2 d log(1 + T/(reg d)).
struct PotentialTrack {
  bool enabled = false;
  std::vector<double> sums;
  double bound = 0.0;
  int violations = 0;
};

struct PolicyRunResult {
  std::string name;
  PolicyKind kind = PolicyKind::LinUcb;
  std::vector<double> regret_trace;  // cumulative, sampled at trace_ts
  double final_regret = 0.0;
  double realized_budget = 0.0;
  std::vector<DetectionOutcome> detections;  // clustered kinds only
  std::vector<int> choices;                  // arm pool ids, record_rounds only
  std::vector<double> corruption_trace;      // |c_t|, record_rounds only
  PotentialTrack potential;
  std::vector<std::vector<int>> final_components;  // clustered kinds only
  std::vector<Vector> final_theta;                 // one per model
};

struct RunDiagnostics {
  double lambda_x = 0.0;
  double sigma = 0.0;
  double lambda_tilde_x = 0.0;
  struct PolicyT0 {
    std::string policy;
    double t0 = 0.0;
  };
  std::vector<PolicyT0> t0;  // clustered policies with a defined gap
};

struct RunResult {
  uint64_t seed = 0;
  BanditInstance instance;
  std::vector<long> trace_ts;
  std::vector<PolicyRunResult> policies;
  RunDiagnostics diagnostics;
  double wall_ms = 0.0;  // never serialized; outputs stay hash-stable
};

// One full simulation: every policy sees the identical (user, arm set)
// stream and the identical per-round noise; corruption applies to each
// policy's own chosen arm. Detection scans run at every detect_every
// boundary and at the horizon.
RunResult run_experiment(const ExperimentConfig& cfg, uint64_t seed);
RunResult run_experiment(const ExperimentConfig& cfg, uint64_t seed,
                         const BanditInstance& inst);

// regret.csv, detection.csv, detected_users.json, run_meta.json and
// (optionally) regret.svg under `dir`, creating it if needed. Byte-stable
// for identical RunResults.
void emit_outputs(const RunResult& res, const ExperimentConfig& cfg,
                  const std::string& dir);

// Shortest round-trip decimal form; the one formatter all writers share.
std::string format_double(double v);

}  // namespace rclub
