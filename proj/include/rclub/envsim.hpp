#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rclub/numkit.hpp"
#include "rclub/rng.hpp"

namespace rclub {

enum class CorruptionMode { None, FlipPrefix };

struct InstanceConfig {
  int users = 0;
  int clusters = 0;
  int dim = 0;
  int arm_pool = 0;
  double corrupted_fraction = 0.0;
};

struct BanditInstance {
  int users = 0;
  int clusters = 0;
  int dim = 0;
  std::vector<Vector> theta;    // one unit vector per cluster
  std::vector<int> assign;      // user -> cluster
  std::vector<int> corrupted;   // sorted user ids
  std::vector<Vector> arms;     // pool, every norm <= 1
  std::optional<double> gamma;  // min pairwise ||theta_j - theta_k||, absent for 1 cluster
  uint64_t seed = 0;

  bool is_corrupted(int user) const;
};

// Adversary bookkeeping for one reward stream. With FlipPrefix, corrupted
// users' rewards are sign-flipped for the first `window` rounds; the applied
// magnitudes accumulate into realized_budget.
struct CorruptionState {
  CorruptionMode mode = CorruptionMode::None;
  long window = 0;
  bool enabled = false;
  double realized_budget = 0.0;
};

struct RoundDraw {
  long t = 0;
  int user = 0;
  std::vector<int> arm_set;  // distinct indices into the arm pool
};

struct RewardDraw {
  double reward = 0.0;
  double expected = 0.0;    // x^T theta for the served user
  double noise = 0.0;
  double corruption = 0.0;  // additive term c_t, zero when unperturbed
};

// Unit vector built as: d-1 iid standard normal entries normalized to unit
// length, a constant 1 appended, everything divided by sqrt(2).
Vector random_unit_feature(Rng& rng, int dim);

BanditInstance generate_instance(const InstanceConfig& cfg, uint64_t seed);

// Per-purpose stream keys; each round derives its own generator from
// (key, t), so draws are a pure function of (seed, t).
struct EnvStreams {
  uint64_t arrivals = 0;
  uint64_t arms = 0;
  uint64_t noise = 0;

  static EnvStreams from_seed(uint64_t seed);
};

RoundDraw sample_round(const BanditInstance& inst, const EnvStreams& streams,
                       long t, int arms_per_round);

RewardDraw realize_reward(const BanditInstance& inst, CorruptionState& cs,
                          const RoundDraw& draw, int arm_id, double noise_sd,
                          Rng& noise_rng);

// Effective arm-set spectral floor: integral from 0 to lambda_x of
// (1 - exp(-(lambda_x - x)^2 / (2 sigma^2)))^K dx, by composite Simpson
// quadrature with interval doubling until successive estimates agree to 1e-9.
double lambda_tilde(double lambda_x, double sigma, int arms_per_round);

// Sufficient-exploration horizon diagnostic. delta must lie in (0, 1/3);
// corruption_total may be zero (its term vanishes). Never used to gate runs.
double t0_bound(int users, int dim, double gamma, double alpha, double lambda,
                double lambda_tilde_x, double corruption_total, double delta);

std::string instance_to_json(const BanditInstance& inst);
BanditInstance instance_from_json(const std::string& text);
void save_instance(const BanditInstance& inst, const std::string& path);
BanditInstance load_instance(const std::string& path);

}  // namespace rclub
