#include "rclub/envsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace rclub {

bool BanditInstance::is_corrupted(int user) const {
  return std::binary_search(corrupted.begin(), corrupted.end(), user);
}

Vector random_unit_feature(Rng& rng, int dim) {
  Vector x(dim);
  double n2 = 0.0;
  for (int i = 0; i < dim - 1; ++i) {
    x[i] = rng.next_normal();
    n2 += x[i] * x[i];
  }
  double n = std::sqrt(n2);
  // A zero draw has probability zero; fall back to a fixed direction anyway.
  if (n == 0.0) {
    x[0] = 1.0;
    n = 1.0;
  }
  const double root_half = std::sqrt(0.5);
  for (int i = 0; i < dim - 1; ++i) x[i] = x[i] / n * root_half;
  x[dim - 1] = root_half;
  return x;
}

BanditInstance generate_instance(const InstanceConfig& cfg, uint64_t seed) {
  if (cfg.users < 1) throw std::invalid_argument("instance: users must be >= 1");
  if (cfg.clusters < 1 || cfg.clusters > cfg.users)
    throw std::invalid_argument("instance: need 1 <= clusters <= users");
  if (cfg.dim < 2) throw std::invalid_argument("instance: dim must be >= 2");
  if (cfg.arm_pool < 1)
    throw std::invalid_argument("instance: arm pool must be >= 1");
  if (cfg.corrupted_fraction < 0.0 || cfg.corrupted_fraction >= 1.0)
    throw std::invalid_argument("instance: corrupted fraction outside [0, 1)");

  BanditInstance inst;
  inst.users = cfg.users;
  inst.clusters = cfg.clusters;
  inst.dim = cfg.dim;
  inst.seed = seed;

  Rng theta_rng(Rng::derive(seed, "instance/theta"));
  inst.theta.reserve(cfg.clusters);
  for (int j = 0; j < cfg.clusters; ++j)
    inst.theta.push_back(random_unit_feature(theta_rng, cfg.dim));

  inst.assign.resize(cfg.users);
  for (int i = 0; i < cfg.users; ++i) inst.assign[i] = i % cfg.clusters;

  int n_corr = static_cast<int>(
      std::lround(cfg.corrupted_fraction * cfg.users));
  if (n_corr > 0) {
    Rng corr_rng(Rng::derive(seed, "instance/corrupted"));
    inst.corrupted = corr_rng.sample_without_replacement(cfg.users, n_corr);
    std::sort(inst.corrupted.begin(), inst.corrupted.end());
  }

  Rng arm_rng(Rng::derive(seed, "instance/arms"));
  inst.arms.reserve(cfg.arm_pool);
  for (int a = 0; a < cfg.arm_pool; ++a)
    inst.arms.push_back(random_unit_feature(arm_rng, cfg.dim));

  if (cfg.clusters > 1) {
    double g = std::numeric_limits<double>::infinity();
    for (int j = 0; j < cfg.clusters; ++j)
      for (int k = j + 1; k < cfg.clusters; ++k) {
        double s = 0.0;
        for (int i = 0; i < cfg.dim; ++i) {
          double d = inst.theta[j][i] - inst.theta[k][i];
          s += d * d;
        }
        g = std::min(g, std::sqrt(s));
      }
    inst.gamma = g;
  }
  return inst;
}

EnvStreams EnvStreams::from_seed(uint64_t seed) {
  EnvStreams s;
  s.arrivals = Rng::derive(seed, "env/arrivals");
  s.arms = Rng::derive(seed, "env/arms");
  s.noise = Rng::derive(seed, "env/noise");
  return s;
}

RoundDraw sample_round(const BanditInstance& inst, const EnvStreams& streams,
                       long t, int arms_per_round) {
  if (arms_per_round < 1 ||
      arms_per_round > static_cast<int>(inst.arms.size()))
    throw std::invalid_argument("sample_round: bad arm set size");
  RoundDraw d;
  d.t = t;
  Rng user_rng(Rng::derive(streams.arrivals, static_cast<uint64_t>(t)));
  d.user = user_rng.next_int(inst.users);
  Rng arm_rng(Rng::derive(streams.arms, static_cast<uint64_t>(t)));
  d.arm_set = arm_rng.sample_without_replacement(
      static_cast<int>(inst.arms.size()), arms_per_round);
  return d;
}

RewardDraw realize_reward(const BanditInstance& inst, CorruptionState& cs,
                          const RoundDraw& draw, int arm_id, double noise_sd,
                          Rng& noise_rng) {
  RewardDraw r;
  r.expected = dot(inst.arms[arm_id], inst.theta[inst.assign[draw.user]]);
  r.noise = noise_sd * noise_rng.next_normal();
  if (cs.enabled && cs.mode == CorruptionMode::FlipPrefix &&
      draw.t <= cs.window && inst.is_corrupted(draw.user)) {
    // Flip the expected reward: r = -x^T theta + eta.
    r.corruption = -2.0 * r.expected;
    cs.realized_budget += std::abs(r.corruption);
  }
  r.reward = r.expected + r.noise + r.corruption;
  return r;
}

double lambda_tilde(double lambda_x, double sigma, int arms_per_round) {
  if (!(lambda_x > 0.0))
    throw std::invalid_argument("lambda_tilde: lambda_x must be > 0");
  if (!(sigma > 0.0))
    throw std::invalid_argument("lambda_tilde: sigma must be > 0");
  if (arms_per_round < 1)
    throw std::invalid_argument("lambda_tilde: arm count must be >= 1");

  double k = static_cast<double>(arms_per_round);
  auto f = [&](double x) {
    double y = lambda_x - x;
    double e = -y * y / (2.0 * sigma * sigma);
    // (1 - exp(e))^k through logs so huge k cannot lose the tail.
    double base = -std::expm1(e);
    if (base <= 0.0) return 0.0;
    return std::exp(k * std::log(base));
  };

  auto simpson = [&](long n) {
    double h = lambda_x / static_cast<double>(n);
    double s = f(0.0) + f(lambda_x);
    for (long i = 1; i < n; ++i)
      s += f(h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
  };

  long n = 64;
  double prev = simpson(n);
  for (; n <= (1L << 22); ) {
    n *= 2;
    double cur = simpson(n);
    if (std::abs(cur - prev) < 1e-9) return cur;
    prev = cur;
  }
  return prev;
}

double t0_bound(int users, int dim, double gamma, double alpha, double lambda,
                double lambda_tilde_x, double corruption_total, double delta) {
  if (users < 1 || dim < 1)
    throw std::invalid_argument("t0_bound: users and dim must be >= 1");
  if (!(gamma > 0.0) || !(alpha > 0.0) || !(lambda > 0.0) ||
      !(lambda_tilde_x > 0.0))
    throw std::invalid_argument("t0_bound: parameters must be positive");
  if (corruption_total < 0.0)
    throw std::invalid_argument("t0_bound: negative corruption total");
  if (!(delta > 0.0) || !(delta < 1.0 / 3.0))
    throw std::invalid_argument("t0_bound: delta must lie in (0, 1/3)");

  double u = static_cast<double>(users);
  double d = static_cast<double>(dim);
  double g2 = gamma * gamma;
  double lt = lambda_tilde_x;
  double rl = std::sqrt(lambda);

  double t1 = 288.0 * d / (g2 * alpha * rl * lt) * std::log(u / delta);
  double t2 = 16.0 / (lt * lt) * std::log(8.0 * d / (lt * lt * delta));
  double t3 = 72.0 * rl / (alpha * g2 * lt);
  double t4 = corruption_total == 0.0
                  ? 0.0
                  : 72.0 * alpha * corruption_total * corruption_total /
                        (g2 * rl * lt);
  double m = std::max(std::max(t1, t2), std::max(t3, t4));
  return 16.0 * u * std::log(u / delta) + 4.0 * u * m;
}

using nlohmann::ordered_json;

std::string instance_to_json(const BanditInstance& inst) {
  ordered_json j;
  j["users"] = inst.users;
  j["clusters"] = inst.clusters;
  j["dim"] = inst.dim;
  j["seed"] = inst.seed;
  j["theta"] = inst.theta;
  j["assign"] = inst.assign;
  j["corrupted"] = inst.corrupted;
  j["arms"] = inst.arms;
  if (inst.gamma)
    j["gamma"] = *inst.gamma;
  else
    j["gamma"] = nullptr;
  return j.dump(2) + "\n";
}

BanditInstance instance_from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  BanditInstance inst;
  inst.users = j.at("users").get<int>();
  inst.clusters = j.at("clusters").get<int>();
  inst.dim = j.at("dim").get<int>();
  inst.seed = j.at("seed").get<uint64_t>();
  inst.theta = j.at("theta").get<std::vector<Vector>>();
  inst.assign = j.at("assign").get<std::vector<int>>();
  inst.corrupted = j.at("corrupted").get<std::vector<int>>();
  inst.arms = j.at("arms").get<std::vector<Vector>>();
  if (!j.at("gamma").is_null()) inst.gamma = j.at("gamma").get<double>();

  if (static_cast<int>(inst.theta.size()) != inst.clusters ||
      static_cast<int>(inst.assign.size()) != inst.users)
    throw std::invalid_argument("instance json: inconsistent dimensions");
  for (const auto& th : inst.theta) {
    if (static_cast<int>(th.size()) != inst.dim)
      throw std::invalid_argument("instance json: bad theta row length");
    if (std::abs(norm2(th) - 1.0) > 1e-9)
      throw std::invalid_argument("instance json: theta row not unit norm");
  }
  for (const auto& x : inst.arms) {
    if (static_cast<int>(x.size()) != inst.dim)
      throw std::invalid_argument("instance json: bad arm row length");
    if (norm2(x) > 1.0 + 1e-9)
      throw std::invalid_argument("instance json: arm norm above 1");
  }
  for (int c : inst.assign)
    if (c < 0 || c >= inst.clusters)
      throw std::invalid_argument("instance json: assignment out of range");
  for (int ucorr : inst.corrupted)
    if (ucorr < 0 || ucorr >= inst.users)
      throw std::invalid_argument("instance json: corrupted id out of range");
  if (!std::is_sorted(inst.corrupted.begin(), inst.corrupted.end()))
    std::sort(inst.corrupted.begin(), inst.corrupted.end());
  return inst;
}

void save_instance(const BanditInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file: " + path);
  out << instance_to_json(inst);
}

BanditInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read instance file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return instance_from_json(ss.str());
}

}  // namespace rclub
