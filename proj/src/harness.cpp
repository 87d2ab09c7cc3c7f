#include "rclub/harness.hpp"

#include <chrono>
#include <cmath>

namespace rclub {

namespace {

struct PolicyRuntime {
  ResolvedPolicy resolved;
  PolicyState state;
  CorruptionState corruption;
  std::vector<UserNonRobustState> companions;  // clustered kinds
  std::vector<SpdState> potential_gram;        // per true cluster
  double cum_regret = 0.0;
};

double detect_delta(const ExperimentConfig& cfg, const ResolvedPolicy& p) {
  return cfg.detector.delta >= 0.0 ? cfg.detector.delta : p.delta;
}

double gcud_rho(const ExperimentConfig& cfg, const BanditInstance& inst) {
  if (cfg.detector.gcud_fraction >= 0.0) return cfg.detector.gcud_fraction;
  return static_cast<double>(inst.corrupted.size()) /
         static_cast<double>(inst.users);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, uint64_t seed) {
  return run_experiment(cfg, seed, generate_instance(cfg.instance, seed));
}

RunResult run_experiment(const ExperimentConfig& cfg, uint64_t seed,
                         const BanditInstance& inst) {
  auto t_start = std::chrono::steady_clock::now();
  if (inst.users != cfg.instance.users || inst.dim != cfg.instance.dim)
    throw std::invalid_argument("run_experiment: instance/config mismatch");
  if (static_cast<int>(inst.arms.size()) < cfg.arms_per_round)
    throw std::invalid_argument("run_experiment: arm pool too small");

  const long horizon = cfg.horizon;
  const long stride = cfg.resolved_trace_stride();
  const long detect_every = cfg.resolved_detect_every();
  EnvStreams streams = EnvStreams::from_seed(seed);

  RunResult res;
  res.seed = seed;
  res.instance = inst;

  std::vector<PolicyRuntime> runtimes;
  runtimes.reserve(cfg.policies.size());
  for (const auto& spec : cfg.policies) {
    ResolvedPolicy resolved =
        resolve_policy(spec.kind, spec.cfg, spec.name, inst.dim, horizon);
    PolicyRuntime rt{
        .resolved = resolved,
        .state = PolicyState(resolved, inst.users, inst.dim),
        .corruption = {.mode = cfg.corruption_mode,
                       .window = cfg.corruption_k,
                       .enabled = cfg.corruption_mode != CorruptionMode::None},
    };
    if (kind_is_clustered(spec.kind)) {
      rt.companions.reserve(inst.users);
      for (int u = 0; u < inst.users; ++u)
        rt.companions.emplace_back(inst.dim, rt.resolved.lambda);
    }
    if (cfg.track_potential && spec.kind != PolicyKind::Oracle) {
      rt.potential_gram.reserve(inst.clusters);
      for (int j = 0; j < inst.clusters; ++j)
        rt.potential_gram.emplace_back(inst.dim, rt.resolved.lambda);
    }
    runtimes.push_back(std::move(rt));
  }

  res.policies.resize(runtimes.size());
  for (size_t p = 0; p < runtimes.size(); ++p) {
    res.policies[p].name = runtimes[p].resolved.name;
    res.policies[p].kind = runtimes[p].resolved.kind;
    if (cfg.track_potential &&
        runtimes[p].resolved.kind != PolicyKind::Oracle) {
      res.policies[p].potential.enabled = true;
      res.policies[p].potential.sums.assign(inst.clusters, 0.0);
      res.policies[p].potential.bound =
          2.0 * inst.dim *
          std::log(1.0 + static_cast<double>(horizon) /
                             (runtimes[p].resolved.lambda * inst.dim));
    }
  }

  std::vector<char> labels(inst.users, 0);
  for (int u : inst.corrupted) labels[u] = 1;
  bool auc_defined =
      !inst.corrupted.empty() &&
      static_cast<int>(inst.corrupted.size()) < inst.users;

  for (long t = 1; t <= horizon; ++t) {
    RoundDraw draw = sample_round(inst, streams, t, cfg.arms_per_round);
    const Vector& theta_u = inst.theta[inst.assign[draw.user]];

    int opt_pos = 0;
    double opt_val = -1e300;
    for (size_t i = 0; i < draw.arm_set.size(); ++i) {
      double v = dot(inst.arms[draw.arm_set[i]], theta_u);
      if (v > opt_val) {
        opt_val = v;
        opt_pos = static_cast<int>(i);
      }
    }

    for (size_t p = 0; p < runtimes.size(); ++p) {
      PolicyRuntime& rt = runtimes[p];
      PolicyRunResult& out = res.policies[p];

      if (rt.resolved.kind == PolicyKind::Oracle) {
        if (cfg.record_rounds) {
          out.choices.push_back(draw.arm_set[opt_pos]);
          out.corruption_trace.push_back(0.0);
        }
        continue;  // zero regret, no model to update
      }

      int pos = rt.state.select_arm(draw.user, draw.arm_set, inst.arms, t);
      int arm_id = draw.arm_set[pos];
      const Vector& x = inst.arms[arm_id];

      Rng noise_rng(Rng::derive(streams.noise, static_cast<uint64_t>(t)));
      RewardDraw rd =
          realize_reward(inst, rt.corruption, draw, arm_id, cfg.noise_sd,
                         noise_rng);

      if (out.potential.enabled) {
        int j = inst.assign[draw.user];
        double r = rt.potential_gram[j].mahalanobis(x);
        out.potential.sums[j] += std::min(r * r, 1.0);
        rt.potential_gram[j].rank1_update(x, 1.0);
      }

      rt.state.update(draw.user, x, rd.reward, t);
      if (!rt.companions.empty())
        nonrobust_update(rt.companions[draw.user], x, rd.reward);

      rt.cum_regret += opt_val - dot(x, theta_u);
      if (cfg.record_rounds) {
        out.choices.push_back(arm_id);
        out.corruption_trace.push_back(std::abs(rd.corruption));
      }
    }

    if (t % stride == 0 || t == horizon) {
      if (res.trace_ts.empty() || res.trace_ts.back() != t) {
        res.trace_ts.push_back(t);
        for (size_t p = 0; p < runtimes.size(); ++p)
          res.policies[p].regret_trace.push_back(runtimes[p].cum_regret);
      }
    }

    if (t % detect_every == 0 || t == horizon) {
      for (size_t p = 0; p < runtimes.size(); ++p) {
        PolicyRuntime& rt = runtimes[p];
        if (!kind_is_clustered(rt.resolved.kind)) continue;
        DetectionOutcome oc;
        oc.t = t;
        oc.occud = occud_scan(rt.state, rt.companions, t,
                              detect_delta(cfg, rt.resolved));
        oc.gcud = gcud_scan(rt.state, gcud_rho(cfg, inst), t);
        if (auc_defined) {
          std::vector<double> s_occ(inst.users), s_gc(inst.users);
          for (int u = 0; u < inst.users; ++u) {
            s_occ[u] = oc.occud.users[u].score;
            s_gc[u] = oc.gcud.users[u].score;
          }
          oc.occud_auc = auc(s_occ, labels);
          oc.gcud_auc = auc(s_gc, labels);
        } else {
          oc.occud_auc = std::nan("");
          oc.gcud_auc = std::nan("");
        }
        res.policies[p].detections.push_back(std::move(oc));
      }
    }
  }

  for (size_t p = 0; p < runtimes.size(); ++p) {
    PolicyRuntime& rt = runtimes[p];
    PolicyRunResult& out = res.policies[p];
    out.final_regret = rt.cum_regret;
    out.realized_budget = rt.corruption.realized_budget;
    if (rt.resolved.kind == PolicyKind::Oracle) continue;
    if (rt.state.clustered()) out.final_components = rt.state.graph().components();
    int n_models = kind_is_shared(rt.resolved.kind) ? 1 : inst.users;
    out.final_theta.reserve(n_models);
    for (int m = 0; m < n_models; ++m)
      out.final_theta.push_back(rt.state.state_for(m).theta_hat);
    if (out.potential.enabled)
      for (double s : out.potential.sums)
        if (s > out.potential.bound) ++out.potential.violations;
  }

  res.diagnostics.lambda_x = cfg.resolved_lambda_x();
  res.diagnostics.sigma = cfg.resolved_sigma();
  res.diagnostics.lambda_tilde_x = lambda_tilde(
      res.diagnostics.lambda_x, res.diagnostics.sigma, cfg.arms_per_round);
  for (const auto& rt : runtimes) {
    if (!kind_is_clustered(rt.resolved.kind) || !inst.gamma) continue;
    double delta = rt.resolved.delta;
    if (!(delta > 0.0) || !(delta < 1.0 / 3.0)) continue;
    res.diagnostics.t0.push_back(
        {rt.resolved.name,
         t0_bound(inst.users, inst.dim, *inst.gamma, rt.resolved.alpha,
                  rt.resolved.lambda, res.diagnostics.lambda_tilde_x,
                  rt.resolved.cbar, delta)});
  }

  res.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t_start)
                    .count();
  return res;
}

}  // namespace rclub
