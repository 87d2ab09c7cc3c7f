#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "rclub/harness.hpp"

using namespace rclub;

namespace {

ExperimentConfig base_config() {
  ExperimentConfig cfg;
  cfg.instance = {6, 2, 3, 15, 0.0};
  cfg.arms_per_round = 5;
  cfg.noise_sd = 0.1;
  cfg.horizon = 200;
  cfg.seeds = {1};
  cfg.trace_stride = 20;
  return cfg;
}

PolicySpecEntry spec(const std::string& name, PolicyKind kind,
                     PolicyConfig cfg = {}) {
  return {name, kind, cfg};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("trace schedule and regret invariants") {
  ExperimentConfig cfg = base_config();
  cfg.policies = {spec("robust", PolicyKind::RclubWcu),
                  spec("base", PolicyKind::LinUcbInd),
                  spec("best", PolicyKind::Oracle)};
  RunResult res = run_experiment(cfg, 1);

  std::vector<long> want_ts;
  for (long t = 20; t <= 200; t += 20) want_ts.push_back(t);
  CHECK(res.trace_ts == want_ts);
  CHECK(res.seed == 1);

  REQUIRE(res.policies.size() == 3);
  for (const auto& p : res.policies) {
    REQUIRE(p.regret_trace.size() == want_ts.size());
    double prev = 0.0;
    for (double r : p.regret_trace) {
      CHECK(r >= prev - 1e-12);  // cumulative regret cannot shrink
      CHECK(r >= 0.0);
      prev = r;
    }
    CHECK(p.final_regret == p.regret_trace.back());
    CHECK(p.final_regret < 2.0 * cfg.horizon);
  }
  // The oracle accrues exactly zero regret.
  CHECK(res.policies[2].kind == PolicyKind::Oracle);
  CHECK(res.policies[2].final_regret == 0.0);
  // Learning policies must lose something on a noisy stream.
  CHECK(res.policies[0].final_regret > 0.0);

  // Horizon not divisible by the stride: the last point is still recorded.
  cfg.horizon = 190;
  RunResult odd = run_experiment(cfg, 1);
  CHECK(odd.trace_ts.back() == 190);
  CHECK(odd.trace_ts[odd.trace_ts.size() - 2] == 180);
}

TEST_CASE("runs are a pure function of the seed") {
  ExperimentConfig cfg = base_config();
  cfg.instance.corrupted_fraction = 0.34;
  cfg.corruption_mode = CorruptionMode::FlipPrefix;
  cfg.corruption_k = 120;
  cfg.policies = {spec("robust", PolicyKind::RclubWcu),
                  spec("plain", PolicyKind::Club)};
  RunResult a = run_experiment(cfg, 9);
  RunResult b = run_experiment(cfg, 9);
  CHECK(a.instance.theta == b.instance.theta);
  CHECK(a.instance.corrupted == b.instance.corrupted);
  for (size_t p = 0; p < a.policies.size(); ++p) {
    CHECK(a.policies[p].regret_trace == b.policies[p].regret_trace);
    CHECK(a.policies[p].final_theta == b.policies[p].final_theta);
    CHECK(a.policies[p].realized_budget == b.policies[p].realized_budget);
    REQUIRE(a.policies[p].detections.size() == b.policies[p].detections.size());
    for (size_t k = 0; k < a.policies[p].detections.size(); ++k) {
      CHECK(a.policies[p].detections[k].occud.detected ==
            b.policies[p].detections[k].occud.detected);
      CHECK(a.policies[p].detections[k].occud_auc ==
            b.policies[p].detections[k].occud_auc);
    }
  }

  RunResult c = run_experiment(cfg, 10);
  CHECK(a.policies[0].regret_trace != c.policies[0].regret_trace);
}

TEST_CASE("every policy faces the identical first round") {
  ExperimentConfig cfg = base_config();
  cfg.record_rounds = true;
  cfg.policies = {spec("a", PolicyKind::RclubWcu),
                  spec("b", PolicyKind::Club),
                  spec("c", PolicyKind::LinUcb),
                  spec("d", PolicyKind::CwOfulInd)};
  RunResult res = run_experiment(cfg, 3);
  for (const auto& p : res.policies) {
    REQUIRE(p.choices.size() == static_cast<size_t>(cfg.horizon));
    for (int arm : p.choices) {
      CHECK(arm >= 0);
      CHECK(arm < 15);
    }
  }
  // Fresh models share lambda, so round one is the same argmax everywhere.
  for (size_t p = 1; p < res.policies.size(); ++p)
    CHECK(res.policies[p].choices[0] == res.policies[0].choices[0]);
}

TEST_CASE("corruption budget equals the per-round trail") {
  ExperimentConfig cfg = base_config();
  cfg.instance.corrupted_fraction = 0.34;  // 2 of 6 users
  cfg.corruption_mode = CorruptionMode::FlipPrefix;
  cfg.corruption_k = 80;
  cfg.record_rounds = true;
  cfg.policies = {spec("robust", PolicyKind::RclubWcu),
                  spec("base", PolicyKind::LinUcb),
                  spec("best", PolicyKind::Oracle)};
  RunResult res = run_experiment(cfg, 5);

  REQUIRE(res.instance.corrupted.size() == 2);
  for (const auto& p : res.policies) {
    double sum = 0.0;
    for (double c : p.corruption_trace) sum += c;
    CHECK(sum == p.realized_budget);  // same fold, bit-for-bit
    if (p.kind == PolicyKind::Oracle) {
      CHECK(p.realized_budget == 0.0);
    } else {
      CHECK(p.realized_budget > 0.0);
    }
  }

  // After the window closes nothing further accrues.
  const auto& trace = res.policies[0].corruption_trace;
  for (long t = cfg.corruption_k; t < cfg.horizon; ++t)
    CHECK(trace[static_cast<size_t>(t)] == 0.0);

  cfg.corruption_mode = CorruptionMode::None;
  RunResult clean = run_experiment(cfg, 5);
  CHECK(clean.policies[0].realized_budget == 0.0);
}

TEST_CASE("detection runs on schedule for clustered kinds only") {
  ExperimentConfig cfg = base_config();
  cfg.instance.corrupted_fraction = 0.34;
  cfg.corruption_mode = CorruptionMode::FlipPrefix;
  cfg.corruption_k = 100;
  cfg.horizon = 90;
  cfg.detector.detect_every = 25;
  cfg.policies = {spec("robust", PolicyKind::RclubWcu),
                  spec("base", PolicyKind::LinUcbInd)};
  RunResult res = run_experiment(cfg, 2);

  const auto& dets = res.policies[0].detections;
  REQUIRE(dets.size() == 4);
  CHECK(dets[0].t == 25);
  CHECK(dets[1].t == 50);
  CHECK(dets[2].t == 75);
  CHECK(dets[3].t == 90);  // horizon checkpoint
  CHECK(res.policies[1].detections.empty());

  std::vector<char> labels(res.instance.users, 0);
  for (int u : res.instance.corrupted) labels[u] = 1;
  for (const auto& d : dets) {
    CHECK(d.occud.algorithm == "occud");
    CHECK(d.gcud.algorithm == "gcud");
    CHECK(d.occud.users.size() == static_cast<size_t>(res.instance.users));
    // Reported AUC must match a recomputation from the reported scores.
    std::vector<double> s(res.instance.users);
    for (int u = 0; u < res.instance.users; ++u) s[u] = d.occud.users[u].score;
    CHECK(d.occud_auc == auc(s, labels));
    for (int u = 0; u < res.instance.users; ++u) s[u] = d.gcud.users[u].score;
    CHECK(d.gcud_auc == auc(s, labels));
    // The gap quota matches the corrupted fraction by default.
    CHECK(d.gcud.detected.size() >= res.instance.corrupted.size());
  }
}

TEST_CASE("auc is undefined without both classes") {
  ExperimentConfig cfg = base_config();  // nobody corrupted
  cfg.policies = {spec("robust", PolicyKind::RclubWcu)};
  RunResult res = run_experiment(cfg, 4);
  REQUIRE(!res.policies[0].detections.empty());
  for (const auto& d : res.policies[0].detections) {
    CHECK(std::isnan(d.occud_auc));
    CHECK(std::isnan(d.gcud_auc));
    CHECK(d.gcud.detected.empty());  // default quota is the corrupted share: 0
  }
}

TEST_CASE("final state shapes") {
  ExperimentConfig cfg = base_config();
  cfg.policies = {spec("robust", PolicyKind::Club),
                  spec("pool", PolicyKind::LinUcb),
                  spec("solo", PolicyKind::LinUcbInd),
                  spec("best", PolicyKind::Oracle)};
  RunResult res = run_experiment(cfg, 6);

  CHECK(res.policies[0].final_theta.size() == 6);
  long long members = 0;
  for (const auto& comp : res.policies[0].final_components)
    members += static_cast<long long>(comp.size());
  CHECK(members == 6);
  CHECK(res.policies[1].final_theta.size() == 1);  // shared model
  CHECK(res.policies[1].final_components.empty());
  CHECK(res.policies[2].final_theta.size() == 6);
  CHECK(res.policies[3].final_theta.empty());  // oracle carries no model
}

TEST_CASE("potential audit stays under the deterministic bound") {
  ExperimentConfig cfg = base_config();
  cfg.track_potential = true;
  cfg.horizon = 400;
  cfg.policies = {spec("robust", PolicyKind::RclubWcu),
                  spec("plain", PolicyKind::Club),
                  spec("best", PolicyKind::Oracle)};
  RunResult res = run_experiment(cfg, 11);

  for (size_t p = 0; p < 2; ++p) {
    const PotentialTrack& pot = res.policies[p].potential;
    CHECK(pot.enabled);
    REQUIRE(pot.sums.size() == 2);  // one per true cluster
    double want_bound =
        2.0 * 3 * std::log(1.0 + 400.0 / (1.0 * 3));
    CHECK(pot.bound == doctest::Approx(want_bound).epsilon(1e-15));
    for (double s : pot.sums) {
      CHECK(s > 0.0);
      CHECK(s <= pot.bound);
    }
    CHECK(pot.violations == 0);
  }
  CHECK_FALSE(res.policies[2].potential.enabled);

  ExperimentConfig off = base_config();
  off.policies = {spec("robust", PolicyKind::RclubWcu)};
  CHECK_FALSE(run_experiment(off, 11).policies[0].potential.enabled);
}

TEST_CASE("diagnostics echo the derived quantities") {
  ExperimentConfig cfg = base_config();
  cfg.policies = {spec("robust", PolicyKind::RclubWcu),
                  spec("plain", PolicyKind::Club),
                  spec("solo", PolicyKind::LinUcbInd)};
  RunResult res = run_experiment(cfg, 13);

  CHECK(res.diagnostics.lambda_x == 0.25);  // 1 / (2 (3 - 1))
  CHECK(res.diagnostics.sigma == 0.125);
  CHECK(res.diagnostics.lambda_tilde_x ==
        lambda_tilde(0.25, 0.125, cfg.arms_per_round));

  // One exploration-horizon entry per clustered policy, recomputable.
  REQUIRE(res.diagnostics.t0.size() == 2);
  CHECK(res.diagnostics.t0[0].policy == "robust");
  CHECK(res.diagnostics.t0[1].policy == "plain");
  REQUIRE(res.instance.gamma.has_value());
  ResolvedPolicy rp = resolve_policy(PolicyKind::RclubWcu, {}, "robust", 3,
                                     cfg.horizon);
  double want =
      t0_bound(6, 3, *res.instance.gamma, rp.alpha, rp.lambda,
               res.diagnostics.lambda_tilde_x, rp.cbar, rp.delta);
  CHECK(res.diagnostics.t0[0].t0 == want);

  // Single cluster: no gap, no t0 entries.
  ExperimentConfig flat = base_config();
  flat.instance.clusters = 1;
  flat.policies = {spec("robust", PolicyKind::RclubWcu)};
  CHECK(run_experiment(flat, 13).diagnostics.t0.empty());
}

TEST_CASE("explicit instance overload") {
  ExperimentConfig cfg = base_config();
  cfg.policies = {spec("plain", PolicyKind::Club)};
  BanditInstance inst = generate_instance(cfg.instance, 999);
  RunResult res = run_experiment(cfg, 1, inst);
  CHECK(res.instance.theta == inst.theta);
  CHECK(res.seed == 1);  // stream seed, not the instance's

  BanditInstance wrong = generate_instance({4, 2, 3, 15, 0.0}, 1);
  CHECK_THROWS_AS(run_experiment(cfg, 1, wrong), std::invalid_argument);
  BanditInstance wrong_dim = generate_instance({6, 2, 4, 15, 0.0}, 1);
  CHECK_THROWS_AS(run_experiment(cfg, 1, wrong_dim), std::invalid_argument);
  ExperimentConfig starved = cfg;
  starved.arms_per_round = 16;
  CHECK_THROWS_AS(run_experiment(starved, 1, inst), std::invalid_argument);
}

TEST_CASE("degenerate setups collapse across kinds end to end") {
  // One user: clustering and sharing are both vacuous.
  ExperimentConfig cfg;
  cfg.instance = {1, 1, 3, 12, 0.0};
  cfg.arms_per_round = 4;
  cfg.noise_sd = 0.2;
  cfg.horizon = 150;
  cfg.seeds = {1};
  cfg.trace_stride = 10;
  PolicyConfig knobs;
  knobs.alpha = 0.4;
  knobs.cbar = 2.0;
  cfg.policies = {spec("rw", PolicyKind::RclubWcu, knobs),
                  spec("cw", PolicyKind::CwOful, knobs),
                  spec("cwi", PolicyKind::CwOfulInd, knobs),
                  spec("cl", PolicyKind::Club),
                  spec("lu", PolicyKind::LinUcb),
                  spec("li", PolicyKind::LinUcbInd)};
  RunResult res = run_experiment(cfg, 21);
  CHECK(res.policies[0].regret_trace == res.policies[1].regret_trace);
  CHECK(res.policies[0].regret_trace == res.policies[2].regret_trace);
  CHECK(res.policies[3].regret_trace == res.policies[4].regret_trace);
  CHECK(res.policies[3].regret_trace == res.policies[5].regret_trace);
  // Weighted and unweighted do differ on this noisy stream.
  CHECK(res.policies[0].regret_trace != res.policies[3].regret_trace);

  // Zero assumed budget: the robust policy walks the plain one's path.
  ExperimentConfig zb = base_config();
  PolicyConfig zero;
  zero.cbar = 0.0;
  zb.policies = {spec("rw", PolicyKind::RclubWcu, zero),
                 spec("cl", PolicyKind::Club)};
  RunResult rz = run_experiment(zb, 8);
  CHECK(rz.policies[0].regret_trace == rz.policies[1].regret_trace);
  CHECK(rz.policies[0].final_theta == rz.policies[1].final_theta);
}

TEST_CASE("double formatting round trips") {
  for (double v : {0.1, -0.25, 1.0 / 3.0, 1e-300, 1e300, 123456.789,
                   0.30000000000000004, -0.0, 2.0}) {
    std::string s = format_double(v);
    double back = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(ec == std::errc());
    CHECK(p == s.data() + s.size());
    CHECK(back == v);
  }
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("emitted outputs are byte stable and complete") {
  namespace fs = std::filesystem;
  ExperimentConfig cfg = base_config();
  cfg.instance.corrupted_fraction = 0.34;
  cfg.corruption_mode = CorruptionMode::FlipPrefix;
  cfg.corruption_k = 100;
  cfg.track_potential = true;
  cfg.policies = {spec("robust", PolicyKind::RclubWcu),
                  spec("plain", PolicyKind::Club),
                  spec("solo", PolicyKind::LinUcbInd)};
  RunResult res = run_experiment(cfg, 17);

  fs::path dir1 = "/tmp/rclub_emit_a";
  fs::path dir2 = "/tmp/rclub_emit_b";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  emit_outputs(res, cfg, dir1.string());
  emit_outputs(res, cfg, dir2.string());

  for (const char* name :
       {"regret.csv", "detection.csv", "detected_users.json", "run_meta.json",
        "regret.svg"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(dir1 / name));
    CHECK(slurp((dir1 / name).string()) == slurp((dir2 / name).string()));
  }

  std::string regret = slurp((dir1 / "regret.csv").string());
  CHECK(regret.rfind("t,robust,plain,solo\n", 0) == 0);
  size_t lines = 0;
  for (char c : regret)
    if (c == '\n') ++lines;
  CHECK(lines == res.trace_ts.size() + 1);

  // Two clustered policies: detector labels carry the policy name.
  std::string detection = slurp((dir1 / "detection.csv").string());
  CHECK(detection.find("occud:robust") != std::string::npos);
  CHECK(detection.find("gcud:plain") != std::string::npos);

  std::string meta = slurp((dir1 / "run_meta.json").string());
  CHECK(meta.find("\"seed\"") != std::string::npos);
  CHECK(meta.find("wall") == std::string::npos);  // timing never serialized

  // SVG can be turned off.
  ExperimentConfig no_svg = cfg;
  no_svg.svg = false;
  fs::path dir3 = "/tmp/rclub_emit_c";
  fs::remove_all(dir3);
  emit_outputs(res, no_svg, dir3.string());
  CHECK_FALSE(fs::exists(dir3 / "regret.svg"));
  CHECK(fs::exists(dir3 / "regret.csv"));

  fs::remove_all(dir1);
  fs::remove_all(dir2);
  fs::remove_all(dir3);
}

TEST_CASE("single clustered policy drops the detector suffix") {
  namespace fs = std::filesystem;
  ExperimentConfig cfg = base_config();
  cfg.instance.corrupted_fraction = 0.34;
  cfg.corruption_mode = CorruptionMode::FlipPrefix;
  cfg.corruption_k = 100;
  cfg.policies = {spec("robust", PolicyKind::RclubWcu),
                  spec("solo", PolicyKind::LinUcbInd)};
  RunResult res = run_experiment(cfg, 19);
  fs::path dir = "/tmp/rclub_emit_d";
  fs::remove_all(dir);
  emit_outputs(res, cfg, dir.string());
  std::string detection = slurp((dir / "detection.csv").string());
  CHECK(detection.find("occud,") != std::string::npos);
  CHECK(detection.find("occud:") == std::string::npos);
  fs::remove_all(dir);
}
