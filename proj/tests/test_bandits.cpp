#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "rclub/bandits.hpp"
#include "rclub/rng.hpp"

using namespace rclub;

static ResolvedPolicy resolve(PolicyKind k, PolicyConfig cfg = {},
                              long horizon = 1000, int dim = 2) {
  return resolve_policy(k, cfg, policy_kind_name(k), dim, horizon);
}

TEST_CASE("kind names round trip") {
  for (PolicyKind k :
       {PolicyKind::RclubWcu, PolicyKind::Club, PolicyKind::LinUcb,
        PolicyKind::LinUcbInd, PolicyKind::CwOful, PolicyKind::CwOfulInd,
        PolicyKind::Oracle}) {
    auto back = policy_kind_from_name(policy_kind_name(k));
    REQUIRE(back.has_value());
    CHECK(*back == k);
  }
  CHECK_FALSE(policy_kind_from_name("ucb1").has_value());
  CHECK_FALSE(policy_kind_from_name("").has_value());

  CHECK(kind_is_clustered(PolicyKind::RclubWcu));
  CHECK(kind_is_clustered(PolicyKind::Club));
  CHECK_FALSE(kind_is_clustered(PolicyKind::LinUcb));
  CHECK(kind_is_weighted(PolicyKind::RclubWcu));
  CHECK(kind_is_weighted(PolicyKind::CwOful));
  CHECK(kind_is_weighted(PolicyKind::CwOfulInd));
  CHECK_FALSE(kind_is_weighted(PolicyKind::Club));
  CHECK(kind_is_shared(PolicyKind::LinUcb));
  CHECK(kind_is_shared(PolicyKind::CwOful));
  CHECK_FALSE(kind_is_shared(PolicyKind::LinUcbInd));
}

TEST_CASE("policy resolution fills the auto knobs") {
  ResolvedPolicy r = resolve(PolicyKind::RclubWcu, {}, 400, 9);
  CHECK(r.delta == 1.0 / 400.0);
  CHECK(r.cbar == 20.0);  // sqrt(400)
  CHECK(r.alpha == doctest::Approx((3.0 + 1.0) / 20.0).epsilon(1e-15));
  CHECK(r.weights_enabled);
  CHECK(r.alpha_cbar() == doctest::Approx(4.0).epsilon(1e-15));

  PolicyConfig explicit_cfg;
  explicit_cfg.alpha = 0.25;
  explicit_cfg.cbar = 2.0;
  explicit_cfg.delta = 0.05;
  explicit_cfg.lambda = 0.5;
  ResolvedPolicy e = resolve(PolicyKind::CwOful, explicit_cfg, 400, 9);
  CHECK(e.alpha == 0.25);
  CHECK(e.cbar == 2.0);
  CHECK(e.delta == 0.05);
  CHECK(e.lambda == 0.5);
  CHECK(e.alpha_cbar() == 0.5);
}

TEST_CASE("unweighted kinds carry no robustness terms") {
  for (PolicyKind k :
       {PolicyKind::Club, PolicyKind::LinUcb, PolicyKind::LinUcbInd}) {
    ResolvedPolicy r = resolve(k);
    CHECK_FALSE(r.weights_enabled);
    CHECK(r.cbar == 0.0);
    CHECK(std::isinf(r.alpha));
    CHECK(r.alpha_cbar() == 0.0);
  }
}

TEST_CASE("zero budget disables weighting entirely") {
  PolicyConfig cfg;
  cfg.cbar = 0.0;
  ResolvedPolicy r = resolve(PolicyKind::RclubWcu, cfg);
  CHECK_FALSE(r.weights_enabled);
  CHECK(std::isinf(r.alpha));
  CHECK(r.alpha_cbar() == 0.0);

  PolicyConfig off;
  off.weights_enabled = false;
  ResolvedPolicy r2 = resolve(PolicyKind::CwOfulInd, off);
  CHECK_FALSE(r2.weights_enabled);
  CHECK(r2.alpha_cbar() == 0.0);
}

TEST_CASE("policy resolution rejects bad knobs") {
  PolicyConfig bad;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(resolve(PolicyKind::RclubWcu, bad), std::invalid_argument);
  bad = {};
  bad.lambda = 0.0;
  CHECK_THROWS_AS(resolve(PolicyKind::Club, bad), std::invalid_argument);
  bad = {};
  bad.alpha1 = -1.0;
  CHECK_THROWS_AS(resolve(PolicyKind::Club, bad), std::invalid_argument);
  bad = {};
  bad.delta = 1.0;
  CHECK_THROWS_AS(resolve(PolicyKind::Club, bad), std::invalid_argument);
  CHECK_THROWS_AS(resolve(PolicyKind::Club, {}, 0), std::invalid_argument);
  // Oracle skips knob validation: it has no knobs.
  CHECK_NOTHROW(resolve(PolicyKind::Oracle, bad, 0));
}

TEST_CASE("beta bound frozen value and structure") {
  double want = 1.0 + std::sqrt(2.0 * std::log(10.0) +
                                2.0 * std::log(1.0 + 100.0 / 2.0));
  CHECK(beta_bound(1.0, 0.1, 2, 100, 0.0) ==
        doctest::Approx(want).epsilon(1e-15));
  CHECK(beta_bound(1.0, 0.1, 2, 100, 0.0) ==
        doctest::Approx(4.53114).epsilon(1e-5));
  CHECK(beta_bound(1.0, 0.1, 2, 100, 2.5) ==
        doctest::Approx(want + 2.5).epsilon(1e-15));
  // Grows with horizon, shrinks with delta.
  CHECK(beta_bound(1.0, 0.1, 2, 1000, 0.0) > beta_bound(1.0, 0.1, 2, 100, 0.0));
  CHECK(beta_bound(1.0, 0.5, 2, 100, 0.0) < beta_bound(1.0, 0.1, 2, 100, 0.0));
  CHECK(beta_bound(4.0, 0.1, 2, 0, 0.0) ==
        doctest::Approx(2.0 + std::sqrt(2.0 * std::log(10.0))).epsilon(1e-15));
}

TEST_CASE("deletion width") {
  CHECK(deletion_f(0) == 1.0);
  double prev = deletion_f(0);
  for (long t : {1L, 5L, 50L, 500L, 50000L}) {
    double cur = deletion_f(t);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(deletion_f(1000000) < 0.005);
  CHECK(deletion_f(1) ==
        doctest::Approx(std::sqrt((1.0 + std::log(2.0)) / 2.0)).epsilon(1e-15));
}

TEST_CASE("weight computation") {
  UserRobustState s(2, 1.0);
  // Fresh state: ||e1||_{inv} = 1, so the weight is alpha itself.
  CHECK(compute_weight(s, Vector{1.0, 0.0}, 0.5) == 0.5);
  CHECK(compute_weight(s, Vector{1.0, 0.0}, 3.0) == 1.0);  // capped
  CHECK(compute_weight(s, Vector{1.0, 0.0},
                       std::numeric_limits<double>::infinity()) == 1.0);
  CHECK(compute_weight(s, Vector{0.0, 0.0}, 0.5) == 1.0);  // zero radius guard

  s.spd.rank1_update(Vector{1.0, 0.0}, 1.0);
  // Now ||e1||_{inv} = sqrt(1/2): weight 0.5 / sqrt(0.5) = 0.5 sqrt(2).
  CHECK(compute_weight(s, Vector{1.0, 0.0}, 0.5) ==
        doctest::Approx(0.5 * std::sqrt(2.0)).epsilon(1e-12));
  // Orthogonal direction unaffected.
  CHECK(compute_weight(s, Vector{0.0, 1.0}, 0.5) == 0.5);
}

TEST_CASE("unweighted update accumulates plain ridge statistics") {
  ResolvedPolicy cfg = resolve(PolicyKind::LinUcbInd);
  PolicyState p(cfg, 2, 2);
  p.update(0, Vector{1.0, 0.0}, 1.0, 1);
  const UserRobustState& s = p.state_for(0);
  CHECK(s.count == 1);
  CHECK(s.gram_part(0, 0) == 1.0);
  CHECK(s.b == Vector{1.0, 0.0});
  CHECK(s.theta_hat[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.theta_hat[1] == 0.0);
  // User 1 untouched.
  CHECK(p.state_for(1).count == 0);
}

TEST_CASE("shared kinds funnel every user into one model") {
  ResolvedPolicy cfg = resolve(PolicyKind::LinUcb);
  PolicyState p(cfg, 3, 2);
  p.update(0, Vector{1.0, 0.0}, 1.0, 1);
  p.update(2, Vector{0.0, 1.0}, -1.0, 2);
  CHECK(p.state_for(1).count == 2);
  CHECK(p.state_for(0).b == Vector{1.0, -1.0});
  CHECK_FALSE(p.clustered());
}

TEST_CASE("weighted update shrinks the step exactly as computed") {
  PolicyConfig knobs;
  knobs.alpha = 0.5;
  knobs.cbar = 2.0;
  ResolvedPolicy cfg = resolve(PolicyKind::CwOfulInd, knobs);
  PolicyState p(cfg, 1, 2);
  p.update(0, Vector{1.0, 0.0}, 2.0, 1);
  const UserRobustState& s = p.state_for(0);
  CHECK(s.gram_part(0, 0) == 0.5);  // w = alpha / 1
  CHECK(s.b[0] == 1.0);             // w * r
  CHECK(s.count == 1);

  // Second pull along the same arm: radius sqrt(1/1.5), w = 0.5/sqrt(2/3).
  p.update(0, Vector{1.0, 0.0}, 2.0, 2);
  double w2 = 0.5 / std::sqrt(2.0 / 3.0);
  CHECK(s.gram_part(0, 0) == doctest::Approx(0.5 + w2).epsilon(1e-12));
}

TEST_CASE("lagged weighting applies the previous visit's weight") {
  PolicyConfig knobs;
  knobs.alpha = 0.5;
  knobs.cbar = 2.0;
  knobs.lagged_weights = true;
  ResolvedPolicy cfg = resolve(PolicyKind::CwOfulInd, knobs);
  PolicyState p(cfg, 1, 2);

  // First visit uses the initial weight 1, not alpha.
  p.update(0, Vector{1.0, 0.0}, 1.0, 1);
  CHECK(p.state_for(0).gram_part(0, 0) == 1.0);
  // The stashed weight was computed after that update: 0.5 / sqrt(1/2).
  CHECK(p.state_for(0).next_weight ==
        doctest::Approx(0.5 * std::sqrt(2.0)).epsilon(1e-12));
  p.update(0, Vector{1.0, 0.0}, 1.0, 2);
  CHECK(p.state_for(0).gram_part(0, 0) ==
        doctest::Approx(1.0 + 0.5 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("theta hat stays consistent with the accumulated statistics") {
  PolicyConfig knobs;
  knobs.alpha = 0.3;
  knobs.cbar = 2.0;
  ResolvedPolicy cfg = resolve(PolicyKind::RclubWcu, knobs, 5000, 3);
  PolicyState p(cfg, 4, 3);
  Rng rng(64);
  for (long t = 1; t <= 600; ++t) {
    int user = static_cast<int>(rng.next_int(4));
    Vector x = oracle::random_direction(rng, 3);
    p.update(user, x, rng.next_normal(), t);
  }
  for (int u = 0; u < 4; ++u) {
    const UserRobustState& s = p.state_for(u);
    Matrix full = s.gram_part;
    for (int i = 0; i < 3; ++i) full(i, i) += cfg.lambda;
    Vector ref = matvec(oracle::dense_inverse(full), s.b);
    for (int i = 0; i < 3; ++i)
      CHECK(s.theta_hat[i] == doctest::Approx(ref[i]).epsilon(1e-8));
  }
}

TEST_CASE("select prefers optimism on a fresh model and breaks ties low") {
  ResolvedPolicy cfg = resolve(PolicyKind::LinUcbInd, {}, 100, 2);
  PolicyState p(cfg, 1, 2);
  std::vector<Vector> arms{Vector{1.0, 0.0}, Vector{0.0, 1.0},
                           Vector{0.5, 0.5}};
  // Fresh model: scores are beta * ||x||/sqrt(lambda); arms 0 and 1 tie at
  // the top, position 0 wins.
  CHECK(p.select_arm(0, {0, 1}, arms, 1) == 0);
  CHECK(p.select_arm(0, {1, 0}, arms, 1) == 0);
  CHECK(p.select_arm(0, {2, 1}, arms, 1) == 1);  // unit norm beats 1/sqrt(2)

  // After pulling arm 0, the unexplored direction wins the bonus contest.
  p.update(0, arms[0], 0.3, 1);
  CHECK(p.select_arm(0, {0, 1}, arms, 2) == 1);
}

TEST_CASE("select follows the mean once both arms are well explored") {
  ResolvedPolicy cfg = resolve(PolicyKind::LinUcbInd, {}, 1000, 2);
  PolicyState p(cfg, 1, 2);
  std::vector<Vector> arms{Vector{1.0, 0.0}, Vector{0.0, 1.0}};
  for (long t = 1; t <= 100; ++t) {
    p.update(0, arms[0], 1.0, t);
    p.update(0, arms[1], 0.2, t);
  }
  CHECK(p.select_arm(0, {0, 1}, arms, 200) == 0);
  CHECK(p.select_arm(0, {1, 0}, arms, 200) == 1);  // same arm, new position
}

TEST_CASE("cluster-count beta uses samples instead of rounds") {
  PolicyConfig knobs;
  knobs.delta = 0.7;
  std::vector<Vector> arms{Vector{1.0, 0.0}, Vector{0.0, 1.0}};
  auto feed = [&](PolicyState& p) {
    for (int k = 0; k < 6; ++k) p.update(0, arms[0], 1.0, k + 1);
    p.update(0, arms[1], -0.3, 7);
  };

  ResolvedPolicy by_rounds = resolve(PolicyKind::Club, knobs, 100, 2);
  PolicyState a(by_rounds, 1, 2);
  feed(a);
  // Huge t inflates the bonus: the under-sampled arm wins.
  CHECK(a.select_arm(0, {0, 1}, arms, 1000000) == 1);

  knobs.beta_cluster_counts = true;
  ResolvedPolicy by_count = resolve(PolicyKind::Club, knobs, 100, 2);
  PolicyState b(by_count, 1, 2);
  feed(b);
  // Same statistics, same t, but beta keys on the 7 samples: the good arm
  // keeps the lead.
  CHECK(b.select_arm(0, {0, 1}, arms, 1000000) == 0);
}

TEST_CASE("select validates its arguments") {
  ResolvedPolicy cfg = resolve(PolicyKind::Club, {}, 100, 2);
  PolicyState p(cfg, 2, 2);
  std::vector<Vector> arms{Vector{1.0, 0.0}};
  CHECK_THROWS_AS(p.select_arm(0, {}, arms, 1), std::invalid_argument);
  CHECK_THROWS_AS(p.select_arm(5, {0}, arms, 1), std::invalid_argument);
  CHECK_THROWS_AS(p.update(-1, arms[0], 0.0, 1), std::invalid_argument);
}

TEST_CASE("deletion check sits exactly on its threshold") {
  ResolvedPolicy cfg = resolve(PolicyKind::Club, {}, 100, 2);
  PolicyState p(cfg, 2, 2);
  // Both users unobserved: f(0) + f(0) = 2, alpha1 = 1, no budget term.
  p.state_for(0).theta_hat = Vector{2.5, 0.0};
  CHECK(p.deletion_check(0, 1));
  p.state_for(0).theta_hat = Vector{2.0, 0.0};
  CHECK(p.deletion_check(0, 1));  // >= at the boundary
  p.state_for(0).theta_hat = Vector{1.999999, 0.0};
  CHECK_FALSE(p.deletion_check(0, 1));

  PolicyConfig knobs;
  knobs.alpha = 0.25;
  knobs.cbar = 2.0;
  ResolvedPolicy robust = resolve(PolicyKind::RclubWcu, knobs, 100, 2);
  PolicyState q(robust, 2, 2);
  // Threshold widens by alpha*cbar = 0.5.
  q.state_for(0).theta_hat = Vector{2.5, 0.0};
  CHECK(q.deletion_check(0, 1));
  q.state_for(0).theta_hat = Vector{2.4999, 0.0};
  CHECK_FALSE(q.deletion_check(0, 1));
}

TEST_CASE("updates split the graph once estimates diverge") {
  // alpha1 = 0.5 keeps the round-one transient (gap 0.5 between a user with
  // one sample and one with none, width ~0.96) inside the threshold while
  // still separating genuinely different directions (gap -> sqrt(2)).
  PolicyConfig knobs;
  knobs.alpha1 = 0.5;
  ResolvedPolicy cfg = resolve(PolicyKind::Club, knobs, 1000, 2);
  PolicyState p(cfg, 3, 2);
  CHECK(p.graph().component_count() == 1);
  for (long t = 1; t <= 40; ++t) {
    p.update(0, Vector{1.0, 0.0}, 1.0, t);
    p.update(1, Vector{0.0, 1.0}, 1.0, t);
    p.update(2, Vector{1.0, 0.0}, 1.0, t);
  }
  CHECK(p.graph().component_count() > 1);
  // Users 0 and 2 learned the same direction and must stay together.
  CHECK(p.graph().component_of(0) == p.graph().component_of(2));
  CHECK(p.graph().component_of(0) != p.graph().component_of(1));

  // Selection for user 0 now aggregates only its own component.
  std::vector<Vector> arms{Vector{1.0, 0.0}, Vector{0.0, 1.0}};
  CHECK_NOTHROW(p.select_arm(0, {0, 1}, arms, 200));
}

TEST_CASE("deletion can be disabled") {
  PolicyConfig knobs;
  knobs.alpha1 = 0.01;
  knobs.deletion_enabled = false;
  ResolvedPolicy cfg = resolve(PolicyKind::Club, knobs, 1000, 2);
  PolicyState p(cfg, 2, 2);
  for (long t = 1; t <= 30; ++t) {
    p.update(0, Vector{1.0, 0.0}, 1.0, t);
    p.update(1, Vector{0.0, 1.0}, 1.0, t);
  }
  CHECK(p.graph().component_count() == 1);
}

TEST_CASE("zero budget reduces the robust policy to the plain clustered one") {
  PolicyConfig zero;
  zero.cbar = 0.0;
  ResolvedPolicy robust = resolve(PolicyKind::RclubWcu, zero, 500, 3);
  ResolvedPolicy plain = resolve(PolicyKind::Club, {}, 500, 3);
  PolicyState a(robust, 4, 3);
  PolicyState b(plain, 4, 3);

  Rng rng(17);
  std::vector<Vector> arms;
  for (int k = 0; k < 12; ++k) arms.push_back(oracle::random_direction(rng, 3));
  for (long t = 1; t <= 300; ++t) {
    int user = static_cast<int>(rng.next_int(4));
    std::vector<int> arm_set = rng.sample_without_replacement(12, 4);
    int ca = a.select_arm(user, arm_set, arms, t);
    int cb = b.select_arm(user, arm_set, arms, t);
    CHECK(ca == cb);
    double r = rng.next_normal();
    a.update(user, arms[arm_set[ca]], r, t);
    b.update(user, arms[arm_set[cb]], r, t);
  }
  for (int u = 0; u < 4; ++u)
    CHECK(a.state_for(u).theta_hat == b.state_for(u).theta_hat);
  CHECK(a.graph().component_count() == b.graph().component_count());
}

TEST_CASE("single user collapses clustered and shared kinds") {
  PolicyConfig knobs;
  knobs.alpha = 0.4;
  knobs.cbar = 2.0;
  ResolvedPolicy clustered = resolve(PolicyKind::RclubWcu, knobs, 500, 3);
  ResolvedPolicy shared = resolve(PolicyKind::CwOful, knobs, 500, 3);
  ResolvedPolicy solo = resolve(PolicyKind::CwOfulInd, knobs, 500, 3);
  PolicyState a(clustered, 1, 3), b(shared, 1, 3), c(solo, 1, 3);

  Rng rng(29);
  std::vector<Vector> arms;
  for (int k = 0; k < 10; ++k) arms.push_back(oracle::random_direction(rng, 3));
  for (long t = 1; t <= 250; ++t) {
    std::vector<int> arm_set = rng.sample_without_replacement(10, 5);
    int ca = a.select_arm(0, arm_set, arms, t);
    int cb = b.select_arm(0, arm_set, arms, t);
    int cc = c.select_arm(0, arm_set, arms, t);
    CHECK(ca == cb);
    CHECK(ca == cc);
    double r = rng.next_normal();
    a.update(0, arms[arm_set[ca]], r, t);
    b.update(0, arms[arm_set[cb]], r, t);
    c.update(0, arms[arm_set[cc]], r, t);
  }
  CHECK(a.state_for(0).theta_hat == b.state_for(0).theta_hat);
  CHECK(a.state_for(0).theta_hat == c.state_for(0).theta_hat);
}
