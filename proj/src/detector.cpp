#include "rclub/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rclub {

UserNonRobustState::UserNonRobustState(int dim, double reg)
    : gram_part(dim, dim), b(dim, 0.0), theta_tilde(dim, 0.0), spd(dim, reg) {}

double UserNonRobustState::min_eig() {
  if (min_eig_stale) {
    min_eig_cache = count == 0 ? 0.0 : min_eigenvalue(gram_part);
    min_eig_stale = false;
  }
  return min_eig_cache;
}

void nonrobust_update(UserNonRobustState& s, const Vector& x, double reward) {
  add_outer(s.gram_part, x, 1.0);
  s.spd.rank1_update(x, 1.0);
  add_scaled(s.b, x, reward);
  s.count += 1;
  s.theta_tilde = s.spd.solve(s.b);
  s.min_eig_stale = true;
}

double occud_threshold(long t_user, long t_cluster, double min_eig_user,
                       double min_eig_cluster, double lambda, int dim,
                       double delta, double alpha_cbar, double* user_part) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("occud_threshold: lambda must be > 0");
  if (!(delta > 0.0) || delta >= 1.0)
    throw std::invalid_argument("occud_threshold: delta must lie in (0, 1)");
  double d = static_cast<double>(dim);
  double rl = std::sqrt(lambda);
  double log_term = 2.0 * std::log(1.0 / delta);

  double den_user = std::sqrt(min_eig_user + lambda);
  double den_cluster = std::sqrt(min_eig_cluster);
  if (den_user < rl * (1.0 - 1e-9) || den_cluster < rl * (1.0 - 1e-9))
    throw NumericError("occud_threshold: denominator below sqrt(lambda)");

  double num_user =
      std::sqrt(d * std::log(1.0 + static_cast<double>(t_user) / (lambda * d)) +
                log_term) +
      rl;
  double num_cluster =
      std::sqrt(
          d * std::log(1.0 + static_cast<double>(t_cluster) / (lambda * d)) +
          log_term) +
      rl + alpha_cbar;
  if (user_part) *user_part = num_user / den_user;
  return num_user / den_user + num_cluster / den_cluster;
}

namespace {

struct ClusterAggregate {
  Vector theta;
  long count = 0;
  double min_eig = 0.0;  // of the full reg*I + sum gram matrix
};

// Robust per-component aggregates, indexed by component id.
std::vector<ClusterAggregate> robust_aggregates(const PolicyState& policy) {
  const auto& comps = policy.graph().components();
  double lambda = policy.config().lambda;
  int dim = policy.dim();
  std::vector<ClusterAggregate> out(comps.size());
  for (size_t c = 0; c < comps.size(); ++c) {
    std::vector<const Matrix*> parts;
    Vector b(dim, 0.0);
    long count = 0;
    for (int m : comps[c]) {
      const UserRobustState& s = policy.state_for(m);
      parts.push_back(&s.gram_part);
      add_scaled(b, s.b, 1.0);
      count += s.count;
    }
    SpdState agg = aggregate(parts, lambda, dim);
    out[c].theta = agg.solve(b);
    out[c].count = count;
    out[c].min_eig = min_eigenvalue(agg.gram());
    // guard against tiny negative drift from the eigensolver
    out[c].min_eig = std::max(out[c].min_eig, lambda);
  }
  return out;
}

double vec_distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

DetectionReport occud_scan(const PolicyState& policy,
                           std::vector<UserNonRobustState>& companions,
                           long t, double delta) {
  if (static_cast<int>(companions.size()) != policy.users())
    throw std::invalid_argument("occud_scan: companion count mismatch");
  DetectionReport rep;
  rep.t = t;
  rep.algorithm = "occud";
  auto clusters = robust_aggregates(policy);
  double lambda = policy.config().lambda;
  double alpha_cbar = policy.config().alpha_cbar();
  rep.users.reserve(policy.users());
  for (int u = 0; u < policy.users(); ++u) {
    const ClusterAggregate& cl = clusters[policy.graph().component_of(u)];
    UserDetection det;
    det.user = u;
    det.lhs = vec_distance(companions[u].theta_tilde, cl.theta);
    det.threshold =
        occud_threshold(companions[u].count, cl.count, companions[u].min_eig(),
                        cl.min_eig, lambda, policy.dim(), delta, alpha_cbar,
                        &det.term_user);
    det.term_cluster = det.threshold - det.term_user;
    det.score = det.lhs - det.threshold;
    det.flagged = det.score > 0.0;
    if (det.flagged) rep.detected.push_back(u);
    rep.users.push_back(det);
  }
  return rep;
}

DetectionReport gcud_scan(const PolicyState& policy, double rho, long t) {
  if (rho < 0.0 || rho > 1.0)
    throw std::invalid_argument("gcud_scan: rho outside [0, 1]");
  DetectionReport rep;
  rep.t = t;
  rep.algorithm = "gcud";
  rep.users.resize(policy.users());
  auto clusters = robust_aggregates(policy);
  const auto& comps = policy.graph().components();
  for (size_t c = 0; c < comps.size(); ++c) {
    const auto& members = comps[c];
    std::vector<std::pair<double, int>> scored;
    scored.reserve(members.size());
    for (int m : members) {
      double s = vec_distance(policy.state_for(m).theta_hat, clusters[c].theta);
      scored.emplace_back(s, m);
    }
    // descending score, lower id wins ties
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    size_t take = static_cast<size_t>(
        std::ceil(rho * static_cast<double>(members.size())));
    for (size_t i = 0; i < scored.size(); ++i) {
      UserDetection det;
      det.user = scored[i].second;
      det.lhs = scored[i].first;
      det.score = scored[i].first;
      det.threshold = 0.0;
      det.flagged = i < take;
      rep.users[det.user] = det;
      if (det.flagged) rep.detected.push_back(det.user);
    }
  }
  std::sort(rep.detected.begin(), rep.detected.end());
  return rep;
}

double auc(const std::vector<double>& scores,
           const std::vector<char>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc: scores and labels length mismatch");
  long long pos = 0, neg = 0;
  for (char l : labels) (l ? pos : neg)++;
  if (pos == 0 || neg == 0)
    throw std::domain_error("auc: undefined for single-class labels");

  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });

  // Count wins in half units so ties stay exact: 2*wins + ties.
  long long half_wins = 0;
  long long neg_below = 0;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    long long pos_tied = 0, neg_tied = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? pos_tied : neg_tied)++;
      ++j;
    }
    half_wins += pos_tied * (2 * neg_below + neg_tied);
    neg_below += neg_tied;
    i = j;
  }
  return static_cast<double>(half_wins) /
         (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

}  // namespace rclub
