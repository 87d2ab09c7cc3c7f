#include "rclub/bandits.hpp"

#include <cmath>
#include <limits>

namespace rclub {

const char* policy_kind_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::RclubWcu: return "rclub_wcu";
    case PolicyKind::Club: return "club";
    case PolicyKind::LinUcb: return "linucb";
    case PolicyKind::LinUcbInd: return "linucb_ind";
    case PolicyKind::CwOful: return "cw_oful";
    case PolicyKind::CwOfulInd: return "cw_oful_ind";
    case PolicyKind::Oracle: return "oracle";
  }
  return "?";
}

std::optional<PolicyKind> policy_kind_from_name(const std::string& name) {
  for (PolicyKind k :
       {PolicyKind::RclubWcu, PolicyKind::Club, PolicyKind::LinUcb,
        PolicyKind::LinUcbInd, PolicyKind::CwOful, PolicyKind::CwOfulInd,
        PolicyKind::Oracle})
    if (name == policy_kind_name(k)) return k;
  return std::nullopt;
}

bool kind_is_clustered(PolicyKind k) {
  return k == PolicyKind::RclubWcu || k == PolicyKind::Club;
}

bool kind_is_weighted(PolicyKind k) {
  return k == PolicyKind::RclubWcu || k == PolicyKind::CwOful ||
         k == PolicyKind::CwOfulInd;
}

bool kind_is_shared(PolicyKind k) {
  return k == PolicyKind::LinUcb || k == PolicyKind::CwOful;
}

double ResolvedPolicy::alpha_cbar() const {
  if (!weights_enabled || cbar == 0.0) return 0.0;
  return alpha * cbar;
}

ResolvedPolicy resolve_policy(PolicyKind kind, const PolicyConfig& cfg,
                              const std::string& name, int dim, long horizon) {
  if (kind == PolicyKind::Oracle)
    return ResolvedPolicy{.kind = kind, .name = name};
  if (horizon < 1) throw std::invalid_argument("policy: horizon must be >= 1");
  if (!(cfg.lambda > 0.0))
    throw std::invalid_argument("policy: lambda must be > 0");
  if (!(cfg.alpha1 > 0.0))
    throw std::invalid_argument("policy: alpha1 must be > 0");

  ResolvedPolicy r;
  r.kind = kind;
  r.name = name;
  r.lambda = cfg.lambda;
  r.alpha1 = cfg.alpha1;
  r.deletion_enabled = cfg.deletion_enabled;
  r.lagged_weights = cfg.lagged_weights;
  r.beta_cluster_counts = cfg.beta_cluster_counts;
  r.delta = cfg.delta < 0.0 ? 1.0 / static_cast<double>(horizon) : cfg.delta;
  if (!(r.delta > 0.0) || r.delta >= 1.0)
    throw std::invalid_argument("policy: delta must lie in (0, 1)");

  r.weights_enabled = kind_is_weighted(kind) && cfg.weights_enabled;
  if (r.weights_enabled) {
    r.cbar = cfg.cbar < 0.0 ? std::sqrt(static_cast<double>(horizon))
                            : cfg.cbar;
    if (cfg.alpha >= 0.0) {
      if (cfg.alpha == 0.0)
        throw std::invalid_argument("policy: alpha must be > 0");
      r.alpha = cfg.alpha;
    } else if (r.cbar == 0.0) {
      r.alpha = std::numeric_limits<double>::infinity();
    } else {
      r.alpha = (std::sqrt(static_cast<double>(dim)) + std::sqrt(r.lambda)) /
                r.cbar;
    }
    if (r.cbar == 0.0) {
      // No corruption budget assumed: plain unit weights.
      r.weights_enabled = false;
      r.alpha = std::numeric_limits<double>::infinity();
    }
  } else {
    r.cbar = 0.0;
    r.alpha = std::numeric_limits<double>::infinity();
  }
  return r;
}

UserRobustState::UserRobustState(int dim, double reg)
    : gram_part(dim, dim), b(dim, 0.0), theta_hat(dim, 0.0), spd(dim, reg) {}

double beta_bound(double lambda, double delta, int dim, long t,
                  double alpha_cbar) {
  double d = static_cast<double>(dim);
  double inner = 2.0 * std::log(1.0 / delta) +
                 d * std::log(1.0 + static_cast<double>(t) / (lambda * d));
  return std::sqrt(lambda) + std::sqrt(inner) + alpha_cbar;
}

double deletion_f(long count) {
  double t = static_cast<double>(count);
  return std::sqrt((1.0 + std::log(1.0 + t)) / (1.0 + t));
}

double compute_weight(const UserRobustState& s, const Vector& x,
                      double alpha) {
  if (std::isinf(alpha)) return 1.0;
  double r = s.spd.mahalanobis(x);
  if (r == 0.0) return 1.0;
  return std::min(1.0, alpha / r);
}

PolicyState::PolicyState(const ResolvedPolicy& cfg, int users, int dim)
    : cfg_(cfg), users_(users), dim_(dim) {
  if (users < 1) throw std::invalid_argument("policy: users must be >= 1");
  if (dim < 1) throw std::invalid_argument("policy: dim must be >= 1");
  if (cfg.kind == PolicyKind::Oracle) return;
  int n_models = kind_is_shared(cfg.kind) ? 1 : users;
  models_.reserve(n_models);
  for (int i = 0; i < n_models; ++i) models_.emplace_back(dim, cfg.lambda);
  if (kind_is_clustered(cfg.kind)) {
    graph_.emplace(users);
    comp_agg_.resize(users);
  }
}

int PolicyState::model_index(int user) const {
  if (user < 0 || user >= users_)
    throw std::invalid_argument("policy: user id out of range");
  return kind_is_shared(cfg_.kind) ? 0 : user;
}

const UserRobustState& PolicyState::state_for(int user) const {
  return models_[model_index(user)];
}

UserRobustState& PolicyState::state_for(int user) {
  return models_[model_index(user)];
}

const UserGraph& PolicyState::graph() const {
  if (!graph_) throw std::logic_error("policy: no graph for this kind");
  return *graph_;
}

PolicyState::CompAggregate& PolicyState::component_aggregate(int comp) {
  CompAggregate& cache = comp_agg_[comp];
  uint64_t v = graph_->version();
  if (!cache.valid || cache.version != v) {
    cache.sum = Matrix(dim_, dim_);
    cache.b.assign(dim_, 0.0);
    cache.count = 0;
    for (int m : graph_->component_members(comp)) {
      const Matrix& part = models_[m].gram_part;
      for (size_t i = 0; i < cache.sum.a.size(); ++i)
        cache.sum.a[i] += part.a[i];
      add_scaled(cache.b, models_[m].b, 1.0);
      cache.count += models_[m].count;
    }
    cache.version = v;
    cache.valid = true;
  }
  return cache;
}

int PolicyState::select_arm(int user, const std::vector<int>& arm_set,
                            const std::vector<Vector>& arms, long t) {
  if (arm_set.empty())
    throw std::invalid_argument("select_arm: empty arm set");
  int self = model_index(user);

  Vector b_v;
  long count_v = 0;
  SpdState agg = [&]() -> SpdState {
    if (graph_) {
      const CompAggregate& cache =
          component_aggregate(graph_->component_of(user));
      b_v = cache.b;
      count_v = cache.count;
      Matrix g = cache.sum;
      for (int i = 0; i < dim_; ++i) g(i, i) += cfg_.lambda;
      return SpdState::from_gram(std::move(g), cfg_.lambda);
    }
    b_v = models_[self].b;
    count_v = models_[self].count;
    return aggregate({&models_[self].gram_part}, cfg_.lambda, dim_);
  }();
  Vector theta_v = agg.solve(b_v);
  long beta_t = cfg_.beta_cluster_counts ? count_v : t;
  double beta =
      beta_bound(cfg_.lambda, cfg_.delta, dim_, beta_t, cfg_.alpha_cbar());

  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < arm_set.size(); ++i) {
    const Vector& x = arms[arm_set[i]];
    double score = dot(x, theta_v) + beta * agg.mahalanobis(x);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  return best;
}

void PolicyState::update(int user, const Vector& x, double reward, long t) {
  (void)t;
  UserRobustState& s = state_for(user);
  double w = 1.0;
  if (cfg_.weights_enabled) {
    if (cfg_.lagged_weights) {
      w = s.next_weight;
    } else {
      w = compute_weight(s, x, cfg_.alpha);
    }
  }
  add_outer(s.gram_part, x, w);
  s.spd.rank1_update(x, w);
  add_scaled(s.b, x, w * reward);
  s.count += 1;
  s.theta_hat = s.spd.solve(s.b);
  if (cfg_.weights_enabled && cfg_.lagged_weights)
    s.next_weight = compute_weight(s, x, cfg_.alpha);

  if (graph_) {
    // Patch the live component sums with the same increments; a stale entry
    // is left for the next select to rebuild.
    CompAggregate& cache = comp_agg_[graph_->component_of(user)];
    if (cache.valid && cache.version == graph_->version()) {
      add_outer(cache.sum, x, w);
      add_scaled(cache.b, x, w * reward);
      cache.count += 1;
    }
  }

  if (graph_ && cfg_.deletion_enabled) {
    // Snapshot: deletion_check mutates nothing, but delete_edge invalidates
    // the neighbor set we'd be iterating.
    std::vector<int> nbrs(graph_->neighbors(user).begin(),
                          graph_->neighbors(user).end());
    for (int l : nbrs)
      if (deletion_check(user, l)) graph_->delete_edge(user, l);
  }
}

bool PolicyState::deletion_check(int i, int l) const {
  const UserRobustState& a = models_[model_index(i)];
  const UserRobustState& b = models_[model_index(l)];
  double gap2 = 0.0;
  for (int k = 0; k < dim_; ++k) {
    double d = a.theta_hat[k] - b.theta_hat[k];
    gap2 += d * d;
  }
  double thr = cfg_.alpha1 *
               (deletion_f(a.count) + deletion_f(b.count) + cfg_.alpha_cbar());
  return std::sqrt(gap2) >= thr;
}

}  // namespace rclub
