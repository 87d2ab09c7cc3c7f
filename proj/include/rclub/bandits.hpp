#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rclub/graph.hpp"
#include "rclub/numkit.hpp"

namespace rclub {

enum class PolicyKind {
  RclubWcu,   // clustered, weighted updates, edge deletion
  Club,       // clustered, unit weights, edge deletion
  LinUcb,     // one shared model for all users
  LinUcbInd,  // one model per user, no sharing
  CwOful,     // shared model with weighted updates
  CwOfulInd,  // per-user models with weighted updates
  Oracle,     // serves the per-round optimum; harness-level baseline
};

const char* policy_kind_name(PolicyKind k);
std::optional<PolicyKind> policy_kind_from_name(const std::string& name);
bool kind_is_clustered(PolicyKind k);
bool kind_is_weighted(PolicyKind k);
bool kind_is_shared(PolicyKind k);

// Raw knobs as they appear in config files. Negative sentinels mean "auto":
// alpha = (sqrt(d) + sqrt(lambda)) / cbar, delta = 1/T, cbar = sqrt(T).
struct PolicyConfig {
  double lambda = 1.0;
  double alpha = -1.0;
  double alpha1 = 1.0;
  double delta = -1.0;
  double cbar = -1.0;
  bool weights_enabled = true;  // only honored by the weighted kinds
  bool deletion_enabled = true;
  bool lagged_weights = false;       // apply the previous visit's weight first
  bool beta_cluster_counts = false;  // use the cluster sample count in beta
};

// Config resolved against the instance dimension and horizon. cbar == 0
// turns the robustness machinery off: every weight is 1 and the alpha*cbar
// terms vanish from both the bonus and the deletion threshold.
struct ResolvedPolicy {
  PolicyKind kind = PolicyKind::LinUcb;
  std::string name;
  double lambda = 1.0;
  double alpha = 0.0;  // +inf once cbar == 0
  double alpha1 = 1.0;
  double delta = 0.0;
  double cbar = 0.0;
  bool weights_enabled = false;
  bool deletion_enabled = true;
  bool lagged_weights = false;
  bool beta_cluster_counts = false;

  double alpha_cbar() const;  // the alpha * cbar product with the 0 guard
};

ResolvedPolicy resolve_policy(PolicyKind kind, const PolicyConfig& cfg,
                              const std::string& name, int dim, long horizon);

// Per-model sufficient statistics for the weighted ridge estimate.
struct UserRobustState {
  Matrix gram_part;  // sum of w x x^T, no reg*I
  Vector b;          // sum of w r x
  long count = 0;
  Vector theta_hat;
  SpdState spd;      // reg*I + gram_part with maintained inverse
  double next_weight = 1.0;  // only read in lagged mode

  UserRobustState(int dim, double reg);
};

// Exploration radius scale: sqrt(lambda) + sqrt(2 log(1/delta) +
// d log(1 + T/(lambda d))) + alpha*cbar.
double beta_bound(double lambda, double delta, int dim, long t,
                  double alpha_cbar);

// Edge-deletion width f(T) = sqrt((1 + ln(1 + T)) / (1 + T)).
double deletion_f(long count);

// min(1, alpha / ||x||_{(reg I + M)^-1}), evaluated on the state as it is now.
double compute_weight(const UserRobustState& s, const Vector& x, double alpha);

class PolicyState {
 public:
  PolicyState(const ResolvedPolicy& cfg, int users, int dim);

  const ResolvedPolicy& config() const { return cfg_; }
  int users() const { return users_; }
  int dim() const { return dim_; }

  // Index into `arms` of the argmax of x^T theta_hat_V + beta ||x||_{M_V^-1}
  // over arm_set; ties resolve to the lowest position. The active model V is
  // this user's graph component (clustered kinds), the shared model, or the
  // user's own model, and is factorized directly every call.
  int select_arm(int user, const std::vector<int>& arm_set,
                 const std::vector<Vector>& arms, long t);

  // Weighted ridge update for the serving model, then (clustered kinds) the
  // deletion pass against every current neighbor of `user`.
  void update(int user, const Vector& x, double reward, long t);

  // True when the edge (i, l) should go: ||theta_hat_i - theta_hat_l|| >=
  // alpha1 * (f(T_i) + f(T_l) + alpha*cbar), the last term only when
  // weighting is on.
  bool deletion_check(int i, int l) const;

  const UserRobustState& state_for(int user) const;
  UserRobustState& state_for(int user);
  const UserGraph& graph() const;
  bool clustered() const { return graph_.has_value(); }

 private:
  // Running Gram/b/count sums over one graph component, patched in place by
  // each member update so the select path does not re-sum the whole
  // component every round. Deletions renumber component ids, so an entry is
  // only trusted while the graph version it was built against still holds.
  struct CompAggregate {
    uint64_t version = 0;
    bool valid = false;
    Matrix sum;  // member gram_parts, no reg*I
    Vector b;
    long count = 0;
  };

  int model_index(int user) const;
  CompAggregate& component_aggregate(int comp);

  ResolvedPolicy cfg_;
  int users_;
  int dim_;
  std::vector<UserRobustState> models_;
  std::optional<UserGraph> graph_;
  std::vector<CompAggregate> comp_agg_;
};

}  // namespace rclub
