#pragma once

#include <string>
#include <vector>

#include "rclub/bandits.hpp"
#include "rclub/numkit.hpp"

namespace rclub {

// Plain (unweighted) ridge statistics kept alongside a robust policy; fed
// the same arm/reward stream. Its estimate keeps whatever bias corruption
// injected, which is exactly what the detector looks for.
struct UserNonRobustState {
  Matrix gram_part;  // sum of x x^T, no reg*I
  Vector b;
  long count = 0;
  Vector theta_tilde;
  SpdState spd;  // reg*I + gram_part
  double min_eig_cache = 0.0;
  bool min_eig_stale = true;

  UserNonRobustState(int dim, double reg);

  // Smallest eigenvalue of gram_part (without the reg*I), evaluated lazily
  // at scan time and cached until the next update.
  double min_eig();
};

void nonrobust_update(UserNonRobustState& s, const Vector& x, double reward);

// Score threshold for one user: first term from the user's own non-robust
// confidence set, second from the robust cluster estimate's. user_part,
// when given, receives the first term alone.
double occud_threshold(long t_user, long t_cluster, double min_eig_user,
                       double min_eig_cluster, double lambda, int dim,
                       double delta, double alpha_cbar,
                       double* user_part = nullptr);

struct UserDetection {
  int user = 0;
  double lhs = 0.0;        // distance driving the rule
  double threshold = 0.0;
  double term_user = 0.0;     // per-user half of the threshold
  double term_cluster = 0.0;  // per-component half of the threshold
  double score = 0.0;      // signed margin lhs - threshold; AUC ranks this
  bool flagged = false;
};

struct DetectionReport {
  long t = 0;
  std::string algorithm;
  std::vector<UserDetection> users;  // one entry per user, ascending id
  std::vector<int> detected;         // flagged ids, ascending
};

// Flags user i when ||theta_tilde_i - theta_hat_V|| exceeds the threshold;
// V is i's component in the policy's graph, aggregated from robust parts.
DetectionReport occud_scan(const PolicyState& policy,
                           std::vector<UserNonRobustState>& companions,
                           long t, double delta);

// Gap-based baseline: within each component, flag the ceil(rho * |V|) users
// with the largest ||theta_hat_i - theta_hat_V||, ties to the lower id.
DetectionReport gcud_scan(const PolicyState& policy, double rho, long t);

// Mann-Whitney AUC with tie credit 1/2, computed by sort-and-rank in exact
// half-integer arithmetic. Throws std::domain_error when labels are all one
// class.
double auc(const std::vector<double>& scores,
           const std::vector<char>& labels);

}  // namespace rclub
