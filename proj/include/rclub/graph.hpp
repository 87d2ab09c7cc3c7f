#pragma once

#include <cstdint>
#include <unordered_set>
#include <vector>

namespace rclub {

// Undirected user graph that starts complete and only ever loses edges.
// Connected components are recomputed lazily after deletions and cached.
class UserGraph {
 public:
  explicit UserGraph(int users);

  int size() const { return static_cast<int>(adj_.size()); }
  long long edge_count() const { return edges_; }
  // Bumped by every effective deletion; lets callers cache per-component
  // state and notice when component ids have been renumbered.
  uint64_t version() const { return version_; }
  bool has_edge(int i, int j) const;

  // Idempotent; removing an absent edge is a no-op.
  void delete_edge(int i, int j);

  int component_of(int user) const;
  int component_count() const;
  // Members sorted ascending; component ids are dense, ordered by their
  // smallest member.
  const std::vector<int>& component_members(int comp) const;
  const std::vector<std::vector<int>>& components() const;
  const std::unordered_set<int>& neighbors(int user) const;

 private:
  void rebuild() const;
  void check_user(int u) const;

  std::vector<std::unordered_set<int>> adj_;
  long long edges_ = 0;
  uint64_t version_ = 0;
  mutable bool dirty_ = true;
  mutable std::vector<int> comp_of_;
  mutable std::vector<std::vector<int>> members_;
};

}  // namespace rclub
