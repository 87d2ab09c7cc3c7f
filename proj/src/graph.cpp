#include "rclub/graph.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace rclub {

UserGraph::UserGraph(int users) {
  if (users < 1) throw std::invalid_argument("UserGraph: need >= 1 user");
  adj_.resize(users);
  for (int i = 0; i < users; ++i)
    for (int j = 0; j < users; ++j)
      if (j != i) adj_[i].insert(j);
  edges_ = static_cast<long long>(users) * (users - 1) / 2;
}

void UserGraph::check_user(int u) const {
  if (u < 0 || u >= size())
    throw std::invalid_argument("UserGraph: user id out of range");
}

bool UserGraph::has_edge(int i, int j) const {
  check_user(i);
  check_user(j);
  return adj_[i].count(j) > 0;
}

void UserGraph::delete_edge(int i, int j) {
  check_user(i);
  check_user(j);
  if (i == j) return;
  if (adj_[i].erase(j)) {
    adj_[j].erase(i);
    --edges_;
    ++version_;
    dirty_ = true;
  }
}

void UserGraph::rebuild() const {
  int n = size();
  comp_of_.assign(n, -1);
  members_.clear();
  for (int start = 0; start < n; ++start) {
    if (comp_of_[start] != -1) continue;
    int id = static_cast<int>(members_.size());
    members_.emplace_back();
    std::deque<int> queue{start};
    comp_of_[start] = id;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      members_[id].push_back(u);
      for (int v : adj_[u])
        if (comp_of_[v] == -1) {
          comp_of_[v] = id;
          queue.push_back(v);
        }
    }
  }
  for (auto& m : members_) std::sort(m.begin(), m.end());
  dirty_ = false;
}

int UserGraph::component_of(int user) const {
  check_user(user);
  if (dirty_) rebuild();
  return comp_of_[user];
}

int UserGraph::component_count() const {
  if (dirty_) rebuild();
  return static_cast<int>(members_.size());
}

const std::vector<int>& UserGraph::component_members(int comp) const {
  if (dirty_) rebuild();
  if (comp < 0 || comp >= static_cast<int>(members_.size()))
    throw std::invalid_argument("UserGraph: component id out of range");
  return members_[comp];
}

const std::vector<std::vector<int>>& UserGraph::components() const {
  if (dirty_) rebuild();
  return members_;
}

const std::unordered_set<int>& UserGraph::neighbors(int user) const {
  check_user(user);
  return adj_[user];
}

}  // namespace rclub
