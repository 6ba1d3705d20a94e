#pragma once

#include <functional>
#include <optional>
#include <vector>

namespace netident {

using BoolMatrix = std::vector<std::vector<bool>>;

inline BoolMatrix bool_matrix(int rows, int cols) {
  return BoolMatrix(size_t(rows), std::vector<bool>(size_t(cols), false));
}

/// Kahn's algorithm on adj[u][v] == true meaning edge u -> v. Returns a
/// topological order, or nullopt with one offending cycle in `cycle`.
inline std::optional<std::vector<int>> topological_order(const BoolMatrix& adj,
                                                         std::vector<int>* cycle = nullptr) {
  const int n = int(adj.size());
  std::vector<int> indeg(size_t(n), 0);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (adj[size_t(u)][size_t(v)]) ++indeg[size_t(v)];
  std::vector<int> stack, order;
  for (int v = 0; v < n; ++v)
    if (indeg[size_t(v)] == 0) stack.push_back(v);
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    order.push_back(u);
    for (int v = 0; v < n; ++v)
      if (adj[size_t(u)][size_t(v)] && --indeg[size_t(v)] == 0) stack.push_back(v);
  }
  if (int(order.size()) == n) return order;
  if (cycle) {
    // walk forward among the remaining nodes until a node repeats
    std::vector<int> pos(size_t(n), -1);
    int start = 0;
    while (indeg[size_t(start)] == 0) ++start;
    std::vector<int> path;
    int cur = start;
    while (pos[size_t(cur)] == -1) {
      pos[size_t(cur)] = int(path.size());
      path.push_back(cur);
      for (int v = 0; v < n; ++v)
        if (adj[size_t(cur)][size_t(v)] && indeg[size_t(v)] > 0) {
          cur = v;
          break;
        }
    }
    cycle->assign(path.begin() + pos[size_t(cur)], path.end());
  }
  return std::nullopt;
}

struct Matching {
  int size = 0;
  std::vector<int> row_to_col;  // -1 when unmatched
};

/// Kuhn's augmenting-path maximum matching on a rows-by-cols adjacency.
inline Matching max_bipartite_matching(const BoolMatrix& adj, int n_cols) {
  const int n_rows = int(adj.size());
  std::vector<int> col_to_row(size_t(n_cols), -1);
  std::vector<char> seen;

  std::function<bool(int)> try_row = [&](int r) -> bool {
    for (int c = 0; c < n_cols; ++c) {
      if (!adj[size_t(r)][size_t(c)] || seen[size_t(c)]) continue;
      seen[size_t(c)] = 1;
      if (col_to_row[size_t(c)] < 0 || try_row(col_to_row[size_t(c)])) {
        col_to_row[size_t(c)] = r;
        return true;
      }
    }
    return false;
  };

  Matching m;
  m.row_to_col.assign(size_t(n_rows), -1);
  for (int r = 0; r < n_rows; ++r) {
    seen.assign(size_t(n_cols), 0);
    if (try_row(r)) ++m.size;
  }
  for (int c = 0; c < n_cols; ++c)
    if (col_to_row[size_t(c)] >= 0) m.row_to_col[size_t(col_to_row[size_t(c)])] = c;
  return m;
}

/// Maximum-matching size of a zero/nonzero pattern; upper bound on the rank
/// of any matrix with that pattern.
inline int structural_rank(const BoolMatrix& pattern, int n_cols) {
  return max_bipartite_matching(pattern, n_cols).size;
}

/// Reflexive-transitive closure: out[j][l] true iff j == l or a directed path
/// l -> ... -> j exists. adj[l][j] means an edge from l to j.
inline BoolMatrix reachability_closure(const BoolMatrix& adj) {
  const int n = int(adj.size());
  BoolMatrix reach = bool_matrix(n, n);
  for (int j = 0; j < n; ++j) reach[size_t(j)][size_t(j)] = true;
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < n; ++j)
      if (adj[size_t(l)][size_t(j)]) reach[size_t(j)][size_t(l)] = true;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (reach[size_t(i)][size_t(k)] && reach[size_t(k)][size_t(j)])
          reach[size_t(i)][size_t(j)] = true;
  return reach;
}

}  // namespace netident
