#pragma once

#include <cstddef>
#include <vector>

#include "supck/geometry.hpp"

namespace supck {

/// Maximum-cardinality matching in a bipartite graph given as left-vertex
/// adjacency lists (augmenting paths, O(V E)). Returns match_left[i] =
/// matched right vertex or -1.
inline std::vector<int> max_bipartite_matching(const std::vector<std::vector<int>>& adjacency,
                                               std::size_t right_count) {
  std::vector<int> match_left(adjacency.size(), -1);
  std::vector<int> match_right(right_count, -1);
  std::vector<int> visited(right_count, -1);

  auto augment = [&](auto&& self, int u, int stamp) -> bool {
    for (int v : adjacency[static_cast<std::size_t>(u)]) {
      auto& seen = visited[static_cast<std::size_t>(v)];
      if (seen == stamp) continue;
      seen = stamp;
      const int owner = match_right[static_cast<std::size_t>(v)];
      if (owner < 0 || self(self, owner, stamp)) {
        match_left[static_cast<std::size_t>(u)] = v;
        match_right[static_cast<std::size_t>(v)] = u;
        return true;
      }
    }
    return false;
  };

  for (std::size_t u = 0; u < adjacency.size(); ++u) augment(augment, static_cast<int>(u), static_cast<int>(u));
  return match_left;
}

/// Size of a maximum one-to-one matching between atoms of `a` and `b` whose
/// distance is at most `tolerance`.
inline std::size_t overlap_count(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b, double tolerance) {
  const double tol2 = tolerance * tolerance;
  std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(a.cols()));
  for (Eigen::Index i = 0; i < a.cols(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      if ((a.col(i) - b.col(j)).squaredNorm() <= tol2) adjacency[static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
  const auto match = max_bipartite_matching(adjacency, static_cast<std::size_t>(b.cols()));
  std::size_t count = 0;
  for (int m : match) count += m >= 0 ? 1 : 0;
  return count;
}

}  // namespace supck
