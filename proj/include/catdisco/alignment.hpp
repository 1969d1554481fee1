#pragma once

#include <map>
#include <span>
#include <vector>

#include "catdisco/linalg.hpp"

namespace catdisco {

struct Assignment {
  std::vector<int> row_to_col;  // -1 for rows left unassigned (rows > cols)
  double cost = 0.0;
};

// Minimum-cost rectangular assignment of min(m, n) pairs. Among optimal
// assignments the one that is lexicographically smallest along the shorter
// dimension is returned, so ties resolve toward low indices.
// Throws std::invalid_argument on empty or non-finite input.
Assignment hungarian(const Matrix& cost);

struct Matching {
  std::map<int, int> cluster_to_class;  // matched (known) clusters
  std::vector<int> novel_clusters;      // in priority order
  std::vector<int> class_of_cluster;    // full cluster -> class id map, size K
  double cost = 0.0;
};

// Hungarian matching of labeled class centroids (row r belongs to known_ids[r])
// to cluster centers by Euclidean distance. Unmatched clusters become novel
// and take the free ids of [0, K) in ascending order, following
// novel_priority (cluster ids, highest priority first; clusters missing from
// it follow in id order).
Matching match_clusters(const Matrix& centers, const Matrix& labeled_centroids,
                        std::span<const int> known_ids, std::span<const int> novel_priority);

// Re-derives the novel ids of `m` so that each novel cluster takes the id of
// the nearest previous novel prototype (Hungarian on center distance).
// `previous` maps novel class id -> prototype; ids absent from it are handed
// out in the existing priority order.
void carry_novel_ids(Matching& m, const Matrix& centers, const std::map<int, Vec>& previous);

}  // namespace catdisco
