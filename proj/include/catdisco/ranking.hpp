#pragma once

#include <span>
#include <string>
#include <vector>

#include "catdisco/clustering.hpp"

namespace catdisco {

struct SelectionConfig {
  double sigma = 0.5;  // compactness weight in the cluster score
  double alpha = 1.0;  // Student-t degrees of freedom
  int k_high = 50;     // per cluster
  int k_low = 500;     // global
};

// score = sigma * compactness + (1 - sigma) * size_score. Returned sorted by
// descending score, then larger size, then lower cluster id.
// Throws std::invalid_argument when sigma is outside [0, 1].
std::vector<ClusterStats> rank_clusters(std::vector<ClusterStats> stats, double sigma);

struct AssignmentDistribution {
  std::string sample_id;
  std::vector<double> q;  // Student-t soft assignment over all centers
  double entropy = 0.0;   // nats
  double nearest_distance = 0.0;
  int nearest = 0;
};

AssignmentDistribution assignment_distribution(std::span<const double> point, const Matrix& centers,
                                               double alpha);

// Intersection of the k best by centrality and the k best by entropy (in
// centrality order), then topped up from the centrality ranking and finally
// the entropy ranking. Ties resolve by ascending sample id.
std::vector<std::string> select_high_confidence(const std::vector<AssignmentDistribution>& members,
                                                int k_high);

// Unstable samples among the k_low highest-entropy ones, in descending
// entropy order. `unstable` is parallel to `all`.
std::vector<std::string> select_low_confidence(const std::vector<AssignmentDistribution>& all,
                                               const std::vector<bool>& unstable, int k_low);

}  // namespace catdisco
