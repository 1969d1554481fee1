#pragma once

#include <cstdint>
#include <vector>

#include "catdisco/linalg.hpp"

namespace catdisco {

struct ClusteringResult {
  std::vector<int> assignments;  // one cluster id in [0, K) per input row
  Matrix centers;                // K x D
  double inertia = 0.0;          // total within-cluster squared distance
  std::uint64_t run_seed = 0;
  int iterations = 0;
  std::vector<double> inertia_trace;  // objective after every Lloyd iteration
};

struct ClusterStats {
  int cluster_id = 0;
  std::size_t size = 0;
  double mean_intra_distance = 0.0;
  double compactness = 0.0;
  double size_score = 0.0;
  double rank_score = 0.0;
};

// Lloyd iterations from a greedy k-means++ seeding until the assignment is a
// fixpoint or max_iter is reached. An empty cluster is reseeded with the point
// farthest from its current center. Throws std::invalid_argument when there
// are fewer points than clusters or K < 2.
ClusteringResult kmeans(const Matrix& points, int K, std::uint64_t seed, int max_iter = 100);

struct MultiRunResult {
  std::vector<ClusteringResult> runs;  // seed order, ids aligned to the reference
  std::size_t reference = 0;           // index of the minimal-inertia run

  const ClusteringResult& reference_result() const { return runs[reference]; }
};

// `runs` independent k-means fits with seeds base_seed, base_seed+1, ...;
// every non-reference run is relabeled onto the reference by Hungarian
// matching of center distances. Fits run concurrently.
MultiRunResult multi_run(const Matrix& points, int K, std::uint64_t base_seed, int runs,
                         int max_iter = 100);

// Size, mean member-to-center distance, and the min-max normalized
// compactness and size scores (1 when all clusters tie).
std::vector<ClusterStats> cluster_stats(const ClusteringResult& result, const Matrix& points);

// Fills compactness and size_score from size and mean_intra_distance.
void fill_cluster_scores(std::vector<ClusterStats>& stats);

// A point is unstable when its aligned cluster id differs in any run.
std::vector<bool> instability(const std::vector<ClusteringResult>& aligned_runs);

}  // namespace catdisco
