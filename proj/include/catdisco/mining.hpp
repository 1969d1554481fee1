#pragma once

#include <map>
#include <string>
#include <vector>

#include "catdisco/pattern_oracle.hpp"

namespace catdisco {

// One cluster's share of a mining round.
struct ClusterJob {
  int cluster_id = 0;
  int class_id = 0;      // class the cluster stands for after matching
  bool known = false;
  std::vector<OracleSample> samples;  // high-confidence members, selection order
  // Labeled texts predicted as class_id, split by whether that prediction is
  // right. Only read for known clusters.
  std::vector<std::string> true_positives;
  std::vector<std::string> false_positives;
};

struct MiningResult {
  std::vector<Pattern> patterns;                    // carried ones first, then creation order
  std::map<std::string, std::string> matched;       // sample id -> pattern id (matching step)
  std::map<std::string, std::string> members;       // sample id -> pattern id (extraction step)
  std::vector<std::string> excluded;                // non-majority samples of extractions
  std::vector<int> failed_clusters;
  std::vector<std::string> errors;                  // one per failed cluster

  const Pattern* find(const std::string& pattern_id) const;
};

// Walks the clusters in the given (rank) order: match against the growing
// pattern set (seeded with `initial`, the previous round's patterns), extract
// one pattern from what is left when the class has none yet, refine the
// class's pattern when the cluster is known. At most one pattern per class.
// A cluster whose oracle exchange fails is skipped and recorded; the round
// continues.
MiningResult mine_all(PatternOracle& oracle, const std::vector<ClusterJob>& ranked,
                      const PatternEncoder& encode, std::vector<Pattern> initial = {});

}  // namespace catdisco
