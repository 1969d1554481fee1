#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "catdisco/dataset.hpp"
#include "catdisco/mining.hpp"

namespace catdisco {

struct ReassignInputs {
  // sample id -> pattern id, from the matching step of mining
  std::map<std::string, std::string> mining_matches;
  // verdicts of the fresh match over low-confidence and excluded samples
  std::vector<OracleVerdict> reverdicts;
  // samples whose re-verdict could not be obtained
  std::set<std::string> stale;
  std::set<std::string> low_confidence;
  // pattern id -> owner class
  std::map<std::string, int> owners;
};

// Rewrites the cluster-derived records of this round. Every record's
// `previous` is its cluster label; mining matches take their pattern's
// owner, then re-verdicts override them (a new-category re-verdict restores
// the cluster label). Stale samples stay on the cluster label.
std::vector<PseudoLabelRecord> reassign(const std::vector<PseudoLabelRecord>& cluster_records,
                                        const ReassignInputs& in);

// Appends {sample_id, previous, current, source, round} for every record not
// sourced from clustering.
void append_reassign_audit(const std::vector<PseudoLabelRecord>& records, int round,
                           const std::filesystem::path& path);

}  // namespace catdisco
