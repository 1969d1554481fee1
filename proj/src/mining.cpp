#include "catdisco/mining.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "catdisco/errors.hpp"

namespace catdisco {

const Pattern* MiningResult::find(const std::string& pattern_id) const {
  for (const auto& p : patterns)
    if (p.pattern_id == pattern_id) return &p;
  return nullptr;
}

MiningResult mine_all(PatternOracle& oracle, const std::vector<ClusterJob>& ranked,
                      const PatternEncoder& encode, std::vector<Pattern> initial) {
  MiningResult out;
  out.patterns = std::move(initial);
  int next_id = 0;
  for (const auto& p : out.patterns)
    if (p.pattern_id.rfind("pattern-", 0) == 0) next_id = std::max(next_id, std::stoi(p.pattern_id.substr(8)));
  for (const auto& job : ranked) {
    if (job.samples.empty()) continue;
    try {
      const auto verdicts = oracle.match_samples(job.samples, out.patterns);
      std::vector<OracleSample> unmatched;
      std::map<std::string, std::string> matched;
      for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (verdicts[i].is_new())
          unmatched.push_back(job.samples[i]);
        else
          matched.emplace(verdicts[i].sample_id, *verdicts[i].assigned);
      }

      std::optional<Pattern> created;
      ExtractionReport report;
      bool owner_taken = false;
      for (const auto& p : out.patterns) owner_taken = owner_taken || p.owner == job.class_id;
      if (!unmatched.empty() && !owner_taken) {
        report = oracle.extract_pattern(unmatched);
        Pattern p;
        p.pattern_id = "pattern-" + std::to_string(++next_id);
        p.owner = job.class_id;
        p.text = report.dominant_pattern_text;
        p.embedding = encode(p.text);
        if (job.known) p = oracle.refine_pattern(p, job.true_positives, job.false_positives, encode);
        created = std::move(p);
      } else {
        // Class already has a pattern (or nothing is left): leftovers go back to reassignment.
        if (owner_taken && job.known)
          for (auto& p : out.patterns)
            if (p.owner == job.class_id) p = oracle.refine_pattern(p, job.true_positives, job.false_positives, encode);
        for (const auto& s : unmatched) report.excluded_ids.push_back(s.id);
      }

      out.matched.insert(matched.begin(), matched.end());
      if (created) {
        for (const auto& id : report.member_ids) out.members.emplace(id, created->pattern_id);
        out.patterns.push_back(std::move(*created));
      }
      out.excluded.insert(out.excluded.end(), report.excluded_ids.begin(), report.excluded_ids.end());
    } catch (const OracleError& e) {
      spdlog::warn("mining skipped cluster {}: {}", job.cluster_id, e.what());
      out.failed_clusters.push_back(job.cluster_id);
      out.errors.push_back(e.what());
    }
  }
  return out;
}

}  // namespace catdisco
