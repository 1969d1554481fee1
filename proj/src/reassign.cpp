#include "catdisco/reassign.hpp"

#include <fstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "catdisco/errors.hpp"

namespace catdisco {

std::vector<PseudoLabelRecord> reassign(const std::vector<PseudoLabelRecord>& cluster_records,
                                        const ReassignInputs& in) {
  std::map<std::string, const OracleVerdict*> verdict_of;
  for (const auto& v : in.reverdicts) verdict_of[v.sample_id] = &v;

  auto owner_of = [&](const std::string& pattern_id) -> std::optional<int> {
    auto it = in.owners.find(pattern_id);
    if (it == in.owners.end()) {
      spdlog::warn("verdict names unknown pattern {}", pattern_id);
      return std::nullopt;
    }
    return it->second;
  };

  std::vector<PseudoLabelRecord> out;
  out.reserve(cluster_records.size());
  for (const auto& base : cluster_records) {
    PseudoLabelRecord r;
    r.sample_id = base.sample_id;
    r.previous = base.current;
    r.current = base.current;
    r.source = LabelSource::cluster;

    if (in.stale.count(base.sample_id)) {
      r.stale = true;
    } else if (auto v = verdict_of.find(base.sample_id); v != verdict_of.end()) {
      if (!v->second->is_new()) {
        if (auto owner = owner_of(*v->second->assigned)) {
          r.current = *owner;
          r.source = in.low_confidence.count(base.sample_id) ? LabelSource::low_confidence_reassign
                                                             : LabelSource::consensus_reassign;
        }
      }
    } else if (auto m = in.mining_matches.find(base.sample_id); m != in.mining_matches.end()) {
      if (auto owner = owner_of(m->second)) {
        r.current = *owner;
        r.source = LabelSource::pattern_match;
      }
    }
    r.changed = r.current != *r.previous;
    out.push_back(std::move(r));
  }
  return out;
}

void append_reassign_audit(const std::vector<PseudoLabelRecord>& records, int round,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot write reassignment audit '" + path.string() + "'");
  for (const auto& r : records) {
    if (r.source == LabelSource::cluster) continue;
    nlohmann::json j{{"sample_id", r.sample_id},
                     {"previous", r.previous ? nlohmann::json(*r.previous) : nlohmann::json()},
                     {"current", r.current},
                     {"source", to_string(r.source)},
                     {"round", round}};
    out << j.dump() << '\n';
  }
}

}  // namespace catdisco
