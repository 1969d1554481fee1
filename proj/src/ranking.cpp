#include "catdisco/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace catdisco {

std::vector<ClusterStats> rank_clusters(std::vector<ClusterStats> stats, double sigma) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw std::invalid_argument("rank_clusters: sigma must lie in [0, 1]");
  for (auto& s : stats) s.rank_score = sigma * s.compactness + (1.0 - sigma) * s.size_score;
  std::stable_sort(stats.begin(), stats.end(), [](const ClusterStats& a, const ClusterStats& b) {
    if (a.rank_score != b.rank_score) return a.rank_score > b.rank_score;
    if (a.size != b.size) return a.size > b.size;
    return a.cluster_id < b.cluster_id;
  });
  return stats;
}

AssignmentDistribution assignment_distribution(std::span<const double> point, const Matrix& centers,
                                               double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("assignment_distribution: alpha must be positive");
  if (centers.empty()) throw std::invalid_argument("assignment_distribution: no centers");
  const std::size_t K = centers.rows();
  AssignmentDistribution out;
  out.q.resize(K);
  out.nearest_distance = std::numeric_limits<double>::infinity();

  // Work in log space: log kernel = -(alpha+1)/2 * log(1 + d^2/alpha).
  std::vector<double> logk(K);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < K; ++j) {
    const double d2 = squared_distance(point, centers.row(j));
    const double d = std::sqrt(d2);
    if (d < out.nearest_distance) {
      out.nearest_distance = d;
      out.nearest = static_cast<int>(j);
    }
    logk[j] = -0.5 * (alpha + 1.0) * std::log1p(d2 / alpha);
    max_log = std::max(max_log, logk[j]);
  }
  double z = 0.0;
  for (std::size_t j = 0; j < K; ++j) z += std::exp(logk[j] - max_log);
  const double log_z = max_log + std::log(z);
  for (std::size_t j = 0; j < K; ++j) {
    const double log_q = logk[j] - log_z;
    out.q[j] = std::exp(log_q);
    out.entropy -= out.q[j] * log_q;
  }
  out.entropy = std::max(0.0, out.entropy);
  return out;
}

namespace {

std::vector<std::size_t> order_by(const std::vector<AssignmentDistribution>& xs, auto key) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double ka = key(xs[a]), kb = key(xs[b]);
    if (ka != kb) return ka < kb;
    return xs[a].sample_id < xs[b].sample_id;
  });
  return idx;
}

}  // namespace

std::vector<std::string> select_high_confidence(const std::vector<AssignmentDistribution>& members,
                                                int k_high) {
  if (k_high <= 0 || members.empty()) return {};
  const std::size_t k = std::min(static_cast<std::size_t>(k_high), members.size());
  const auto by_distance = order_by(members, [](const auto& m) { return m.nearest_distance; });
  const auto by_entropy = order_by(members, [](const auto& m) { return m.entropy; });

  std::unordered_set<std::size_t> top_entropy(by_entropy.begin(), by_entropy.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<std::string> out;
  std::vector<char> taken(members.size(), 0);
  auto take = [&](std::size_t i) {
    if (out.size() < k && !taken[i]) {
      taken[i] = 1;
      out.push_back(members[i].sample_id);
    }
  };
  for (std::size_t r = 0; r < k; ++r)
    if (top_entropy.count(by_distance[r])) take(by_distance[r]);
  for (std::size_t i : by_distance) take(i);
  for (std::size_t i : by_entropy) take(i);
  return out;
}

std::vector<std::string> select_low_confidence(const std::vector<AssignmentDistribution>& all,
                                               const std::vector<bool>& unstable, int k_low) {
  if (unstable.size() != all.size())
    throw std::invalid_argument("select_low_confidence: instability map size mismatch");
  if (k_low <= 0) return {};
  auto by_entropy_desc = order_by(all, [](const auto& m) { return -m.entropy; });
  by_entropy_desc.resize(std::min(by_entropy_desc.size(), static_cast<std::size_t>(k_low)));
  std::vector<std::string> out;
  for (std::size_t i : by_entropy_desc)
    if (unstable[i]) out.push_back(all[i].sample_id);
  return out;
}

}  // namespace catdisco
