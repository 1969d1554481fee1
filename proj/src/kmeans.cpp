#include <algorithm>
#include <cassert>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>

#include "catdisco/alignment.hpp"
#include "catdisco/clustering.hpp"

namespace catdisco {

namespace {

// Greedy k-means++: every step draws a few D^2-weighted candidates and keeps
// the one that lowers the potential most (2 + ln K trials).
Matrix kmeanspp_init(const Matrix& points, int K, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  Matrix centers(static_cast<std::size_t>(K), points.cols());
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centers.set_row(0, points.row(pick(rng)));

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centers.row(0));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(K)));
  std::vector<double> cand_d2(n), best_d2(n);
  for (int k = 1; k < K; ++k) {
    double total = 0.0;
    for (double x : d2) total += x;
    std::size_t chosen = 0;
    if (total <= 0.0) {
      chosen = pick(rng);
      for (std::size_t i = 0; i < n; ++i) best_d2[i] = std::min(d2[i], squared_distance(points.row(i), points.row(chosen)));
    } else {
      double best_potential = std::numeric_limits<double>::infinity();
      for (int t = 0; t < trials; ++t) {
        const double target = unif(rng) * total;
        double acc = 0.0;
        std::size_t c = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += d2[i];
          if (acc > target) {
            c = i;
            break;
          }
        }
        double potential = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          cand_d2[i] = std::min(d2[i], squared_distance(points.row(i), points.row(c)));
          potential += cand_d2[i];
        }
        if (potential < best_potential) {
          best_potential = potential;
          chosen = c;
          best_d2.swap(cand_d2);
        }
      }
    }
    centers.set_row(static_cast<std::size_t>(k), points.row(chosen));
    d2.swap(best_d2);
  }
  return centers;
}

int nearest_center(std::span<const double> p, const Matrix& centers) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centers.rows(); ++k) {
    const double d = squared_distance(p, centers.row(k));
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

double objective(const Matrix& points, const std::vector<int>& asg, const Matrix& centers) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i)
    s += squared_distance(points.row(i), centers.row(static_cast<std::size_t>(asg[i])));
  return s;
}

// Moves the farthest point of a multi-member cluster into each empty cluster.
void repair_empty(const Matrix& points, std::vector<int>& asg, Matrix& centers) {
  const std::size_t K = centers.rows();
  std::vector<std::size_t> counts(K, 0);
  for (int a : asg) ++counts[static_cast<std::size_t>(a)];
  for (std::size_t k = 0; k < K; ++k) {
    if (counts[k] != 0) continue;
    std::size_t far = points.rows();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      const auto owner = static_cast<std::size_t>(asg[i]);
      if (counts[owner] < 2) continue;
      const double d = squared_distance(points.row(i), centers.row(owner));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == points.rows()) continue;  // cannot happen while n >= K
    --counts[static_cast<std::size_t>(asg[far])];
    asg[far] = static_cast<int>(k);
    counts[k] = 1;
    centers.set_row(k, points.row(far));
  }
}

void update_centers(const Matrix& points, const std::vector<int>& asg, Matrix& centers) {
  const std::size_t K = centers.rows();
  Matrix sums(K, points.cols(), 0.0);
  std::vector<std::size_t> counts(K, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto k = static_cast<std::size_t>(asg[i]);
    axpy(1.0, points.row(i), sums.row(k));
    ++counts[k];
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (counts[k] == 0) continue;
    auto row = sums.row(k);
    for (double& x : row) x /= static_cast<double>(counts[k]);
    centers.set_row(k, row);
  }
}

}  // namespace

ClusteringResult kmeans(const Matrix& points, int K, std::uint64_t seed, int max_iter) {
  if (K < 2) throw std::invalid_argument("kmeans: K must be at least 2");
  if (points.rows() < static_cast<std::size_t>(K))
    throw std::invalid_argument("kmeans: fewer points (" + std::to_string(points.rows()) +
                                ") than clusters (" + std::to_string(K) + ")");

  std::mt19937_64 rng(seed);
  ClusteringResult res;
  res.run_seed = seed;
  res.centers = kmeanspp_init(points, K, rng);
  res.assignments.assign(points.rows(), -1);

  for (int it = 0; it < max_iter; ++it) {
    std::vector<int> next(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) next[i] = nearest_center(points.row(i), res.centers);
    repair_empty(points, next, res.centers);
    const bool fixpoint = next == res.assignments;
    res.assignments = std::move(next);
    update_centers(points, res.assignments, res.centers);
    res.inertia_trace.push_back(objective(points, res.assignments, res.centers));
    res.iterations = it + 1;
    if (fixpoint) break;
  }
  res.inertia = res.inertia_trace.back();
  return res;
}

MultiRunResult multi_run(const Matrix& points, int K, std::uint64_t base_seed, int runs, int max_iter) {
  if (runs < 1) throw std::invalid_argument("multi_run: runs must be at least 1");
  std::vector<std::future<ClusteringResult>> jobs;
  for (int r = 0; r < runs; ++r)
    jobs.push_back(std::async(std::launch::async, [&points, K, max_iter, seed = base_seed + static_cast<std::uint64_t>(r)] {
      return kmeans(points, K, seed, max_iter);
    }));

  MultiRunResult out;
  for (auto& j : jobs) out.runs.push_back(j.get());
  for (std::size_t r = 1; r < out.runs.size(); ++r)
    if (out.runs[r].inertia < out.runs[out.reference].inertia) out.reference = r;

  const Matrix& ref = out.runs[out.reference].centers;
  for (std::size_t r = 0; r < out.runs.size(); ++r) {
    if (r == out.reference) continue;
    ClusteringResult& run = out.runs[r];
    Matrix cost(static_cast<std::size_t>(K), static_cast<std::size_t>(K));
    for (std::size_t a = 0; a < cost.rows(); ++a)
      for (std::size_t b = 0; b < cost.cols(); ++b) cost(a, b) = distance(run.centers.row(a), ref.row(b));
    const Assignment asg = hungarian(cost);  // run id -> reference id
    Matrix relabeled(run.centers.rows(), run.centers.cols());
    for (std::size_t a = 0; a < cost.rows(); ++a)
      relabeled.set_row(static_cast<std::size_t>(asg.row_to_col[a]), run.centers.row(a));
    run.centers = std::move(relabeled);
    for (int& id : run.assignments) id = asg.row_to_col[static_cast<std::size_t>(id)];
  }
  return out;
}

std::vector<ClusterStats> cluster_stats(const ClusteringResult& result, const Matrix& points) {
  const std::size_t K = result.centers.rows();
  std::vector<ClusterStats> stats(K);
  for (std::size_t k = 0; k < K; ++k) stats[k].cluster_id = static_cast<int>(k);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto k = static_cast<std::size_t>(result.assignments[i]);
    ++stats[k].size;
    stats[k].mean_intra_distance += distance(points.row(i), result.centers.row(k));
  }
  for (auto& s : stats)
    if (s.size > 0) s.mean_intra_distance /= static_cast<double>(s.size);

  fill_cluster_scores(stats);
  return stats;
}

void fill_cluster_scores(std::vector<ClusterStats>& stats) {
  if (stats.empty()) return;
  const auto [dmin, dmax] = std::minmax_element(stats.begin(), stats.end(), [](const auto& a, const auto& b) {
    return a.mean_intra_distance < b.mean_intra_distance;
  });
  const auto [smin, smax] = std::minmax_element(stats.begin(), stats.end(), [](const auto& a, const auto& b) {
    return a.size < b.size;
  });
  const double lo_d = dmin->mean_intra_distance, hi_d = dmax->mean_intra_distance;
  const double lo_s = static_cast<double>(smin->size), hi_s = static_cast<double>(smax->size);
  for (auto& s : stats) {
    s.compactness = hi_d != lo_d ? (hi_d - s.mean_intra_distance) / (hi_d - lo_d) : 1.0;
    s.size_score = hi_s != lo_s ? (static_cast<double>(s.size) - lo_s) / (hi_s - lo_s) : 1.0;
  }
}

std::vector<bool> instability(const std::vector<ClusteringResult>& aligned_runs) {
  if (aligned_runs.empty()) return {};
  const std::size_t n = aligned_runs.front().assignments.size();
  std::vector<bool> unstable(n, false);
  for (const auto& run : aligned_runs) {
    assert(run.assignments.size() == n);
    for (std::size_t i = 0; i < n; ++i)
      if (run.assignments[i] != aligned_runs.front().assignments[i]) unstable[i] = true;
  }
  return unstable;
}

}  // namespace catdisco
