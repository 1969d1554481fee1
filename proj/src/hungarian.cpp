#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "catdisco/alignment.hpp"

namespace catdisco {

namespace {

struct Solution {
  std::vector<int> row_to_col;  // every row assigned
  std::vector<double> u, v;     // duals, 1-based as in the solver
  double cost = 0.0;
};

// Shortest augmenting path with potentials; requires rows <= cols.
Solution solve_wide(const Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Solution s;
  s.row_to_col.assign(n, -1);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) s.row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  for (std::size_t i = 0; i < n; ++i) s.cost += a(i, static_cast<std::size_t>(s.row_to_col[i]));
  s.u = std::move(u);
  s.v = std::move(v);
  return s;
}

// Optimal cost of assigning rows [first, n) to the columns not in `taken`.
Solution solve_restricted(const Matrix& a, std::size_t first, const std::vector<char>& taken,
                          std::vector<std::size_t>& cols_out) {
  cols_out.clear();
  for (std::size_t j = 0; j < a.cols(); ++j)
    if (!taken[j]) cols_out.push_back(j);
  Matrix sub(a.rows() - first, cols_out.size());
  for (std::size_t i = first; i < a.rows(); ++i)
    for (std::size_t k = 0; k < cols_out.size(); ++k) sub(i - first, k) = a(i, cols_out[k]);
  if (sub.rows() == 0) return {};
  return solve_wide(sub);
}

// Walks rows in order and moves each one to the lowest column that still
// admits an optimal completion. Only edges tight under the optimal duals can
// appear in an optimal assignment, so most candidates are skipped cheaply.
std::vector<int> lexicographic_optimum(const Matrix& a, Solution s) {
  const std::size_t n = a.rows();
  double scale = 1.0;
  for (double x : a.data()) scale = std::max(scale, std::abs(x));
  const double tol = 1e-9 * scale;
  const double total_tol = tol * static_cast<double>(n + 1);

  std::vector<int> current = s.row_to_col;
  std::vector<char> taken(a.cols(), 0);
  double fixed_cost = 0.0;
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < static_cast<std::size_t>(current[i]); ++j) {
      if (taken[j]) continue;
      if (a(i, j) - s.u[i + 1] - s.v[j + 1] > tol) continue;
      taken[j] = 1;
      const Solution rest = solve_restricted(a, i + 1, taken, cols);
      if (std::abs(fixed_cost + a(i, j) + rest.cost - s.cost) <= total_tol) {
        current[i] = static_cast<int>(j);
        for (std::size_t r = 0; r < rest.row_to_col.size(); ++r)
          current[i + 1 + r] = static_cast<int>(cols[static_cast<std::size_t>(rest.row_to_col[r])]);
        taken[j] = 0;
        break;
      }
      taken[j] = 0;
    }
    taken[static_cast<std::size_t>(current[i])] = 1;
    fixed_cost += a(i, static_cast<std::size_t>(current[i]));
  }
  return current;
}

}  // namespace

Assignment hungarian(const Matrix& cost) {
  if (cost.rows() == 0 || cost.cols() == 0) throw std::invalid_argument("hungarian: empty cost matrix");
  for (double x : cost.data())
    if (!std::isfinite(x)) throw std::invalid_argument("hungarian: non-finite cost entry");

  const bool transpose = cost.rows() > cost.cols();
  const Matrix a = transpose ? cost.transposed() : cost;
  const std::vector<int> wide = lexicographic_optimum(a, solve_wide(a));

  Assignment out;
  if (!transpose) {
    out.row_to_col = wide;
  } else {
    out.row_to_col.assign(cost.rows(), -1);
    for (std::size_t c = 0; c < wide.size(); ++c) out.row_to_col[static_cast<std::size_t>(wide[c])] = static_cast<int>(c);
  }
  for (std::size_t r = 0; r < out.row_to_col.size(); ++r)
    if (out.row_to_col[r] >= 0) out.cost += cost(r, static_cast<std::size_t>(out.row_to_col[r]));
  return out;
}

Matching match_clusters(const Matrix& centers, const Matrix& labeled_centroids,
                        std::span<const int> known_ids, std::span<const int> novel_priority) {
  const std::size_t K = centers.rows();
  const std::size_t nk = labeled_centroids.rows();
  if (known_ids.size() != nk) throw std::invalid_argument("match_clusters: known id count mismatch");
  if (nk > K) throw std::invalid_argument("match_clusters: more known classes than clusters");
  if (nk > 0 && labeled_centroids.cols() != centers.cols())
    throw std::invalid_argument("match_clusters: dimension mismatch");

  Matching m;
  m.class_of_cluster.assign(K, -1);
  if (nk > 0) {
    // Square problem: sentinel rows absorb the clusters no known class takes.
    Matrix cost(K, K, 0.0);
    double max_cost = 0.0;
    for (std::size_t r = 0; r < nk; ++r)
      for (std::size_t c = 0; c < K; ++c) {
        cost(r, c) = distance(labeled_centroids.row(r), centers.row(c));
        max_cost = std::max(max_cost, cost(r, c));
      }
    const double sentinel = 1e6 * std::max(max_cost, 1.0);
    for (std::size_t r = nk; r < K; ++r)
      for (std::size_t c = 0; c < K; ++c) cost(r, c) = sentinel;
    const Assignment asg = hungarian(cost);
    for (std::size_t r = 0; r < nk; ++r) {
      const int c = asg.row_to_col[r];
      m.cluster_to_class[c] = known_ids[r];
      m.class_of_cluster[static_cast<std::size_t>(c)] = known_ids[r];
      m.cost += cost(r, static_cast<std::size_t>(c));
    }
  }

  std::set<int> used(known_ids.begin(), known_ids.end());
  std::vector<int> free_ids;
  for (int id = 0; id < static_cast<int>(K); ++id)
    if (!used.count(id)) free_ids.push_back(id);

  std::vector<int> order(novel_priority.begin(), novel_priority.end());
  for (int c = 0; c < static_cast<int>(K); ++c)
    if (std::find(order.begin(), order.end(), c) == order.end()) order.push_back(c);
  std::size_t next = 0;
  for (int c : order) {
    if (c < 0 || c >= static_cast<int>(K)) continue;
    if (m.class_of_cluster[static_cast<std::size_t>(c)] != -1) continue;
    m.novel_clusters.push_back(c);
    m.class_of_cluster[static_cast<std::size_t>(c)] = free_ids.at(next++);
  }
  return m;
}

void carry_novel_ids(Matching& m, const Matrix& centers, const std::map<int, Vec>& previous) {
  if (m.novel_clusters.empty()) return;
  std::vector<int> ids;
  for (int c : m.novel_clusters) ids.push_back(m.class_of_cluster[static_cast<std::size_t>(c)]);
  std::sort(ids.begin(), ids.end());

  std::vector<int> prev_ids;
  for (int id : ids)
    if (previous.count(id)) prev_ids.push_back(id);
  if (prev_ids.empty()) return;

  Matrix cost(prev_ids.size(), m.novel_clusters.size());
  for (std::size_t r = 0; r < prev_ids.size(); ++r)
    for (std::size_t k = 0; k < m.novel_clusters.size(); ++k)
      cost(r, k) = distance(previous.at(prev_ids[r]),
                            centers.row(static_cast<std::size_t>(m.novel_clusters[k])));
  const Assignment asg = hungarian(cost);

  std::vector<int> fresh(m.novel_clusters.size(), -1);
  std::set<int> taken;
  for (std::size_t r = 0; r < prev_ids.size(); ++r)
    if (asg.row_to_col[r] >= 0) {
      fresh[static_cast<std::size_t>(asg.row_to_col[r])] = prev_ids[r];
      taken.insert(prev_ids[r]);
    }
  std::vector<int> spare;
  for (int id : ids)
    if (!taken.count(id)) spare.push_back(id);
  std::size_t next = 0;
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    if (fresh[k] == -1) fresh[k] = spare.at(next++);
    m.class_of_cluster[static_cast<std::size_t>(m.novel_clusters[k])] = fresh[k];
  }
}

}  // namespace catdisco
