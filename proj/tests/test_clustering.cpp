#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "catdisco/alignment.hpp"
#include "catdisco/clustering.hpp"
#include "catdisco/metrics.hpp"
#include "catdisco/synth.hpp"
#include "support.hpp"

using namespace catdisco;

namespace {

Matrix rows(std::vector<Vec> r) { return Matrix::from_rows(r); }

std::vector<int> truth_of(const DatasetBundle& d, Split s) {
  std::vector<int> t;
  for (auto i : d.indices_of(s)) t.push_back(*d.samples[i].ground_truth());
  return t;
}

}  // namespace

TEST(Hungarian, IdentityCost) {
  Matrix c(3, 3, 1.0);
  for (std::size_t i = 0; i < 3; ++i) c(i, i) = 0.0;
  const auto a = hungarian(c);
  EXPECT_EQ(a.row_to_col, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(a.cost, 0.0);
}

TEST(Hungarian, TwoByTwo) {
  const auto a = hungarian(rows({{1, 2}, {2, 1}}));
  EXPECT_EQ(a.row_to_col, (std::vector<int>{0, 1}));
  EXPECT_EQ(a.cost, 2.0);
}

TEST(Hungarian, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> dim(1, 7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = dim(rng), n = dim(rng);
    // integer costs so ties show up and the comparison can be exact
    Matrix c(m, n);
    std::uniform_int_distribution<int> v(0, 9);
    for (auto& x : c.data()) x = v(rng);
    const auto a = hungarian(c);
    EXPECT_EQ(a.cost, testsupport::brute_force_assignment(c)) << m << "x" << n << " trial " << trial;
    // the reported assignment is valid and achieves the reported cost
    std::set<int> cols;
    double sum = 0;
    std::size_t assigned = 0;
    for (std::size_t r = 0; r < m; ++r)
      if (a.row_to_col[r] >= 0) {
        EXPECT_TRUE(cols.insert(a.row_to_col[r]).second);
        sum += c(r, static_cast<std::size_t>(a.row_to_col[r]));
        ++assigned;
      }
    EXPECT_EQ(assigned, std::min(m, n));
    EXPECT_EQ(sum, a.cost);
  }
}

TEST(Hungarian, RejectsBadInput) {
  EXPECT_THROW(hungarian(Matrix()), std::invalid_argument);
  EXPECT_THROW(hungarian(rows({{1, NAN}})), std::invalid_argument);
}

TEST(MatchClusters, ExactCentroidsPlusDistantExtras) {
  const Matrix centers = rows({{10, 10}, {0, 1}, {1, 0}, {-10, 5}});
  const Matrix labeled = rows({{1, 0}, {0, 1}});
  const std::vector<int> known{0, 1};
  const auto m = match_clusters(centers, labeled, known, std::vector<int>{});
  EXPECT_EQ(m.cluster_to_class.at(2), 0);
  EXPECT_EQ(m.cluster_to_class.at(1), 1);
  EXPECT_EQ(m.cost, 0.0);
  EXPECT_EQ(m.novel_clusters.size(), 2u);
  // novel ids are the free ids in ascending order, by cluster id here
  EXPECT_EQ(m.class_of_cluster, (std::vector<int>{2, 1, 0, 3}));
}

TEST(MatchClusters, OneKnownTwoClusters) {
  const auto m = match_clusters(rows({{0, 0}, {3, 0}}), rows({{2.5, 0}}), std::vector<int>{0},
                                std::vector<int>{});
  EXPECT_EQ(m.class_of_cluster, (std::vector<int>{1, 0}));
  EXPECT_EQ(m.novel_clusters, (std::vector<int>{0}));
}

TEST(MatchClusters, NovelPriorityOrdersFreeIds) {
  const auto m = match_clusters(rows({{0, 0}, {5, 5}, {9, 9}}), rows({{0, 0}}), std::vector<int>{0},
                                std::vector<int>{2, 1});
  EXPECT_EQ(m.class_of_cluster[2], 1);
  EXPECT_EQ(m.class_of_cluster[1], 2);
}

TEST(MatchClusters, RecoversGeneratorIdsOnCleanData) {
  SynthSpec spec;
  spec.noise = 0.02;
  const auto d = synth_gcd(spec);
  const auto un = d.embeddings_of(d.indices_of(Split::unlabeled));
  const auto mr = multi_run(un, d.K, 3, 5);
  const auto lab_idx = d.indices_of(Split::labeled);
  Matrix centroids;
  for (int c : d.known_classes) {
    std::vector<std::size_t> rs;
    for (std::size_t k = 0; k < lab_idx.size(); ++k)
      if (d.samples[lab_idx[k]].label() == c) rs.push_back(k);
    centroids.append_row(mean_of_rows(d.embeddings_of(lab_idx), rs));
  }
  const auto m = match_clusters(mr.reference_result().centers, centroids, d.known_classes, std::vector<int>{});
  const auto truth = truth_of(d, Split::unlabeled);
  for (auto [cluster, cls] : m.cluster_to_class) {
    std::map<int, int> votes;
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (mr.reference_result().assignments[i] == cluster) ++votes[truth[i]];
    const auto best = std::max_element(votes.begin(), votes.end(),
                                       [](auto& a, auto& b) { return a.second < b.second; });
    EXPECT_EQ(best->first, cls);
  }
}

TEST(CarryNovelIds, FollowsPreviousPrototypes) {
  const Matrix centers = rows({{1, 0}, {0, 1}, {-1, 0}});
  auto m = match_clusters(centers, rows({{1, 0}}), std::vector<int>{0}, std::vector<int>{});
  ASSERT_EQ(m.class_of_cluster, (std::vector<int>{0, 1, 2}));
  carry_novel_ids(m, centers, {{1, Vec{-1, 0.1}}, {2, Vec{0.1, 1}}});
  EXPECT_EQ(m.class_of_cluster, (std::vector<int>{0, 2, 1}));
}

TEST(KMeans, SquareCornersReachBruteForceOptimum) {
  const Matrix pts = rows({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  double best = 1e300;
  for (int mask = 1; mask < 15; ++mask) {
    double inertia = 0;
    for (int side = 0; side < 2; ++side) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < 4; ++i)
        if (((mask >> i) & 1) == side) members.push_back(i);
      const Vec c = mean_of_rows(pts, members);
      for (auto i : members) inertia += squared_distance(pts.row(i), c);
    }
    best = std::min(best, inertia);
  }
  // A single Lloyd run seeded on opposite corners stops at the 3+1 split
  // (inertia 4/3), a genuine fixpoint. The best of the usual five runs always
  // reaches the optimum.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = kmeans(pts, 2, seed);
    for (std::size_t i = 0; i < 4; ++i) {
      const double own = squared_distance(pts.row(i), r.centers.row(static_cast<std::size_t>(r.assignments[i])));
      for (std::size_t k = 0; k < 2; ++k) EXPECT_LE(own, squared_distance(pts.row(i), r.centers.row(k)));
    }
    EXPECT_TRUE(std::abs(r.inertia - best) < 1e-12 || std::abs(r.inertia - 4.0 / 3.0) < 1e-12) << r.inertia;
    EXPECT_NEAR(multi_run(pts, 2, seed, 5).reference_result().inertia, best, 1e-12) << "base seed " << seed;
  }
}

TEST(KMeans, SomeSeedFindsBestTwoPartition) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> count(3, 8);
  int misses = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = count(rng);
    const Matrix pts = testsupport::random_matrix(rng, n, 2, -1.0, 1.0);
    double best = 1e300;
    for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
      double inertia = 0;
      for (std::size_t side = 0; side < 2; ++side) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i)
          if (((mask >> i) & 1) == side) members.push_back(i);
        const Vec c = mean_of_rows(pts, members);
        for (auto i : members) inertia += squared_distance(pts.row(i), c);
      }
      best = std::min(best, inertia);
    }
    double found = 1e300;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto r = kmeans(pts, 2, seed);
      found = std::min(found, r.inertia);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < 2; ++k)
          EXPECT_LE(squared_distance(pts.row(i), r.centers.row(static_cast<std::size_t>(r.assignments[i]))),
                    squared_distance(pts.row(i), r.centers.row(k)) + 1e-12);
    }
    if (found > best + 1e-12) ++misses;
  }
  // Ten seeded restarts are not a guarantee: about 1% of random sets of this
  // size keep every restart in a worse fixpoint (plain seeding fares the
  // same). This stream has exactly one such set.
  EXPECT_LE(misses, 1);
}

TEST(KMeans, IdenticalPoints) {
  const Matrix pts = rows({{1, 1}, {1, 1}, {1, 1}, {1, 1}});
  const auto r = kmeans(pts, 2, 5);
  EXPECT_EQ(r.inertia, 0.0);
  for (int a : r.assignments) EXPECT_TRUE(a == 0 || a == 1);
  EXPECT_EQ(r.centers.rows(), 2u);
}

TEST(KMeans, InertiaNeverIncreases) {
  SynthSpec spec;
  spec.noise = 0.3;
  const auto d = synth_gcd(spec);
  const auto r = kmeans(d.embeddings_of(d.indices_of(Split::unlabeled)), 9, 11);
  for (std::size_t i = 1; i < r.inertia_trace.size(); ++i) EXPECT_LE(r.inertia_trace[i], r.inertia_trace[i - 1] + 1e-9);
}

TEST(KMeans, RejectsTooFewPoints) {
  EXPECT_THROW(kmeans(rows({{0, 0}}), 2, 1), std::invalid_argument);
  EXPECT_THROW(kmeans(rows({{0, 0}, {1, 1}}), 1, 1), std::invalid_argument);
}

TEST(KMeans, ZeroNoiseSynthIsPerfect) {
  SynthSpec spec;
  spec.noise = 0.0;
  const auto d = synth_gcd(spec);
  const auto r = kmeans(d.embeddings_of(d.indices_of(Split::unlabeled)), d.K, 1);
  EXPECT_EQ(aligned_accuracy(r.assignments, truth_of(d, Split::unlabeled), d.K).accuracy, 1.0);
}

TEST(MultiRun, SingleRunIsStable) {
  SynthSpec spec;
  spec.noise = 0.2;
  const auto d = synth_gcd(spec);
  const auto mr = multi_run(d.embeddings_of(d.indices_of(Split::unlabeled)), 9, 1, 1);
  EXPECT_EQ(mr.reference, 0u);
  for (bool u : instability(mr.runs)) EXPECT_FALSE(u);
}

TEST(MultiRun, WellSeparatedRunsAgree) {
  SynthSpec spec;
  spec.noise = 0.01;
  const auto d = synth_gcd(spec);
  const auto mr = multi_run(d.embeddings_of(d.indices_of(Split::unlabeled)), 9, 1, 5);
  ASSERT_EQ(mr.runs.size(), 5u);
  for (const auto& r : mr.runs) EXPECT_EQ(r.assignments, mr.reference_result().assignments);
}

TEST(MultiRun, ReferenceHasMinimalInertia) {
  SynthSpec spec;
  spec.noise = 0.35;
  const auto d = synth_gcd(spec);
  const auto mr = multi_run(d.embeddings_of(d.indices_of(Split::unlabeled)), 9, 4, 5);
  for (const auto& r : mr.runs) EXPECT_GE(r.inertia, mr.reference_result().inertia);
  for (std::size_t i = 0; i < mr.runs.size(); ++i) EXPECT_EQ(mr.runs[i].run_seed, 4u + i);
}

TEST(Instability, Unanimity) {
  auto run = [](std::vector<int> a) {
    ClusteringResult r;
    r.assignments = std::move(a);
    return r;
  };
  const std::vector<ClusteringResult> runs{run({3, 0}), run({3, 0}), run({1, 0}), run({3, 0}), run({3, 0})};
  EXPECT_EQ(instability(runs), (std::vector<bool>{true, false}));
}

TEST(ClusterStats, HandEvaluatedScores) {
  std::vector<ClusterStats> s(3);
  const double d[] = {2, 4, 6};
  const std::size_t n[] = {10, 30, 50};
  for (int i = 0; i < 3; ++i) {
    s[i].cluster_id = i;
    s[i].mean_intra_distance = d[i];
    s[i].size = n[i];
  }
  fill_cluster_scores(s);
  EXPECT_EQ(s[0].compactness, 1.0);
  EXPECT_EQ(s[1].compactness, 0.5);
  EXPECT_EQ(s[2].compactness, 0.0);
  EXPECT_EQ(s[0].size_score, 0.0);
  EXPECT_EQ(s[1].size_score, 0.5);
  EXPECT_EQ(s[2].size_score, 1.0);
}

TEST(ClusterStats, AllTiedScoreOne) {
  std::vector<ClusterStats> s(3);
  for (auto& x : s) {
    x.mean_intra_distance = 1.5;
    x.size = 7;
  }
  fill_cluster_scores(s);
  for (const auto& x : s) {
    EXPECT_EQ(x.compactness, 1.0);
    EXPECT_EQ(x.size_score, 1.0);
  }
}

TEST(ClusterStats, FromClustering) {
  ClusteringResult r;
  r.assignments = {0, 0, 1};
  r.centers = rows({{0, 0}, {5, 0}});
  const auto s = cluster_stats(r, rows({{1, 0}, {-1, 0}, {5, 2}}));
  EXPECT_EQ(s[0].size, 2u);
  EXPECT_DOUBLE_EQ(s[0].mean_intra_distance, 1.0);
  EXPECT_DOUBLE_EQ(s[1].mean_intra_distance, 2.0);
  EXPECT_EQ(s[0].compactness, 1.0);
  EXPECT_EQ(s[1].size_score, 0.0);
}
