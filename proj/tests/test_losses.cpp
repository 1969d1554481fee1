#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "catdisco/losses.hpp"
#include "catdisco/projection.hpp"
#include "support.hpp"

using namespace catdisco;
using testsupport::numeric_gradient;
using testsupport::random_vec;
using testsupport::relative_error;

namespace {

constexpr int kTrials = 120;
constexpr double kTol = 1e-4;

Vec concat(const std::vector<Vec>& parts) {
  Vec out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<Vec> split(const Vec& flat, std::size_t n, std::size_t dim) {
  std::vector<Vec> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].assign(flat.begin() + static_cast<long>(i * dim), flat.begin() + static_cast<long>((i + 1) * dim));
  return out;
}

// -log softmax of index 0 over cos(a, c_k) / tau, written out directly.
double plain_nce(const Vec& a, const Vec& pos, const std::vector<Vec>& negs, double tau) {
  double denom = std::exp(cosine(a, pos) / tau);
  for (const auto& n : negs) denom += std::exp(cosine(a, n) / tau);
  return -std::log(std::exp(cosine(a, pos) / tau) / denom);
}

}  // namespace

TEST(InfoNce, UniformSimilarities) {
  const Vec a{1, 0, 0};
  const Vec p{0, 1, 0};
  std::vector<Vec> negs(10, Vec{0, 0, 1});
  EXPECT_NEAR(info_nce(a, p, negs, 0.07).loss, std::log(11.0), 1e-12);
  EXPECT_NEAR(std::log(11.0), 2.3979, 1e-4);
}

TEST(InfoNce, Saturated) {
  const Vec a{1, 0};
  std::vector<Vec> negs(10, Vec{-1, 0});
  EXPECT_LT(info_nce(a, a, negs, 0.07).loss, 1e-9);
}

TEST(InfoNce, RejectsDegenerateInput) {
  EXPECT_THROW(info_nce(Vec{0, 0}, Vec{1, 0}, {Vec{0, 1}}, 0.1), std::invalid_argument);
  EXPECT_THROW(info_nce(Vec{1, 0}, Vec{1, 0}, {}, 0.1), std::invalid_argument);
  EXPECT_THROW(info_nce(Vec{1, 0}, Vec{1, 0}, {Vec{0, 1}}, 0.0), std::invalid_argument);
}

TEST(InfoNce, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(101);
  const std::size_t D = 8, N = 10;
  for (int t = 0; t < kTrials; ++t) {
    const double tau = t % 2 ? 0.07 : 0.5;
    const Vec a = random_vec(rng, D, false), p = random_vec(rng, D, false);
    std::vector<Vec> negs;
    for (std::size_t k = 0; k < N; ++k) negs.push_back(random_vec(rng, D, false));
    const auto r = info_nce(a, p, negs, tau);
    EXPECT_NEAR(r.loss, plain_nce(a, p, negs, tau), 1e-9);

    std::vector<Vec> all{a, p};
    all.insert(all.end(), negs.begin(), negs.end());
    const auto f = [&](const Vec& flat) {
      const auto parts = split(flat, N + 2, D);
      return info_nce(parts[0], parts[1], std::vector<Vec>(parts.begin() + 2, parts.end()), tau).loss;
    };
    std::vector<Vec> grads{r.d_anchor, r.d_positive};
    grads.insert(grads.end(), r.d_negatives.begin(), r.d_negatives.end());
    EXPECT_LT(relative_error(concat(grads), numeric_gradient(f, concat(all))), kTol) << "trial " << t;
  }
}

TEST(PrototypeLoss, ZeroWeight) {
  const auto r = prototype_loss(Vec{1, 2}, Vec{2, 1}, {Vec{-1, 0}}, 0.1, 0.0);
  EXPECT_EQ(r.loss, 0.0);
  for (double g : r.d_anchor) EXPECT_EQ(g, 0.0);
}

TEST(PrototypeLoss, LinearInWeight) {
  const auto one = prototype_loss(Vec{1, 2}, Vec{2, 1}, {Vec{-1, 0}, Vec{0, -3}}, 0.1, 1.0);
  const auto two = prototype_loss(Vec{1, 2}, Vec{2, 1}, {Vec{-1, 0}, Vec{0, -3}}, 0.1, 2.0);
  EXPECT_EQ(two.loss, 2.0 * one.loss);
}

TEST(PrototypeLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> w(0.1, 25.0);
  const std::size_t D = 8, N = 10;
  for (int t = 0; t < kTrials; ++t) {
    const double weight = w(rng);
    const Vec z = random_vec(rng, D, false), own = random_vec(rng, D);
    std::vector<Vec> negs;
    for (std::size_t k = 0; k < N; ++k) negs.push_back(random_vec(rng, D));
    const auto r = prototype_loss(z, own, negs, 0.07, weight);
    const auto f = [&](const Vec& x) { return prototype_loss(x, own, negs, 0.07, weight).loss; };
    EXPECT_LT(relative_error(r.d_anchor, numeric_gradient(f, z)), kTol) << "trial " << t;
  }
}

TEST(PlObjectives, NovelOnlyBatchHasNoKnownTerm) {
  const std::map<int, Vec> pu{{0, {1, 0}}, {1, {0, 1}}, {2, {-1, 0}}};
  const std::map<int, Vec> pl{{0, {1, 0}}};
  const std::vector<PlSample> batch{{{0.2, 1}, 1, 1.0, {0, 2}, {}}, {{-1, 0.3}, 2, 1.0, {0, 1}, {}}};
  const auto r = pl_objectives(batch, {0}, pu, pl, 0.1);
  EXPECT_EQ(r.known(), 0.0);
  EXPECT_GT(r.novel, 0.0);
}

TEST(PlObjectives, IdenticalTargetsGiveEqualKnownTerms) {
  const std::map<int, Vec> p{{0, {1, 0}}, {1, {0, 1}}, {2, {-1, 0}}};
  const std::vector<PlSample> batch{{{0.9, 0.2}, 0, 1.0, {1, 2}, {1, 2}}, {{0.1, 1}, 1, 2.0, {0, 2}, {0, 2}}};
  const auto r = pl_objectives(batch, {0, 1}, p, p, 0.2);
  EXPECT_DOUBLE_EQ(r.known_u, r.known_l);
}

TEST(PlObjectives, MissingPrototypeNamesClass) {
  const std::map<int, Vec> pu{{0, {1, 0}}};
  try {
    pl_objectives({{{1, 0}, 0, 1.0, {7}, {}}}, {}, pu, {}, 0.1);
    FAIL() << "expected a throw";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
  }
}

TEST(PlObjectives, MatchesStraightLineFixture) {
  // three classes (0 and 1 known, 2 novel), six samples
  const std::map<int, Vec> pu{{0, {1, 0, 0}}, {1, {0, 1, 0}}, {2, {0, 0, 1}}};
  const std::map<int, Vec> pl{{0, {0.9, 0.1, 0}}, {1, {0.1, 0.9, 0.1}}};
  const std::vector<PlSample> batch{
      {{1, 0.2, 0.1}, 0, 1.0, {1, 2}, {1}},  {{0.5, 0.5, 0}, 0, 3.0, {2, 1}, {1}},
      {{0, 1, 0.3}, 1, 1.0, {0, 2}, {0}},    {{0.2, 0.1, 1}, 2, 1.0, {0, 1}, {}},
      {{0.3, 0.3, 0.3}, 2, 2.0, {1, 0}, {}}, {{-0.5, 0.1, 0.8}, 2, 1.0, {0, 1}, {}},
  };
  const double tau = 0.3;
  auto nce = [&](const PlSample& s, const std::map<int, Vec>& P, const std::vector<int>& negs) {
    std::vector<Vec> n;
    for (int c : negs) n.push_back(P.at(c));
    return s.weight * plain_nce(s.z, P.at(s.label), n, tau);
  };
  const double novel = (nce(batch[3], pu, batch[3].neg_u) + nce(batch[4], pu, batch[4].neg_u) +
                        nce(batch[5], pu, batch[5].neg_u)) / 3.0;
  const double known_u = (nce(batch[0], pu, batch[0].neg_u) + nce(batch[1], pu, batch[1].neg_u) +
                          nce(batch[2], pu, batch[2].neg_u)) / 3.0;
  const double known_l = (nce(batch[0], pl, batch[0].neg_l) + nce(batch[1], pl, batch[1].neg_l) +
                          nce(batch[2], pl, batch[2].neg_l)) / 3.0;
  const auto r = pl_objectives(batch, {0, 1}, pu, pl, tau);
  EXPECT_NEAR(r.novel, novel, 1e-12);
  EXPECT_NEAR(r.known_u, known_u, 1e-12);
  EXPECT_NEAR(r.known_l, known_l, 1e-12);
  EXPECT_NEAR(r.total(), novel + known_u + known_l, 1e-12);
}

namespace {

// Random batch where every sample is novel (known = false) or known.
void check_pl_gradient(bool known, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t D = 6;
  const std::vector<int> known_classes{0, 1, 2};
  std::map<int, Vec> pu, pl;
  for (int c = 0; c < 7; ++c) pu[c] = random_vec(rng, D);
  for (int c : known_classes) pl[c] = random_vec(rng, D);
  std::uniform_int_distribution<int> known_pick(0, 2), novel_pick(3, 6);
  std::uniform_real_distribution<double> w(0.5, 3.0);
  for (int t = 0; t < kTrials; ++t) {
    std::vector<PlSample> batch(4);
    for (auto& s : batch) {
      s.z = random_vec(rng, D, false);
      s.label = known ? known_pick(rng) : novel_pick(rng);
      s.weight = w(rng);
      for (int c = 0; c < 7; ++c)
        if (c != s.label) s.neg_u.push_back(c);
      if (known)
        for (int c : known_classes)
          if (c != s.label) s.neg_l.push_back(c);
    }
    const auto r = pl_objectives(batch, known_classes, pu, pl, 0.07);
    EXPECT_EQ(known ? r.novel : r.known(), 0.0);
    std::vector<Vec> zs;
    for (const auto& s : batch) zs.push_back(s.z);
    const auto f = [&](const Vec& flat) {
      auto b = batch;
      const auto parts = split(flat, b.size(), D);
      for (std::size_t i = 0; i < b.size(); ++i) b[i].z = parts[i];
      return pl_objectives(b, known_classes, pu, pl, 0.07).total();
    };
    EXPECT_LT(relative_error(concat(r.d_z), numeric_gradient(f, concat(zs))), kTol) << "trial " << t;
  }
}

}  // namespace

TEST(PlObjectives, NovelGradientMatchesFiniteDifferences) { check_pl_gradient(false, 303); }

TEST(PlObjectives, KnownGradientMatchesFiniteDifferences) { check_pl_gradient(true, 404); }

TEST(CeLoss, TwoClassHandValue) {
  const std::map<int, Vec> pl{{0, {1, 0}}, {1, {0, 1}}};
  const auto r = ce_loss({{1, 0}}, {0}, pl, 1.0);
  EXPECT_NEAR(r.loss, std::log(1 + std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(r.loss, 0.3133, 1e-4);
}

TEST(CeLoss, UniformLogits) {
  const std::map<int, Vec> pl{{0, {1, 0, 0}}, {1, {0, 1, 0}}, {2, {-1, 0, 0}}, {3, {0, -1, 0}}};
  EXPECT_NEAR(ce_loss({{0, 0, 1}}, {2}, pl, 0.07).loss, std::log(4.0), 1e-12);
}

TEST(CeLoss, UnknownLabelThrows) {
  EXPECT_THROW(ce_loss({{1, 0}}, {5}, {{0, {1, 0}}}, 1.0), std::invalid_argument);
}

TEST(CeLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(505);
  const std::size_t D = 8;
  std::uniform_int_distribution<int> label(0, 4);
  for (int t = 0; t < kTrials; ++t) {
    std::map<int, Vec> pl;
    for (int c = 0; c < 5; ++c) pl[c] = random_vec(rng, D);
    std::vector<Vec> z;
    std::vector<int> y;
    for (int i = 0; i < 3; ++i) {
      z.push_back(random_vec(rng, D, false));
      y.push_back(label(rng));
    }
    const auto r = ce_loss(z, y, pl, 0.07);
    const auto f = [&](const Vec& flat) { return ce_loss(split(flat, z.size(), D), y, pl, 0.07).loss; };
    EXPECT_LT(relative_error(concat(r.d_z), numeric_gradient(f, concat(z))), kTol) << "trial " << t;
  }
}

TEST(Projection, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(606);
  const std::size_t in = 6, out = 4;
  for (int t = 0; t < 50; ++t) {
    ProjectionHead head = ProjectionHead::orthogonal(out, in, static_cast<std::uint64_t>(t));
    for (auto& b : head.b()) b = 0.1 * random_vec(rng, 1, false)[0];
    const Vec x = random_vec(rng, in), g = random_vec(rng, out, false);
    Matrix gW(out, in, 0.0);
    Vec gb(out, 0.0);
    head.backward(x, g, gW, gb);
    Vec params = head.W().data();
    params.insert(params.end(), head.b().begin(), head.b().end());
    const auto f = [&](const Vec& p) {
      ProjectionHead h = head;
      std::copy(p.begin(), p.begin() + static_cast<long>(in * out), h.W().data().begin());
      std::copy(p.begin() + static_cast<long>(in * out), p.end(), h.b().begin());
      return dot(h.forward(x), g);
    };
    Vec analytic = gW.data();
    analytic.insert(analytic.end(), gb.begin(), gb.end());
    EXPECT_LT(relative_error(analytic, numeric_gradient(f, params)), kTol) << "trial " << t;
  }
}

TEST(Projection, OrthogonalRowsAndIdentity) {
  const auto h = ProjectionHead::orthogonal(4, 8, 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(dot(h.W().row(i), h.W().row(j)), i == j ? 1.0 : 0.0, 1e-12);
  const auto id = ProjectionHead::identity(3);
  EXPECT_EQ(id.forward(Vec{3, 0, 4}), (Vec{0.6, 0, 0.8}));
}
