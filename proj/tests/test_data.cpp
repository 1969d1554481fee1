#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "catdisco/config.hpp"
#include "catdisco/dataset.hpp"
#include "catdisco/errors.hpp"
#include "catdisco/synth.hpp"
#include "catdisco/text_embedder.hpp"
#include "support.hpp"

using namespace catdisco;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "catdisco_data_tests";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_lines(const std::string& name, const std::vector<std::string>& lines) {
  const auto p = scratch(name);
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
  return p;
}

std::string error_of(const fs::path& p, std::optional<int> K = std::nullopt) {
  try {
    load_dataset(p, K);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Dataset, MinimalFile) {
  const auto p = write_lines("minimal.jsonl", {
      R"({"K": 2, "dim": 4, "known_classes": [0]})",
      R"({"id": "a", "text": "one", "embedding": [2, 0, 0, 0], "label": 0, "split": "labeled"})",
      R"({"id": "b", "embedding": [0, 3, 0, 4], "split": "unlabeled"})",
      R"({"id": "c", "text": null, "embedding": [1, 1, 1, 1], "label": 1, "split": "unlabeled"})",
  });
  const auto d = load_dataset(p);
  EXPECT_EQ(d.K, 2);
  EXPECT_EQ(d.dimension, 4u);
  EXPECT_EQ(d.count(Split::labeled), 1u);
  EXPECT_EQ(d.count(Split::unlabeled), 2u);
  EXPECT_EQ(d.samples[0].embedding, (Vec{1, 0, 0, 0}));
  EXPECT_EQ(d.samples[1].embedding, (Vec{0, 0.6, 0, 0.8}));
  for (const auto& s : d.samples) EXPECT_NEAR(norm(s.embedding), 1.0, 1e-12);
  // training code never sees an unlabeled sample's class
  EXPECT_FALSE(d.samples[2].label().has_value());
  EXPECT_EQ(d.samples[2].ground_truth(), 1);
  EXPECT_EQ(d.novel_classes(), (std::vector<int>{1}));
}

TEST(Dataset, ZeroNormEmbedding) {
  const auto p = write_lines("zero.jsonl", {
      R"({"K": 2, "dim": 2, "known_classes": [0]})",
      R"({"id": "a", "embedding": [1, 0], "label": 0, "split": "labeled"})",
      R"({"id": "b", "embedding": [0, 0], "split": "unlabeled"})",
  });
  EXPECT_NE(error_of(p).find("zero-norm embedding"), std::string::npos);
  EXPECT_NE(error_of(p).find("line 3"), std::string::npos);
}

TEST(Dataset, StructuralErrors) {
  EXPECT_NE(error_of(write_lines("dim.jsonl", {R"({"K": 2, "dim": 3, "known_classes": [0]})",
                                               R"({"id": "a", "embedding": [1, 0], "label": 0, "split": "labeled"})"}))
                .find("dimension mismatch"),
            std::string::npos);
  EXPECT_NE(error_of(write_lines("dup.jsonl", {R"({"K": 2, "dim": 2, "known_classes": [0]})",
                                               R"({"id": "a", "embedding": [1, 0], "label": 0, "split": "labeled"})",
                                               R"({"id": "a", "embedding": [0, 1], "split": "unlabeled"})"}))
                .find("duplicate"),
            std::string::npos);
  EXPECT_NE(error_of(write_lines("bad.jsonl", {R"({"K": 2, "dim": 2})", "{not json"})).find("line 2"), std::string::npos);
  const auto ok = write_lines("k.jsonl", {R"({"K": 2, "dim": 2, "known_classes": [0]})",
                                          R"({"id": "a", "embedding": [1, 0], "label": 0, "split": "labeled"})",
                                          R"({"id": "b", "embedding": [0, 1], "split": "unlabeled"})"});
  EXPECT_TRUE(error_of(ok).empty());
  EXPECT_FALSE(error_of(ok, 3).empty());
  EXPECT_FALSE(error_of(write_lines("empty.jsonl", {})).empty());
}

TEST(Dataset, FullScaleShapeAccepted) {
  // 724 labeled + 7,878 unlabeled + 1,076 test, 22 classes, 14 known
  DatasetBundle d;
  d.K = 22;
  d.dimension = 8;
  for (int c = 0; c < 14; ++c) d.known_classes.push_back(c);
  std::mt19937_64 rng(1);
  auto add = [&](Split s, int n) {
    for (int i = 0; i < n; ++i) {
      const int cls = s == Split::labeled ? i % 14 : i % 22;
      d.samples.emplace_back(std::string(to_string(s)) + std::to_string(i), std::nullopt,
                             testsupport::random_vec(rng, 8), cls, s);
    }
  };
  add(Split::labeled, 724);
  add(Split::unlabeled, 7878);
  add(Split::test, 1076);
  const auto p = scratch("full.jsonl");
  write_dataset(d, p);
  const auto back = load_dataset(p, 22);
  EXPECT_EQ(back.samples.size(), 9678u);
  EXPECT_EQ(back.novel_classes().size(), 8u);
  EXPECT_EQ(back.count(Split::test), 1076u);
}

TEST(Dataset, RoundTrip) {
  const auto d = synth_gcd(SynthSpec{});
  const auto p = scratch("roundtrip.jsonl");
  write_dataset(d, p);
  const auto back = load_dataset(p);
  ASSERT_EQ(back.samples.size(), d.samples.size());
  EXPECT_EQ(back.known_classes, d.known_classes);
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].id, d.samples[i].id);
    EXPECT_EQ(back.samples[i].ground_truth(), d.samples[i].ground_truth());
    for (std::size_t k = 0; k < d.dimension; ++k)
      EXPECT_NEAR(back.samples[i].embedding[k], d.samples[i].embedding[k], 1e-15);
  }
}

TEST(Synth, ImbalanceAndShape) {
  const auto d = synth_gcd(SynthSpec{});
  std::map<int, int> pool;
  for (const auto& s : d.samples)
    if (s.split != Split::test) ++pool[*s.ground_truth()];
  EXPECT_EQ(pool[0], 400);
  EXPECT_EQ(pool[8], 20);
  EXPECT_EQ(pool[0] / pool[8], 20);
  EXPECT_EQ(d.known_classes, (std::vector<int>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(d.dimension, 16u);
  for (const auto& s : d.samples)
    if (s.split == Split::labeled) EXPECT_LT(*s.label(), 6);
}

TEST(Synth, Deterministic) {
  SynthSpec spec;
  spec.seed = 17;
  spec.noise = 0.3;
  EXPECT_EQ(synth_gcd(spec).samples, synth_gcd(spec).samples);
  auto other = spec;
  other.seed = 18;
  EXPECT_NE(synth_gcd(spec).samples, synth_gcd(other).samples);
}

TEST(Synth, ZeroNoiseSitsOnClassMeans) {
  SynthSpec spec;
  spec.noise = 0.0;
  const auto d = synth_gcd(spec);
  std::map<int, Vec> mean;
  for (const auto& s : d.samples) {
    const int c = *s.ground_truth();
    if (!mean.count(c)) mean[c] = s.embedding;
    EXPECT_EQ(s.embedding, mean[c]);
  }
}

TEST(Synth, TextsCarryClassKeyword) {
  const auto d = synth_gcd(SynthSpec{});
  for (const auto& s : d.samples) {
    const auto tokens = tokenize(*s.text);
    EXPECT_EQ(tokens.front(), class_keyword(*s.ground_truth()));
  }
  EXPECT_THROW(synth_gcd(SynthSpec{.noise = -1.0}), DataError);
}

TEST(TextEmbedder, KeywordLandsNearItsClass) {
  SynthSpec spec;
  spec.noise = 0.2;
  const auto d = synth_gcd(spec);
  const CorpusTokenEmbedder emb(d);
  EXPECT_FALSE(emb.embed("zzzz unseen words").has_value());
  for (int c = 0; c < d.K; ++c) {
    const auto v = emb.embed(class_keyword(c));
    ASSERT_TRUE(v.has_value());
    // the nearest class mean is the keyword's own class
    int best = -1;
    double best_cos = -2;
    for (int k = 0; k < d.K; ++k) {
      Vec mu(d.dimension, 0.0);
      for (const auto& s : d.samples)
        if (s.ground_truth() == k && s.split != Split::test) axpy(1.0, s.embedding, mu);
      const double cs = cosine(*v, mu);
      if (cs > best_cos) {
        best_cos = cs;
        best = k;
      }
    }
    EXPECT_EQ(best, c);
  }
}

TEST(Tokenize, LowercaseWordsKeepUtf8) {
  EXPECT_EQ(tokenize("Fake RECHARGE, scam!"), (std::vector<std::string>{"fake", "recharge", "scam"}));
  EXPECT_EQ(tokenize("游戏 item"), (std::vector<std::string>{"游戏", "item"}));
}

TEST(Config, ParseAndRoundTrip) {
  const auto cfg = parse_config("# comment\nepochs = 20\n interval=5 \nrho = 25\noptimizer = adam\n");
  EXPECT_EQ(cfg.loss.epochs, 20);
  EXPECT_EQ(cfg.interval, 5);
  EXPECT_EQ(cfg.loss.rho, 25.0);
  EXPECT_EQ(cfg.loss.optimizer, OptimizerKind::adam);
  const auto again = parse_config(cfg.to_text());
  EXPECT_EQ(again.to_text(), cfg.to_text());
  EXPECT_EQ(again.hash(), cfg.hash());
  EXPECT_NE(PipelineConfig{}.hash(), cfg.hash());
}

TEST(Config, Defaults) {
  const PipelineConfig c;
  EXPECT_EQ(c.loss.batch, 32);
  EXPECT_EQ(c.loss.lr, 1e-5);
  EXPECT_EQ(c.loss.epochs, 50);
  EXPECT_EQ(c.loss.tau, 0.07);
  EXPECT_EQ(c.loss.beta, 0.8);
  EXPECT_EQ(c.loss.omega, 0.9);
  EXPECT_EQ(c.interval, 5);
  EXPECT_EQ(c.kmeans_runs, 5);
  EXPECT_EQ(c.select.k_high, 50);
  EXPECT_EQ(c.select.k_low, 500);
  EXPECT_EQ(c.loss.negatives, 10);
}

TEST(Config, Errors) {
  try {
    parse_config("epochs = 3\nbogus = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  EXPECT_THROW(parse_config("epochs = many\n"), ConfigError);
  EXPECT_THROW(parse_config("sigma = 2\n").validate(), ConfigError);
  EXPECT_THROW(load_config(scratch("missing.cfg")), ConfigError);
}
