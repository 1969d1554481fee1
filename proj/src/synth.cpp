#include "catdisco/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string_view>

#include "catdisco/errors.hpp"

namespace catdisco {

namespace {

constexpr std::array<std::string_view, 24> kKeywords = {
    "shopping", "loan",      "refund",   "recharge",  "gaming",   "investment",
    "romance",  "lottery",   "courier",  "ticket",    "rental",   "insurance",
    "tutoring", "charity",   "visa",     "crypto",    "credit",   "prize",
    "telecom",  "pension",   "medical",  "freelance", "phishing", "auction"};

Vec random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(dim);
  do {
    for (double& x : v) x = g(rng);
  } while (norm(v) == 0.0);
  normalize_in_place(v);
  return v;
}

}  // namespace

std::string class_keyword(int cls) {
  if (cls >= 0 && static_cast<std::size_t>(cls) < kKeywords.size())
    return std::string(kKeywords[static_cast<std::size_t>(cls)]);
  return "category" + std::to_string(cls);
}

DatasetBundle synth_gcd(const SynthSpec& spec) {
  if (spec.K < 2) throw DataError("synth: K must be at least 2");
  if (spec.known < 1 || spec.known > spec.K) throw DataError("synth: known must be in [1, K]");
  if (spec.sizes.size() != static_cast<std::size_t>(spec.K))
    throw DataError("synth: sizes has " + std::to_string(spec.sizes.size()) +
                    " entries, expected K=" + std::to_string(spec.K));
  if (std::any_of(spec.sizes.begin(), spec.sizes.end(), [](int s) { return s < 2; }))
    throw DataError("synth: every class needs at least 2 samples");
  if (spec.noise < 0.0) throw DataError("synth: noise must be non-negative");
  if (spec.dim == 0) throw DataError("synth: dim must be positive");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> filler(0, std::max(0, spec.filler_vocab - 1));

  std::vector<Vec> means;
  for (int c = 0; c < spec.K; ++c) means.push_back(random_unit(rng, spec.dim));

  auto draw = [&](int c) {
    Vec v = means[static_cast<std::size_t>(c)];
    if (spec.noise > 0.0)
      for (double& x : v) x += spec.noise * gauss(rng);
    if (norm(v) == 0.0) v = means[static_cast<std::size_t>(c)];
    normalize_in_place(v);
    std::string text = class_keyword(c);
    for (int t = 0; t < spec.filler_tokens; ++t) text += " w" + std::to_string(filler(rng));
    return std::pair{std::move(v), std::move(text)};
  };

  struct Pending {
    Vec emb;
    std::string text;
    int label;
    Split split;
  };
  std::vector<Pending> pending;
  for (int c = 0; c < spec.K; ++c) {
    const int pool = spec.sizes[static_cast<std::size_t>(c)];
    const bool known = c < spec.known;
    const int n_labeled =
        known ? static_cast<int>(std::ceil(spec.labeled_fraction * pool - 1e-9)) : 0;
    const int n_test = std::max(1, static_cast<int>(std::lround(spec.test_fraction * pool)));
    for (int i = 0; i < pool + n_test; ++i) {
      auto [v, text] = draw(c);
      const Split split = i < n_labeled ? Split::labeled : (i < pool ? Split::unlabeled : Split::test);
      pending.push_back({std::move(v), std::move(text), c, split});
    }
  }
  std::shuffle(pending.begin(), pending.end(), rng);

  DatasetBundle bundle;
  bundle.K = spec.K;
  bundle.dimension = spec.dim;
  for (int c = 0; c < spec.known; ++c) bundle.known_classes.push_back(c);
  bundle.samples.reserve(pending.size());
  char buf[32];
  for (std::size_t i = 0; i < pending.size(); ++i) {
    std::snprintf(buf, sizeof buf, "s%06zu", i);
    auto& p = pending[i];
    bundle.samples.emplace_back(buf, std::move(p.text), std::move(p.emb), p.label, p.split);
  }
  bundle.validate();
  return bundle;
}

}  // namespace catdisco
