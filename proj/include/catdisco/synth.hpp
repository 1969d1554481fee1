#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "catdisco/dataset.hpp"

namespace catdisco {

// Shape of a synthetic imbalanced category-discovery instance. Classes
// 0..known-1 are known; `sizes` counts the training pool (labeled +
// unlabeled) of each class.
struct SynthSpec {
  std::uint64_t seed = 1;
  int K = 9;
  int known = 6;
  std::size_t dim = 16;
  std::vector<int> sizes{400, 200, 100, 50, 50, 50, 40, 30, 20};
  double noise = 0.1;           // per-coordinate Gaussian sigma before re-normalization
  double labeled_fraction = 0.1;
  double test_fraction = 0.25;  // held-out test count per class, relative to its pool
  int filler_tokens = 6;
  int filler_vocab = 400;
};

// Keyword planted in every text of class `cls`.
std::string class_keyword(int cls);

// Deterministic for a fixed spec. Each class is an isotropic Gaussian around
// a random unit mean; texts are the class keyword followed by filler tokens.
DatasetBundle synth_gcd(const SynthSpec& spec);

}  // namespace catdisco
