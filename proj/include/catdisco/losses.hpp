#pragma once

#include <map>
#include <span>
#include <vector>

#include "catdisco/linalg.hpp"

namespace catdisco {

struct ContrastiveResult {
  double loss = 0.0;
  Vec d_anchor;
  Vec d_positive;
  std::vector<Vec> d_negatives;
};

// -log softmax of the positive among {positive} + negatives, logits are
// cosine similarity / tau. The positive sits in the denominator. Throws
// std::invalid_argument on a zero-norm input, an empty negative set or
// tau <= 0.
ContrastiveResult info_nce(std::span<const double> anchor, std::span<const double> positive,
                           const std::vector<Vec>& negatives, double tau);

// weight * info_nce with prototypes as targets.
ContrastiveResult prototype_loss(std::span<const double> sample, std::span<const double> own,
                                 const std::vector<Vec>& negatives, double tau, double weight);

// One unlabeled sample of a prototype-objective batch. Negatives are class
// ids, pre-drawn by the caller: neg_u indexes the unlabeled-side prototypes,
// neg_l the labeled ones (read only for known-class samples).
struct PlSample {
  Vec z;
  int label = 0;
  double weight = 1.0;
  std::vector<int> neg_u;
  std::vector<int> neg_l;
};

struct PlResult {
  double novel = 0.0;    // over samples labeled with a novel class
  double known_u = 0.0;  // known-class samples against unlabeled-side prototypes
  double known_l = 0.0;  // known-class samples against labeled prototypes
  std::vector<Vec> d_z;  // gradient of novel + known_u + known_l per sample

  double known() const { return known_u + known_l; }
  double total() const { return novel + known_u + known_l; }
};

// Each term is a mean over its own subset; an empty subset contributes 0.
// Throws std::invalid_argument naming the class when a referenced prototype
// is missing.
PlResult pl_objectives(const std::vector<PlSample>& batch, const std::vector<int>& known_classes,
                       const std::map<int, Vec>& unlabeled_prototypes,
                       const std::map<int, Vec>& labeled_prototypes, double tau);

struct CeResult {
  double loss = 0.0;
  std::vector<Vec> d_z;
};

// Mean cross-entropy of softmax(cos(z, P_c) / tau) over the labeled
// prototypes. Throws std::invalid_argument for a label without a prototype.
CeResult ce_loss(const std::vector<Vec>& z, const std::vector<int>& labels,
                 const std::map<int, Vec>& labeled_prototypes, double tau);

}  // namespace catdisco
