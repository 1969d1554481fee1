#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "catdisco/linalg.hpp"
#include "catdisco/projection.hpp"

namespace catdisco {

enum class OptimizerKind { sgd, momentum, adam };

std::string_view to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(std::string_view s);

struct LossConfig {
  double tau = 0.07;
  double beta = 0.8;
  double omega = 0.9;
  double rho = 1.0;
  int negatives = 10;
  int batch = 32;
  double lr = 1e-5;
  int epochs = 50;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double momentum = 0.9;

  // Throws ConfigError when a value is out of range.
  void validate() const;
};

class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerKind kind, double lr, double momentum);

  void step(ProjectionHead& head, const Matrix& gW, const Vec& gb);

  OptimizerKind kind = OptimizerKind::sgd;
  double lr = 0.0;
  double momentum = 0.9;
  long steps = 0;
  // First and second moment buffers (W then b, flattened); empty for sgd.
  Vec m, v;
};

// Everything one epoch reads. Rows of the embedding matrices are raw
// (unprojected) sample embeddings.
struct EpochInputs {
  const Matrix* unlabeled = nullptr;
  std::vector<int> pseudo_labels;  // per unlabeled row
  std::vector<double> weights;     // per unlabeled row, rho when changed
  std::vector<bool> processed;     // unlabeled rows seen by the oracle this round
  const Matrix* labeled = nullptr;
  std::vector<int> labels;         // per labeled row
  std::vector<int> known_classes;  // sorted
  std::map<int, Vec> unlabeled_prototypes;  // every class
  std::map<int, Vec> labeled_prototypes;    // known classes
};

struct LossReport {
  double il = 0.0;
  double novel_pl = 0.0;
  double known_pl = 0.0;
  double ce = 0.0;
  double total = 0.0;
  std::size_t batches = 0;
};

// One pass over the shuffled union of unlabeled and labeled rows in
// mini-batches; each batch takes one optimizer step on
// L_il + L_novel_pl + L_known_pl + L_ce. Sampling of positives, negatives
// and the batch order all draw from `rng`. Reports per-term means over
// batches. Throws TrainingError on a non-finite loss.
LossReport train_epoch(ProjectionHead& head, Optimizer& opt, const EpochInputs& in, const LossConfig& cfg,
                       std::mt19937_64& rng);

// The same objective without parameter updates, for diagnostics and tests.
LossReport evaluate_epoch(const ProjectionHead& head, const EpochInputs& in, const LossConfig& cfg,
                          std::mt19937_64& rng);

}  // namespace catdisco
