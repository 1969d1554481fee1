#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "catdisco/config.hpp"
#include "catdisco/dataset.hpp"
#include "catdisco/pattern_oracle.hpp"
#include "catdisco/projection.hpp"
#include "catdisco/prototypes.hpp"
#include "catdisco/trainer.hpp"

namespace catdisco {

// Everything needed to resume a run at an epoch boundary.
struct TrainingState {
  PipelineConfig config;
  std::size_t input_dim = 0;
  int K = 0;
  std::vector<int> known_classes;
  ProjectionHead head;
  Optimizer optimizer;
  PrototypeSet prototypes;                 // unlabeled side, every class
  std::map<int, Vec> labeled_prototypes;   // known classes
  std::vector<Pattern> patterns;
  std::vector<PseudoLabelRecord> records;  // one per unlabeled sample, dataset order
  std::vector<std::string> processed;      // sample ids seen by the oracle this round
  int epoch = 0;                           // epochs completed
  int round = 0;                           // mining rounds completed
  bool bootstrapped = false;               // pseudo-labels exist
  std::string rng_state;
};

// Writes state.json, prototypes.json and patterns.json into `dir`.
void save_checkpoint(const TrainingState& state, const std::filesystem::path& dir);

// Throws DataError("incomplete checkpoint ...") when a file is missing.
// Pattern embeddings are not stored and come back empty.
TrainingState load_checkpoint(const std::filesystem::path& dir);

}  // namespace catdisco
