#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "catdisco/checkpoint.hpp"
#include "catdisco/metrics.hpp"
#include "catdisco/pattern_oracle.hpp"
#include "catdisco/text_embedder.hpp"

namespace catdisco {

struct RoundSummary {
  int round = 0;
  bool stale = false;               // oracle outage: previous patterns reused
  std::size_t patterns = 0;
  std::size_t processed = 0;
  std::size_t changed = 0;
  std::size_t low_confidence = 0;
  std::size_t excluded = 0;
  std::size_t oracle_calls = 0;     // requests issued during the round
  std::vector<int> failed_clusters;
};

struct HistoryEntry {
  int epoch = 0;  // 1-based
  int round = 0;  // mining rounds completed so far
  std::optional<RoundSummary> mining;  // set on epochs that started with a round
  LossReport loss;
  GcdMetrics test;

  std::string to_json_line() const;
};

// The train loop over one dataset; epochs are driven with step().
class PipelineRun {
 public:
  PipelineRun(const PipelineConfig& config, const DatasetBundle& data, ChatBackend* backend,
              TranscriptLog* transcript = nullptr);
  // Continues from a checkpoint written by a run over the same data.
  PipelineRun(TrainingState state, const DatasetBundle& data, ChatBackend* backend,
              TranscriptLog* transcript = nullptr);

  bool done() const { return state_.epoch >= state_.config.loss.epochs; }

  // Runs the next epoch, starting with a mining round when one is due.
  HistoryEntry step();

  // Clustering + matching only: pseudo-labels from clusters, prototypes at
  // the cluster centers. No oracle involved.
  void bootstrap_from_clusters();

  // One full clustering / oracle / reassignment / prototype round.
  RoundSummary mining_round();

  LossReport train_one_epoch();

  // Nearest-prototype (cosine) predictions for the given samples.
  std::vector<int> predict(const std::vector<std::size_t>& sample_indices) const;
  GcdMetrics evaluate_test() const;

  TrainingState snapshot() const;
  const TrainingState& state() const { return state_; }

  // True when the next epoch starts with a mining round.
  bool round_due() const;

 private:
  void check_compatible() const;
  Vec encode_pattern(const std::string& text) const;
  EpochInputs epoch_inputs() const;

  TrainingState state_;
  const DatasetBundle& data_;
  ChatBackend* backend_;
  TranscriptLog* transcript_;
  std::unique_ptr<PatternOracle> oracle_;
  CorpusTokenEmbedder embedder_;
  std::vector<std::size_t> unlabeled_idx_, labeled_idx_, test_idx_;
  Matrix unlabeled_x_, labeled_x_;
  std::vector<int> labeled_y_;
  mutable std::mt19937_64 rng_;
};

struct TrainingOutcome {
  TrainingState final_state;
  std::vector<HistoryEntry> history;
  GcdMetrics metrics;
};

struct TrainingOptions {
  std::filesystem::path out_dir;   // empty: nothing written
  std::filesystem::path transcript;  // empty: no transcript log
  std::optional<std::filesystem::path> resume_from;
};

// Runs every epoch of the configured schedule. With an out_dir, writes
// history.jsonl, reassign_audit.jsonl, ckpt-round-<r>/, final/,
// metrics.json and confusion.csv.
TrainingOutcome run_training(const PipelineConfig& config, const DatasetBundle& data, ChatBackend* backend,
                             const TrainingOptions& options = {});

// Loads a checkpoint and scores the test split by nearest prototype.
GcdMetrics run_eval(const std::filesystem::path& checkpoint, const DatasetBundle& data);

struct BaselineResult {
  GcdMetrics metrics;
  std::vector<int> test_predictions;
};

// K-means on raw unlabeled embeddings; test samples take their nearest
// center; one global alignment.
BaselineResult run_baseline(const DatasetBundle& data, std::uint64_t seed, int runs = 5, int max_iter = 100);

}  // namespace catdisco
