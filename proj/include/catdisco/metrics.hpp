#pragma once

#include <filesystem>
#include <optional>
#include <vector>

namespace catdisco {

struct AlignedAccuracy {
  double accuracy = 0.0;
  std::vector<int> permutation;  // predicted id -> true class id
};

// Single global Hungarian alignment of predicted ids to true classes that
// maximizes the number of matches. Throws std::invalid_argument on a length
// mismatch or labels outside [0, K).
AlignedAccuracy aligned_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth, int K);

struct GcdMetrics {
  std::optional<double> acc_k;
  std::optional<double> acc_n;
  std::optional<double> h_score;
  std::size_t n_test = 0;
  double accuracy = 0.0;
  std::vector<int> permutation;
  std::vector<std::optional<double>> per_class_recall;  // indexed by true class
};

// Harmonic mean; 0 when either side is 0.
double h_score(double acc_k, double acc_n);

GcdMetrics gcd_metrics(const std::vector<int>& predicted, const std::vector<int>& truth,
                       const std::vector<int>& known_classes, int K);

// Rows are true classes, columns aligned predictions.
void write_confusion_csv(const std::vector<int>& predicted, const std::vector<int>& truth,
                         const std::vector<int>& permutation, int K, const std::filesystem::path& path);

void write_metrics_json(const GcdMetrics& m, const std::filesystem::path& path);

}  // namespace catdisco
