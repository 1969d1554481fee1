#include "catdisco/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "catdisco/alignment.hpp"
#include "catdisco/errors.hpp"
#include "catdisco/linalg.hpp"

namespace catdisco {

AlignedAccuracy aligned_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth, int K) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("predicted and true labels differ in length");
  if (K < 1) throw std::invalid_argument("K must be positive");
  Matrix counts(static_cast<std::size_t>(K), static_cast<std::size_t>(K));
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] < 0 || predicted[i] >= K || truth[i] < 0 || truth[i] >= K)
      throw std::invalid_argument("label outside [0, K)");
    counts(static_cast<std::size_t>(predicted[i]), static_cast<std::size_t>(truth[i])) += 1.0;
  }
  Matrix cost(counts.rows(), counts.cols());
  for (std::size_t r = 0; r < cost.rows(); ++r)
    for (std::size_t c = 0; c < cost.cols(); ++c) cost(r, c) = -counts(r, c);
  const auto a = hungarian(cost);
  AlignedAccuracy out;
  out.permutation = a.row_to_col;
  double hit = 0.0;
  for (std::size_t r = 0; r < counts.rows(); ++r) hit += counts(r, static_cast<std::size_t>(a.row_to_col[r]));
  out.accuracy = predicted.empty() ? 0.0 : hit / static_cast<double>(predicted.size());
  return out;
}

double h_score(double acc_k, double acc_n) {
  if (acc_k <= 0.0 || acc_n <= 0.0) return 0.0;
  return 2.0 * acc_k * acc_n / (acc_k + acc_n);
}

GcdMetrics gcd_metrics(const std::vector<int>& predicted, const std::vector<int>& truth,
                       const std::vector<int>& known_classes, int K) {
  const auto aligned = aligned_accuracy(predicted, truth, K);
  GcdMetrics m;
  m.n_test = truth.size();
  m.accuracy = aligned.accuracy;
  m.permutation = aligned.permutation;
  std::vector<std::size_t> hits(static_cast<std::size_t>(K), 0), totals(static_cast<std::size_t>(K), 0);
  std::size_t known_hit = 0, known_n = 0, novel_hit = 0, novel_n = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool hit = aligned.permutation[static_cast<std::size_t>(predicted[i])] == truth[i];
    const bool known = std::find(known_classes.begin(), known_classes.end(), truth[i]) != known_classes.end();
    (known ? known_n : novel_n) += 1;
    (known ? known_hit : novel_hit) += hit;
    totals[static_cast<std::size_t>(truth[i])] += 1;
    hits[static_cast<std::size_t>(truth[i])] += hit;
  }
  if (known_n) m.acc_k = static_cast<double>(known_hit) / static_cast<double>(known_n);
  if (novel_n) m.acc_n = static_cast<double>(novel_hit) / static_cast<double>(novel_n);
  if (m.acc_k && m.acc_n) m.h_score = h_score(*m.acc_k, *m.acc_n);
  for (int c = 0; c < K; ++c) {
    const auto t = totals[static_cast<std::size_t>(c)];
    m.per_class_recall.push_back(t ? std::optional<double>(static_cast<double>(hits[static_cast<std::size_t>(c)]) /
                                                           static_cast<double>(t))
                                   : std::nullopt);
  }
  return m;
}

void write_confusion_csv(const std::vector<int>& predicted, const std::vector<int>& truth,
                         const std::vector<int>& permutation, int K, const std::filesystem::path& path) {
  std::vector<std::vector<std::size_t>> cm(static_cast<std::size_t>(K), std::vector<std::size_t>(static_cast<std::size_t>(K), 0));
  for (std::size_t i = 0; i < truth.size(); ++i)
    ++cm[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(permutation[static_cast<std::size_t>(predicted[i])])];
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "true\\pred";
  for (int c = 0; c < K; ++c) out << ',' << c;
  out << '\n';
  for (int r = 0; r < K; ++r) {
    out << r;
    for (int c = 0; c < K; ++c) out << ',' << cm[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    out << '\n';
  }
}

namespace {
nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }
}  // namespace

void write_metrics_json(const GcdMetrics& m, const std::filesystem::path& path) {
  nlohmann::json recall = nlohmann::json::array();
  for (const auto& r : m.per_class_recall) recall.push_back(opt(r));
  const nlohmann::json j{{"acc_k", opt(m.acc_k)},     {"acc_n", opt(m.acc_n)},
                         {"h_score", opt(m.h_score)}, {"n_test", m.n_test},
                         {"accuracy", m.accuracy},    {"permutation", m.permutation},
                         {"per_class_recall", recall}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace catdisco
