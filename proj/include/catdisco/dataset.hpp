#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "catdisco/linalg.hpp"

namespace catdisco {

enum class Split { labeled, unlabeled, test };

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

// One data point. The class label of an unlabeled sample may be carried for
// diagnostics, but training code only ever sees it through label(), which
// hides it; evaluation code uses ground_truth().
class Sample {
 public:
  Sample() = default;
  Sample(std::string id, std::optional<std::string> text, Vec embedding,
         std::optional<int> label, Split split)
      : id(std::move(id)),
        text(std::move(text)),
        embedding(std::move(embedding)),
        split(split),
        label_(label) {}

  std::string id;
  std::optional<std::string> text;
  Vec embedding;
  Split split = Split::unlabeled;

  // Supervision visible to training: labeled samples only.
  std::optional<int> label() const {
    return split == Split::labeled ? label_ : std::nullopt;
  }

  // Evaluation-only accessor.
  std::optional<int> ground_truth() const { return label_; }

  bool operator==(const Sample&) const = default;

 private:
  std::optional<int> label_;
};

struct DatasetBundle {
  std::vector<Sample> samples;
  int K = 0;
  std::vector<int> known_classes;  // sorted, unique
  std::size_t dimension = 0;

  bool is_known(int cls) const;
  std::vector<int> novel_classes() const;

  // Indices into samples, in file order.
  std::vector<std::size_t> indices_of(Split s) const;
  std::size_t count(Split s) const;

  // Embeddings of the given sample indices stacked as rows.
  Matrix embeddings_of(const std::vector<std::size_t>& idx) const;

  // Throws DataError when a structural invariant does not hold.
  void validate() const;
};

enum class LabelSource { cluster, pattern_match, consensus_reassign, low_confidence_reassign };

std::string_view to_string(LabelSource s);

// A sample's pseudo-label after one update round. `previous` is the
// cluster-derived label the round started from; `changed` drives the
// prototype-loss weight.
struct PseudoLabelRecord {
  std::string sample_id;
  int current = 0;
  std::optional<int> previous;
  bool changed = false;
  LabelSource source = LabelSource::cluster;
  bool stale = false;

  bool operator==(const PseudoLabelRecord&) const = default;
};

// Reads the JSON-lines dataset format: a header record followed by one
// sample per line. When expected_K is given it must agree with the header.
DatasetBundle load_dataset(const std::filesystem::path& path,
                           std::optional<int> expected_K = std::nullopt);

void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& path);

}  // namespace catdisco
