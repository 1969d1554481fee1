#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "catdisco/dataset.hpp"

namespace catdisco {

// Lower-cased word tokens; bytes >= 0x80 count as word characters so UTF-8
// words stay whole.
std::vector<std::string> tokenize(std::string_view text);

// Maps free text into the embedding space of the corpus.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  // nullopt when the text carries no usable signal.
  virtual std::optional<Vec> embed(std::string_view text) const = 0;
};

// Each token is represented by the centroid of the embeddings of the corpus
// samples containing it; a text is the idf-weighted, normalized sum of its
// known tokens. Only labeled and unlabeled samples are indexed.
class CorpusTokenEmbedder final : public TextEmbedder {
 public:
  explicit CorpusTokenEmbedder(const DatasetBundle& corpus);

  std::optional<Vec> embed(std::string_view text) const override;
  std::size_t vocabulary_size() const { return centroids_.size(); }

 private:
  struct Entry {
    Vec centroid;
    double idf = 0.0;
  };
  std::unordered_map<std::string, Entry> centroids_;
  std::size_t dim_ = 0;
};

}  // namespace catdisco
