#include "catdisco/text_embedder.hpp"

#include <cctype>
#include <cmath>
#include <unordered_set>

namespace catdisco {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u) || u >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

CorpusTokenEmbedder::CorpusTokenEmbedder(const DatasetBundle& corpus) : dim_(corpus.dimension) {
  std::unordered_map<std::string, std::pair<Vec, std::size_t>> acc;
  std::size_t docs = 0;
  for (const Sample& s : corpus.samples) {
    if (s.split == Split::test || !s.text) continue;
    ++docs;
    const auto toks = tokenize(*s.text);
    std::unordered_set<std::string> seen(toks.begin(), toks.end());
    for (const auto& t : seen) {
      auto& [sum, n] = acc[t];
      if (sum.empty()) sum.assign(dim_, 0.0);
      axpy(1.0, s.embedding, sum);
      ++n;
    }
  }
  for (auto& [tok, entry] : acc) {
    auto& [sum, n] = entry;
    for (double& x : sum) x /= static_cast<double>(n);
    centroids_[tok] = Entry{std::move(sum), std::log(static_cast<double>(docs) / static_cast<double>(n))};
  }
}

std::optional<Vec> CorpusTokenEmbedder::embed(std::string_view text) const {
  Vec sum(dim_, 0.0);
  bool any = false;
  for (const auto& t : tokenize(text)) {
    auto it = centroids_.find(t);
    if (it == centroids_.end() || it->second.idf <= 0.0) continue;
    axpy(it->second.idf, it->second.centroid, sum);
    any = true;
  }
  if (!any || norm(sum) == 0.0) return std::nullopt;
  normalize_in_place(sum);
  return sum;
}

}  // namespace catdisco
