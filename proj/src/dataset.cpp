#include "catdisco/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "catdisco/errors.hpp"

namespace catdisco {

using nlohmann::json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::labeled: return "labeled";
    case Split::unlabeled: return "unlabeled";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_string(std::string_view s) {
  if (s == "labeled") return Split::labeled;
  if (s == "unlabeled") return Split::unlabeled;
  if (s == "test") return Split::test;
  throw DataError("unknown split '" + std::string(s) + "'");
}

std::string_view to_string(LabelSource s) {
  switch (s) {
    case LabelSource::cluster: return "cluster";
    case LabelSource::pattern_match: return "pattern-match";
    case LabelSource::consensus_reassign: return "consensus-reassign";
    case LabelSource::low_confidence_reassign: return "low-confidence-reassign";
  }
  return "?";
}

bool DatasetBundle::is_known(int cls) const {
  return std::binary_search(known_classes.begin(), known_classes.end(), cls);
}

std::vector<int> DatasetBundle::novel_classes() const {
  std::vector<int> out;
  for (int c = 0; c < K; ++c)
    if (!is_known(c)) out.push_back(c);
  return out;
}

std::vector<std::size_t> DatasetBundle::indices_of(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].split == s) out.push_back(i);
  return out;
}

std::size_t DatasetBundle::count(Split s) const {
  return static_cast<std::size_t>(std::count_if(
      samples.begin(), samples.end(), [s](const Sample& x) { return x.split == s; }));
}

Matrix DatasetBundle::embeddings_of(const std::vector<std::size_t>& idx) const {
  Matrix m(idx.size(), dimension);
  for (std::size_t r = 0; r < idx.size(); ++r) m.set_row(r, samples[idx[r]].embedding);
  return m;
}

void DatasetBundle::validate() const {
  if (K < 2) throw DataError("K must be at least 2");
  if (known_classes.size() > static_cast<std::size_t>(K))
    throw DataError("more known classes than K");
  for (int c : known_classes)
    if (c < 0 || c >= K) throw DataError("known class " + std::to_string(c) + " outside [0, K)");
  std::set<int> labeled_classes;
  std::unordered_set<std::string> ids;
  for (const Sample& s : samples) {
    if (!ids.insert(s.id).second) throw DataError("duplicate sample id '" + s.id + "'");
    if (s.embedding.size() != dimension) throw DataError("dimension mismatch for '" + s.id + "'");
    const auto truth = s.ground_truth();
    if (truth && (*truth < 0 || *truth >= K))
      throw DataError("label outside [0, K) for '" + s.id + "'");
    if (s.split == Split::labeled) {
      if (!truth) throw DataError("labeled sample '" + s.id + "' has no label");
      if (!is_known(*truth))
        throw DataError("labeled sample '" + s.id + "' has a label outside the known classes");
      labeled_classes.insert(*truth);
    }
    if (s.split == Split::test && !truth) throw DataError("test sample '" + s.id + "' has no label");
  }
  if (labeled_classes.size() > static_cast<std::size_t>(K))
    throw DataError("K is smaller than the number of distinct labeled classes");
  if (count(Split::labeled) == 0) throw DataError("dataset has no labeled samples");
  if (count(Split::unlabeled) == 0) throw DataError("dataset has no unlabeled samples");
}

namespace {

std::string at_line(std::size_t line, const std::string& msg) {
  return "line " + std::to_string(line) + ": " + msg;
}

}  // namespace

DatasetBundle load_dataset(const std::filesystem::path& path, std::optional<int> expected_K) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");

  DatasetBundle bundle;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::set<int> labeled_classes;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(at_line(lineno, std::string("malformed JSON: ") + e.what()));
    }
    if (!rec.is_object()) throw DataError(at_line(lineno, "record is not an object"));

    if (!have_header) {
      if (!rec.contains("K") || !rec.contains("dim"))
        throw DataError(at_line(lineno, "missing header record {K, dim, known_classes}"));
      try {
        bundle.K = rec.at("K").get<int>();
        bundle.dimension = rec.at("dim").get<std::size_t>();
        bundle.known_classes = rec.value("known_classes", std::vector<int>{});
      } catch (const json::exception& e) {
        throw DataError(at_line(lineno, std::string("bad header: ") + e.what()));
      }
      std::sort(bundle.known_classes.begin(), bundle.known_classes.end());
      bundle.known_classes.erase(
          std::unique(bundle.known_classes.begin(), bundle.known_classes.end()),
          bundle.known_classes.end());
      if (expected_K && *expected_K != bundle.K)
        throw DataError("header K=" + std::to_string(bundle.K) + " but expected K=" +
                        std::to_string(*expected_K));
      have_header = true;
      continue;
    }

    std::string id;
    std::optional<std::string> text;
    Vec emb;
    std::optional<int> label;
    Split split;
    try {
      id = rec.at("id").get<std::string>();
      if (rec.contains("text") && !rec["text"].is_null()) text = rec["text"].get<std::string>();
      emb = rec.at("embedding").get<Vec>();
      if (rec.contains("label") && !rec["label"].is_null()) label = rec["label"].get<int>();
      split = split_from_string(rec.at("split").get<std::string>());
    } catch (const DataError& e) {
      throw DataError(at_line(lineno, e.what()));
    } catch (const json::exception& e) {
      throw DataError(at_line(lineno, std::string("bad record: ") + e.what()));
    }

    if (emb.size() != bundle.dimension)
      throw DataError(at_line(lineno, "dimension mismatch: expected " +
                                          std::to_string(bundle.dimension) + ", got " +
                                          std::to_string(emb.size())));
    try {
      normalize_in_place(emb);
    } catch (const std::invalid_argument&) {
      throw DataError(at_line(lineno, "zero-norm embedding"));
    }
    if (split == Split::labeled) {
      if (!label) throw DataError(at_line(lineno, "labeled sample with no label"));
      labeled_classes.insert(*label);
    }
    bundle.samples.emplace_back(std::move(id), std::move(text), std::move(emb), label, split);
  }
  if (!have_header) throw DataError("empty dataset file '" + path.string() + "'");
  if (labeled_classes.size() > static_cast<std::size_t>(bundle.K))
    throw DataError("K=" + std::to_string(bundle.K) + " is smaller than the " +
                    std::to_string(labeled_classes.size()) + " distinct labeled classes");
  bundle.validate();

  spdlog::debug("loaded {}: {} labeled, {} unlabeled, {} test, D={}", path.string(),
                bundle.count(Split::labeled), bundle.count(Split::unlabeled),
                bundle.count(Split::test), bundle.dimension);
  return bundle;
}

void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset '" + path.string() + "'");
  json header = {{"K", bundle.K}, {"dim", bundle.dimension}, {"known_classes", bundle.known_classes}};
  out << header.dump() << '\n';
  for (const Sample& s : bundle.samples) {
    json rec;
    rec["id"] = s.id;
    rec["text"] = s.text ? json(*s.text) : json(nullptr);
    rec["embedding"] = s.embedding;
    const auto truth = s.ground_truth();
    rec["label"] = truth ? json(*truth) : json(nullptr);
    rec["split"] = std::string(to_string(s.split));
    out << rec.dump() << '\n';
  }
  if (!out) throw DataError("failed writing dataset '" + path.string() + "'");
}

}  // namespace catdisco
