#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "catdisco/chat_backend.hpp"
#include "catdisco/linalg.hpp"

namespace catdisco {

enum class PatternOrigin { extracted, refined };

struct Pattern {
  std::string pattern_id;
  int owner = 0;  // class id
  std::string text;
  Vec embedding;  // projected encoding of text; empty when the text has no signal
  std::vector<std::string> revisions;  // superseded texts, oldest first
  PatternOrigin origin = PatternOrigin::extracted;
};

// A sample as the oracle sees it.
struct OracleSample {
  std::string id;
  std::string text;
};

struct OracleVerdict {
  std::string sample_id;
  std::optional<std::string> assigned;  // pattern_id, nullopt = new category
  std::string justification;

  bool is_new() const { return !assigned.has_value(); }
};

struct ExtractionReport {
  std::string dominant_pattern_text;
  std::vector<std::string> member_ids;
  std::vector<std::string> excluded_ids;
};

// Maps a pattern text into the current projected space.
using PatternEncoder = std::function<Vec(const std::string&)>;

struct OracleOptions {
  int retries = 3;          // repair attempts after the first reply
  std::size_t match_batch = 20;
  std::string domain = "scam";
};

// Structured match / extract / refine requests over a chat backend, with
// bounded repair retries and an optional transcript log.
class PatternOracle {
 public:
  explicit PatternOracle(ChatBackend& backend, OracleOptions options = {},
                         TranscriptLog* log = nullptr);

  // One verdict per sample, in input order. An empty pattern set answers
  // every sample with a new-category verdict without calling the backend.
  std::vector<OracleVerdict> match_samples(const std::vector<OracleSample>& samples,
                                           const std::vector<Pattern>& patterns);

  ExtractionReport extract_pattern(const std::vector<OracleSample>& unmatched);

  // Returns the revised pattern (previous text pushed to revisions, embedding
  // refreshed). Without false positives the pattern comes back unchanged and
  // no request is made.
  Pattern refine_pattern(const Pattern& pattern, const std::vector<std::string>& true_positives,
                         const std::vector<std::string>& false_positives,
                         const PatternEncoder& encode);

  // Backend requests issued so far, retries included.
  std::size_t calls() const { return calls_; }

 private:
  template <typename T, typename Parse>
  T ask(const std::string& kind, const std::string& prompt, const char* repair, Parse parse);

  ChatBackend& backend_;
  OracleOptions options_;
  TranscriptLog* log_;
  std::size_t calls_ = 0;
};

std::string_view to_string(PatternOrigin o);

void save_patterns(const std::vector<Pattern>& patterns, const std::filesystem::path& path);

// Embeddings are not stored; they come back empty.
std::vector<Pattern> load_patterns(const std::filesystem::path& path);

}  // namespace catdisco
