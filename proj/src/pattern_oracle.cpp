#include "catdisco/pattern_oracle.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "catdisco/errors.hpp"
#include "catdisco/prompts.hpp"

namespace catdisco {

using nlohmann::json;

std::string_view to_string(PatternOrigin o) {
  return o == PatternOrigin::refined ? "refined" : "extracted";
}

PatternOracle::PatternOracle(ChatBackend& backend, OracleOptions options, TranscriptLog* log)
    : backend_(backend), options_(std::move(options)), log_(log) {
  if (options_.retries < 0) throw ConfigError("oracle retries must be >= 0");
  if (options_.match_batch == 0) throw ConfigError("oracle match batch must be >= 1");
}

template <typename T, typename Parse>
T PatternOracle::ask(const std::string& kind, const std::string& prompt, const char* repair, Parse parse) {
  std::vector<ChatMessage> messages{{"user", prompt}};
  json trail = json::array();
  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    std::string reply;
    ++calls_;
    try {
      reply = backend_.complete(messages);
    } catch (const OracleError& e) {
      last_error = e.what();
      trail.push_back({{"attempt", attempt}, {"error", last_error}});
      spdlog::warn("{} request failed (attempt {}): {}", kind, attempt + 1, last_error);
      continue;
    }
    if (log_) log_->record(messages, reply, kind, attempt);
    trail.push_back({{"attempt", attempt}, {"response", reply}});
    if (std::optional<T> parsed = parse(reply)) return std::move(*parsed);
    last_error = "unparseable " + kind + " reply";
    spdlog::warn("{} (attempt {})", last_error, attempt + 1);
    messages.push_back({"assistant", reply});
    messages.push_back({"user", repair});
  }
  throw OracleError(kind + " failed after " + std::to_string(options_.retries + 1) +
                        " attempts: " + last_error,
                    json{{"prompt", prompt}, {"exchanges", trail}}.dump());
}

std::vector<OracleVerdict> PatternOracle::match_samples(const std::vector<OracleSample>& samples,
                                                        const std::vector<Pattern>& patterns) {
  std::vector<OracleVerdict> out;
  out.reserve(samples.size());
  if (patterns.empty()) {
    for (const auto& s : samples) out.push_back({s.id, std::nullopt, "empty pattern set"});
    return out;
  }
  std::vector<std::string> categories;
  for (const auto& p : patterns) categories.push_back(single_line(p.text));

  for (std::size_t start = 0; start < samples.size(); start += options_.match_batch) {
    const std::size_t stop = std::min(samples.size(), start + options_.match_batch);
    std::vector<std::string> texts;
    for (std::size_t i = start; i < stop; ++i) texts.push_back(single_line(samples[i].text));
    const auto entries = ask<std::vector<MatchEntry>>(
        "match", build_match_prompt(categories, texts), kJsonRepairSuffix,
        [](const std::string& r) { return parse_match_reply(r); });

    std::vector<OracleVerdict> batch;
    for (std::size_t i = start; i < stop; ++i) batch.push_back({samples[i].id, std::nullopt, {}});
    std::vector<bool> seen(batch.size(), false);
    for (const auto& e : entries) {
      if (e.index < 1 || e.index > static_cast<int>(batch.size())) {
        spdlog::warn("match reply names sample index {} outside the batch", e.index);
        continue;
      }
      auto& v = batch[static_cast<std::size_t>(e.index - 1)];
      if (seen[static_cast<std::size_t>(e.index - 1)]) continue;
      seen[static_cast<std::size_t>(e.index - 1)] = true;
      v.justification = e.justification;
      if (!e.category) continue;
      if (*e.category < 1 || *e.category > static_cast<int>(patterns.size())) {
        spdlog::warn("match reply names unknown category {}; treated as new", *e.category);
        continue;
      }
      v.assigned = patterns[static_cast<std::size_t>(*e.category - 1)].pattern_id;
    }
    for (std::size_t i = 0; i < batch.size(); ++i)
      if (!seen[i]) spdlog::warn("match reply omits sample {}; treated as new", batch[i].sample_id);
    out.insert(out.end(), batch.begin(), batch.end());
  }
  return out;
}

ExtractionReport PatternOracle::extract_pattern(const std::vector<OracleSample>& unmatched) {
  if (unmatched.empty()) throw std::invalid_argument("extract_pattern needs at least one sample");
  std::vector<std::string> texts;
  for (const auto& s : unmatched) texts.push_back(single_line(s.text));
  const std::size_t n = texts.size();
  const auto reply = ask<ExtractReply>(
      "extract", build_extract_prompt(texts, PromptStyle{options_.domain}), kExtractRepairSuffix,
      [n](const std::string& r) -> std::optional<ExtractReply> {
        auto parsed = parse_extract_reply(r);
        if (!parsed || parsed->pattern_text.empty()) return std::nullopt;
        const bool any_member = std::any_of(parsed->report_numbers.begin(), parsed->report_numbers.end(),
                                            [n](int k) { return k >= 1 && k <= static_cast<int>(n); });
        if (!any_member) return std::nullopt;
        return parsed;
      });

  std::set<int> members(reply.report_numbers.begin(), reply.report_numbers.end());
  ExtractionReport report;
  report.dominant_pattern_text = reply.pattern_text;
  for (std::size_t i = 0; i < n; ++i) {
    if (members.count(static_cast<int>(i + 1)))
      report.member_ids.push_back(unmatched[i].id);
    else
      report.excluded_ids.push_back(unmatched[i].id);
  }
  return report;
}

Pattern PatternOracle::refine_pattern(const Pattern& pattern, const std::vector<std::string>& true_positives,
                                      const std::vector<std::string>& false_positives,
                                      const PatternEncoder& encode) {
  if (false_positives.empty()) return pattern;
  std::vector<std::string> tp, fp;
  for (const auto& t : true_positives) tp.push_back(single_line(t));
  for (const auto& t : false_positives) fp.push_back(single_line(t));
  const auto revised = ask<std::string>(
      "refine", build_refine_prompt(single_line(pattern.text), tp, fp), kJsonRepairSuffix,
      [](const std::string& r) -> std::optional<std::string> {
        auto parsed = parse_refine_reply(r);
        if (!parsed || single_line(*parsed).empty()) return std::nullopt;
        return parsed;
      });
  if (revised == pattern.text) return pattern;
  Pattern out = pattern;
  out.revisions.push_back(pattern.text);
  out.text = revised;
  out.origin = PatternOrigin::refined;
  out.embedding = encode(revised);
  return out;
}

void save_patterns(const std::vector<Pattern>& patterns, const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& p : patterns)
    arr.push_back({{"pattern_id", p.pattern_id},
                   {"owner", p.owner},
                   {"text", p.text},
                   {"revisions", p.revisions},
                   {"origin", to_string(p.origin)}});
  std::ofstream out(path);
  if (!out) throw DataError("cannot write pattern store '" + path.string() + "'");
  out << arr.dump(2) << '\n';
}

std::vector<Pattern> load_patterns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pattern store '" + path.string() + "'");
  const json arr = json::parse(in, nullptr, false);
  if (arr.is_discarded() || !arr.is_array()) throw DataError("pattern store '" + path.string() + "' is malformed");
  std::vector<Pattern> out;
  try {
    for (const auto& e : arr) {
      Pattern p;
      p.pattern_id = e.at("pattern_id").get<std::string>();
      p.owner = e.at("owner").get<int>();
      p.text = e.at("text").get<std::string>();
      p.revisions = e.at("revisions").get<std::vector<std::string>>();
      p.origin = e.at("origin").get<std::string>() == "refined" ? PatternOrigin::refined : PatternOrigin::extracted;
      out.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw DataError("pattern store '" + path.string() + "': " + e.what());
  }
  return out;
}

}  // namespace catdisco
