#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace catdisco {

// Prompt builders are pure: identical inputs give byte-identical prompts.
// `domain` names the kind of event being categorized ("scam" by default) and
// appears in the extraction section headers.
struct PromptStyle {
  std::string domain = "scam";
};

std::string build_match_prompt(const std::vector<std::string>& categories,
                               const std::vector<std::string>& samples);

std::string build_extract_prompt(const std::vector<std::string>& reports,
                                 const PromptStyle& style = {});

std::string build_refine_prompt(std::string_view pattern,
                                const std::vector<std::string>& true_positives,
                                const std::vector<std::string>& false_positives);

// Follow-up message sent after an unparseable reply.
extern const char* const kJsonRepairSuffix;
extern const char* const kExtractRepairSuffix;

// First balanced JSON value (object or array) at or after `from` that parses.
std::optional<nlohmann::json> first_json_value(std::string_view text, std::size_t from = 0);

struct MatchEntry {
  int index = 0;                 // 1-based sample index
  std::optional<int> category;   // 1-based category index; nullopt = new category
  std::string justification;
};

// Accepts {"results": [...]} or a bare array; category under
// "Assigned Category Index" or "SchemeCategoryIndex"-style keys. Returns
// nullopt when no entry can be read.
std::optional<std::vector<MatchEntry>> parse_match_reply(std::string_view reply);

struct ExtractReply {
  std::string pattern_text;          // first entry of the pattern summary section
  std::vector<int> report_numbers;   // 1-based
};

std::optional<ExtractReply> parse_extract_reply(std::string_view reply);

std::optional<std::string> parse_refine_reply(std::string_view reply);

// Collapses whitespace runs (including newlines) to single spaces.
std::string single_line(std::string_view text);

}  // namespace catdisco
