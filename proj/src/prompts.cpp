#include "catdisco/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

namespace catdisco {

using nlohmann::json;

const char* const kJsonRepairSuffix =
    "Your previous reply could not be parsed. Return only valid JSON in the required format, "
    "with no markdown and no extra text.";

const char* const kExtractRepairSuffix =
    "Your previous reply could not be parsed. Return only the four sections in the required "
    "format, and make section 4 a valid JSON array.";

std::string single_line(std::string_view text) {
  std::string out;
  bool space = false;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(ch);
  }
  return out;
}

namespace {

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

std::string build_match_prompt(const std::vector<std::string>& categories,
                               const std::vector<std::string>& samples) {
  std::ostringstream p;
  p << "Task Objective:\n"
       "1. Read each text sample provided below.\n"
       "2. Decide which category from the category set, if any, each sample belongs to.\n"
       "3. Answer only in the output format required below.\n\n";
  p << "Category Set:\n";
  for (std::size_t i = 0; i < categories.size(); ++i) p << i + 1 << ": " << single_line(categories[i]) << '\n';
  p << "\nText Samples to be Classified:\n";
  for (std::size_t i = 0; i < samples.size(); ++i) p << i + 1 << ": \"" << single_line(samples[i]) << "\"\n";
  p << "\nClassification Rules:\n"
       "1. Assign a sample to a category only when the sample exhibits every core feature of that "
       "category's definition.\n"
       "2. When several categories qualify, choose the one the sample matches most closely.\n"
       "3. When any core feature is absent, label the sample \"New Category\".\n\n";
  p << "Output Format Requirements:\n"
       "Please strictly return the result in JSON format (do not use markdown formatting), "
       "including the following fields:\n"
       "{\n"
       "    \"results\": [\n"
       "        {\n"
       "            \"Index\": Original text sample index,\n"
       "            \"Assigned Category Index\": Category index or \"New Category\",\n"
       "            \"Matching Justification\": Which core and auxiliary features of the category the "
       "sample exhibits.\n"
       "        },\n"
       "        ...\n"
       "    ]\n"
       "}\n";
  return p.str();
}

std::string build_extract_prompt(const std::vector<std::string>& reports, const PromptStyle& style) {
  const std::string d = style.domain;
  const std::string D = capitalized(d);
  std::ostringstream p;
  p << "Task Objective: Analyze the " << d << " reports to identify major " << d << " patterns.\n\n";
  p << "Output Requirements (do not use markdown format):\n\n";
  p << "<FORMAT>\n";
  p << "1. " << D << " Method Analysis:\n"
    << "   Break down each report into key elements:\n"
       "   - Who initiates the event and what role they claim\n"
       "   - Key phrases used in the exchange\n"
       "   - How money or goods move\n"
       "   - Channels and technical means involved\n\n";
  p << "2. " << D << " Type Statistics:\n"
    << "   [Count the reports of each " << d << " type with their share and typical features; name "
    << "the " << d << " type with the most reports]\n\n";
  p << "3. Summary of Main " << D << " Type Patterns:\n"
    << "   [" << D << " Type Name]: [Typical flow of events for this type]\n\n";
  p << "4. List of report numbers belonging to the main " << d << " types identified in steps 2 and 3:\n"
    << "   [\n"
       "   {\n"
       "   \"Report Number\": number,\n"
       "   \"Basis\": \"...\"\n"
       "   },\n"
       "   ... // one element per report number with its rationale\n"
       "   ]\n\n";
  p << "</FORMAT>\n\n";
  p << "Report Information:\n";
  for (std::size_t i = 0; i < reports.size(); ++i) p << i + 1 << ": " << single_line(reports[i]) << "\n\n";
  return p.str();
}

std::string build_refine_prompt(std::string_view pattern, const std::vector<std::string>& true_positives,
                                const std::vector<std::string>& false_positives) {
  std::ostringstream p;
  p << "Task Objective: Revise the category pattern so that it keeps describing the true positive "
       "samples and no longer describes the false positive samples.\n\n";
  p << "Current Pattern:\n" << single_line(pattern) << "\n\n";
  p << "True Positive Samples (labeled as this category and matched by the pattern):\n";
  for (std::size_t i = 0; i < true_positives.size(); ++i)
    p << i + 1 << ": \"" << single_line(true_positives[i]) << "\"\n";
  p << "\nFalse Positive Samples (matched by the pattern but labeled as another category):\n";
  for (std::size_t i = 0; i < false_positives.size(); ++i)
    p << i + 1 << ": \"" << single_line(false_positives[i]) << "\"\n";
  p << "\nOutput Format Requirements:\n"
       "Please strictly return the result in JSON format (do not use markdown formatting), "
       "including the following fields:\n"
       "{\n"
       "    \"Revised Pattern\": The revised pattern description,\n"
       "    \"Revision Justification\": Which features were kept, added or removed and why.\n"
       "}\n";
  return p.str();
}

std::optional<json> first_json_value(std::string_view text, std::size_t from) {
  for (std::size_t start = from; start < text.size(); ++start) {
    const char open = text[start];
    if (open != '{' && open != '[') continue;
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{' || c == '[') ++depth;
      else if (c == '}' || c == ']') {
        if (--depth == 0) {
          json v = json::parse(text.substr(start, i - start + 1), nullptr, false);
          if (!v.is_discarded()) return v;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

namespace {

std::optional<int> as_int(const json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number()) return static_cast<int>(v.get<double>());
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    std::size_t pos = 0;
    try {
      const int x = std::stoi(s, &pos);
      if (pos > 0) return x;
    } catch (...) {
    }
  }
  return std::nullopt;
}

std::string lowered(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// The category field is named differently across prompt revisions; accept
// any key mentioning "category".
const json* find_category_field(const json& entry) {
  for (const char* k : {"Assigned Category Index", "SchemeCategoryIndex", "CategoryIndex", "Category Index"})
    if (entry.contains(k)) return &entry[k];
  for (auto it = entry.begin(); it != entry.end(); ++it)
    if (lowered(it.key()).find("categor") != std::string::npos) return &it.value();
  return nullptr;
}

std::string find_justification(const json& entry) {
  for (const char* k : {"Matching Justification", "MatchingBasis", "Matching Basis", "Justification"})
    if (entry.contains(k) && entry[k].is_string()) return entry[k].get<std::string>();
  return {};
}

}  // namespace

std::optional<std::vector<MatchEntry>> parse_match_reply(std::string_view reply) {
  auto v = first_json_value(reply);
  if (!v) return std::nullopt;
  const json* arr = nullptr;
  if (v->is_array()) arr = &*v;
  else if (v->is_object() && v->contains("results") && (*v)["results"].is_array()) arr = &(*v)["results"];
  if (!arr) return std::nullopt;

  std::vector<MatchEntry> out;
  for (const json& e : *arr) {
    if (!e.is_object() || !e.contains("Index")) continue;
    const auto idx = as_int(e["Index"]);
    const json* cat = find_category_field(e);
    if (!idx || !cat) continue;
    MatchEntry m;
    m.index = *idx;
    m.justification = find_justification(e);
    if (const auto c = as_int(*cat)) m.category = *c;
    else if (!(cat->is_string() && lowered(cat->get<std::string>()).find("new") != std::string::npos))
      continue;
    out.push_back(std::move(m));
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::optional<ExtractReply> parse_extract_reply(std::string_view reply) {
  const std::string text(reply);
  static const std::regex summary_re(R"((^|\n)[ \t]*3\.[^\n]*[Pp]attern[^\n]*\n)");
  static const std::regex list_re(R"((^|\n)[ \t]*4\.[^\n]*\n)");

  std::smatch m3, m4;
  if (!std::regex_search(text, m3, summary_re)) return std::nullopt;
  const std::size_t summary_start = static_cast<std::size_t>(m3.position(0) + m3.length(0));
  const std::string after = text.substr(summary_start);
  if (!std::regex_search(after, m4, list_re)) return std::nullopt;
  const std::size_t list_start = summary_start + static_cast<std::size_t>(m4.position(0) + m4.length(0));

  // First non-empty paragraph of the summary section.
  std::istringstream summary(after.substr(0, static_cast<std::size_t>(m4.position(0))));
  std::string line, paragraph;
  while (std::getline(summary, line)) {
    const std::string trimmed = single_line(line);
    if (trimmed.empty()) {
      if (!paragraph.empty()) break;
      continue;
    }
    paragraph += (paragraph.empty() ? "" : " ") + trimmed;
  }
  while (!paragraph.empty() && (paragraph.front() == '*' || paragraph.front() == '-' || paragraph.front() == ' '))
    paragraph.erase(paragraph.begin());
  if (paragraph.empty()) return std::nullopt;

  auto list = first_json_value(text, list_start);
  if (!list || !list->is_array()) return std::nullopt;
  ExtractReply out;
  out.pattern_text = paragraph;
  for (const json& e : *list) {
    if (!e.is_object()) continue;
    for (auto it = e.begin(); it != e.end(); ++it) {
      const std::string key = lowered(it.key());
      if (key.find("number") != std::string::npos || key == "index" || key == "id") {
        if (const auto n = as_int(it.value())) out.report_numbers.push_back(*n);
        break;
      }
    }
  }
  return out;
}

std::optional<std::string> parse_refine_reply(std::string_view reply) {
  auto v = first_json_value(reply);
  if (!v || !v->is_object()) return std::nullopt;
  for (auto it = v->begin(); it != v->end(); ++it) {
    if (lowered(it.key()).find("pattern") != std::string::npos && it.value().is_string()) {
      std::string s = single_line(it.value().get<std::string>());
      if (!s.empty()) return s;
    }
  }
  return std::nullopt;
}

}  // namespace catdisco
