#include "catdisco/chat_backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "catdisco/errors.hpp"
#include "catdisco/prompts.hpp"
#include "catdisco/text_embedder.hpp"

namespace catdisco {

using nlohmann::json;

namespace {

json to_json(const std::vector<ChatMessage>& messages) {
  json arr = json::array();
  for (const auto& m : messages) arr.push_back({{"role", m.role}, {"content", m.content}});
  return arr;
}

}  // namespace

HttpChatBackend::HttpChatBackend(std::string base_url, std::string token, std::string model,
                                 std::chrono::seconds timeout)
    : token_(std::move(token)), model_(std::move(model)), timeout_(timeout) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(base_url, m, url_re)) throw ConfigError("invalid oracle base URL '" + base_url + "'");
  origin_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "";
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
}

std::unique_ptr<HttpChatBackend> HttpChatBackend::from_environment(std::string model) {
  const char* url = std::getenv("GCD_ORACLE_URL");
  if (!url || !*url) throw ConfigError("GCD_ORACLE_URL is not set");
  const char* token = std::getenv("GCD_ORACLE_TOKEN");
  return std::make_unique<HttpChatBackend>(url, token ? token : "", std::move(model));
}

std::string HttpChatBackend::complete(const std::vector<ChatMessage>& messages) {
  httplib::Client client(origin_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

  const json body = {{"model", model_}, {"messages", to_json(messages)}, {"temperature", 0}};
  auto res = client.Post(path_ + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw OracleError("oracle request failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw OracleError("oracle returned HTTP " + std::to_string(res->status), res->body);
  const json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw OracleError("oracle returned non-JSON body", res->body);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw OracleError("oracle reply has no choices[0].message.content", res->body);
  }
}

// ---------------------------------------------------------------------------

namespace {

// Numbered entries "N: text" between a header line and the next blank line
// (or, when blank lines separate entries, the next non-numbered line).
std::vector<std::string> numbered_section(const std::string& prompt, const std::string& header) {
  std::vector<std::string> out;
  const auto pos = prompt.find(header);
  if (pos == std::string::npos) return out;
  std::istringstream in(prompt.substr(pos + header.size()));
  std::string line;
  static const std::regex entry_re(R"(^(\d+): (.*)$)");
  std::getline(in, line);  // remainder of the header line
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::smatch m;
    if (!std::regex_match(line, m, entry_re)) break;
    std::string body = m[2].str();
    if (body.size() >= 2 && body.front() == '"' && body.back() == '"') body = body.substr(1, body.size() - 2);
    out.push_back(body);
  }
  return out;
}

std::string line_after(const std::string& prompt, const std::string& header) {
  const auto pos = prompt.find(header);
  if (pos == std::string::npos) return {};
  std::istringstream in(prompt.substr(pos + header.size()));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  return line;
}

std::set<std::string> token_set(const std::string& text) {
  const auto t = tokenize(text);
  return {t.begin(), t.end()};
}

bool contains_all(const std::set<std::string>& have, const std::vector<std::string>& need) {
  return !need.empty() && std::all_of(need.begin(), need.end(), [&](const auto& t) { return have.count(t) > 0; });
}

std::string mock_match(const std::string& prompt) {
  const auto categories = numbered_section(prompt, "Category Set:");
  const auto samples = numbered_section(prompt, "Text Samples to be Classified:");
  json results = json::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto have = token_set(samples[i]);
    int best = -1;
    std::size_t best_len = 0;
    for (std::size_t c = 0; c < categories.size(); ++c) {
      const auto need = tokenize(categories[c]);
      if (contains_all(have, need) && need.size() > best_len) {
        best = static_cast<int>(c);
        best_len = need.size();
      }
    }
    json entry = {{"Index", i + 1}};
    if (best >= 0) {
      entry["Assigned Category Index"] = best + 1;
      entry["Matching Justification"] = "contains every keyword of category " + std::to_string(best + 1);
    } else {
      entry["Assigned Category Index"] = "New Category";
      entry["Matching Justification"] = "no category has all of its keywords present";
    }
    results.push_back(entry);
  }
  return json{{"results", results}}.dump(2);
}

std::string mock_extract(const std::string& prompt) {
  const auto reports = numbered_section(prompt, "Report Information:");
  // Document frequency; ties go to the token seen first.
  std::map<std::string, std::pair<std::size_t, std::size_t>> df;  // token -> (count, first position)
  std::size_t position = 0;
  for (const auto& r : reports) {
    std::set<std::string> seen;
    for (const auto& t : tokenize(r)) {
      if (!seen.insert(t).second) continue;
      auto [it, fresh] = df.try_emplace(t, 0, position);
      ++it->second.first;
      ++position;
    }
  }
  std::string keyword;
  std::size_t best_count = 0, best_pos = 0;
  for (const auto& [tok, cp] : df)
    if (cp.first > best_count || (cp.first == best_count && cp.second < best_pos)) {
      keyword = tok;
      best_count = cp.first;
      best_pos = cp.second;
    }

  std::ostringstream out;
  out << "1. Method Analysis:\n";
  for (std::size_t i = 0; i < reports.size(); ++i) out << "   * Report " << i + 1 << ": keywords (" << single_line(reports[i]) << ")\n";
  out << "\n2. Type Statistics:\n   The most frequent type is \"" << keyword << "\" with " << best_count << " of "
      << reports.size() << " reports.\n\n";
  out << "3. Summary of Main Type Patterns:\n   " << keyword << "\n\n";
  out << "4. List of report numbers belonging to the main types identified in steps 2 and 3:\n";
  json list = json::array();
  for (std::size_t i = 0; i < reports.size(); ++i)
    if (token_set(reports[i]).count(keyword))
      list.push_back({{"Report Number", i + 1}, {"Basis", "mentions " + keyword}});
  out << list.dump(3) << '\n';
  return out.str();
}

std::string mock_refine(const std::string& prompt) {
  const std::string pattern = line_after(prompt, "Current Pattern:");
  std::set<std::string> banned;
  const auto marker = prompt.find("False Positive Samples");
  for (const auto& fp : numbered_section(prompt.substr(marker == std::string::npos ? 0 : marker), "False Positive Samples"))
    for (const auto& t : tokenize(fp)) banned.insert(t);
  std::string revised;
  for (const auto& t : tokenize(pattern))
    if (!banned.count(t)) revised += (revised.empty() ? "" : " ") + t;
  if (revised.empty()) revised = pattern;
  return json{{"Revised Pattern", revised}, {"Revision Justification", "removed keywords shared with false positives"}}
      .dump(2);
}

}  // namespace

std::string KeywordMockBackend::complete(const std::vector<ChatMessage>& messages) {
  ++calls_;
  if (messages.empty()) throw OracleError("mock oracle received no messages");
  // A repair follow-up re-answers the original request.
  const std::string& prompt = messages.front().content;
  if (prompt.find("Category Set:") != std::string::npos) return mock_match(prompt);
  if (prompt.find("Report Information:") != std::string::npos) return mock_extract(prompt);
  if (prompt.find("Current Pattern:") != std::string::npos) return mock_refine(prompt);
  throw OracleError("mock oracle does not recognize the prompt", prompt);
}

// ---------------------------------------------------------------------------

TranscriptLog::TranscriptLog(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw ConfigError("cannot open transcript log '" + path.string() + "'");
}

void TranscriptLog::record(const std::vector<ChatMessage>& messages, const std::string& response,
                           const std::string& kind, int attempt) {
  out_ << json{{"seq", seq_++}, {"kind", kind}, {"attempt", attempt}, {"messages", to_json(messages)},
               {"response", response}}
              .dump()
       << '\n';
  out_.flush();
}

ReplayBackend::ReplayBackend(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open replay transcript '" + path.string() + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.contains("messages") || !rec.contains("response"))
      throw ConfigError("replay transcript line " + std::to_string(lineno) + " is malformed");
    Entry e;
    for (const auto& m : rec["messages"]) e.messages.push_back({m.at("role"), m.at("content")});
    e.response = rec["response"].get<std::string>();
    entries_.push_back(std::move(e));
  }
}

std::string ReplayBackend::complete(const std::vector<ChatMessage>& messages) {
  if (next_ >= entries_.size()) throw OracleError("replay transcript exhausted after " + std::to_string(next_) + " exchanges");
  const Entry& e = entries_[next_];
  if (e.messages != messages)
    throw OracleError("replay diverged at exchange " + std::to_string(next_), to_json(messages).dump());
  ++next_;
  return e.response;
}

}  // namespace catdisco
