#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace catdisco {

struct ChatMessage {
  std::string role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

// A chat-completion style text oracle.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Throws OracleError when no reply can be obtained.
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

// OpenAI-compatible endpoint: POST {base_url}/chat/completions at
// temperature 0 with an optional bearer token.
class HttpChatBackend final : public ChatBackend {
 public:
  HttpChatBackend(std::string base_url, std::string token, std::string model,
                  std::chrono::seconds timeout = std::chrono::seconds(120));

  // Reads GCD_ORACLE_URL and GCD_ORACLE_TOKEN. Throws ConfigError when the
  // URL is not set.
  static std::unique_ptr<HttpChatBackend> from_environment(std::string model);

  std::string complete(const std::vector<ChatMessage>& messages) override;

 private:
  std::string origin_;  // scheme://host[:port]
  std::string path_;    // path prefix of base_url, without trailing slash
  std::string token_;
  std::string model_;
  std::chrono::seconds timeout_;
};

// Answers the engine's own match / extract / refine prompts with simple
// keyword rules: a pattern is the most widespread token of its reports,
// a sample matches a pattern when it contains all of the pattern's tokens,
// and refinement drops pattern tokens seen in any false positive.
class KeywordMockBackend final : public ChatBackend {
 public:
  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::size_t calls() const { return calls_; }

 private:
  std::size_t calls_ = 0;
};

// Appends one JSON line per exchange: {seq, kind, attempt, messages, response}.
class TranscriptLog {
 public:
  explicit TranscriptLog(const std::filesystem::path& path);
  void record(const std::vector<ChatMessage>& messages, const std::string& response,
              const std::string& kind = {}, int attempt = 0);

 private:
  std::ofstream out_;
  std::size_t seq_ = 0;
};

// Serves the responses of a transcript log in order. Requests must match the
// recorded ones exactly; any divergence is an OracleError.
class ReplayBackend final : public ChatBackend {
 public:
  explicit ReplayBackend(const std::filesystem::path& path);
  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::size_t remaining() const { return entries_.size() - next_; }

 private:
  struct Entry {
    std::vector<ChatMessage> messages;
    std::string response;
  };
  std::vector<Entry> entries_;
  std::size_t next_ = 0;
};

}  // namespace catdisco
