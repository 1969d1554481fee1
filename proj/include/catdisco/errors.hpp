#pragma once

#include <stdexcept>
#include <string>

namespace catdisco {

// Exit-code families surfaced by the CLI: config 2, data 3, oracle 4.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OracleError : public std::runtime_error {
 public:
  OracleError(const std::string& what, std::string transcript = {})
      : std::runtime_error(what), transcript_(std::move(transcript)) {}

  // Raw request/response exchange that led to the failure, if any.
  const std::string& transcript() const noexcept { return transcript_; }

 private:
  std::string transcript_;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace catdisco
