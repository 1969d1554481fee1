#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "catdisco/ranking.hpp"
#include "catdisco/trainer.hpp"

namespace catdisco {

struct PipelineConfig {
  LossConfig loss;
  SelectionConfig select;
  int interval = 5;      // epochs between clustering / oracle rounds
  int kmeans_runs = 5;
  int max_iter = 100;
  std::uint64_t seed = 1;
  std::size_t proj_dim = 0;  // 0 = input dimension
  std::string oracle_model = "qwen2.5-72b-instruct";
  int match_batch = 20;
  int retries = 3;
  int refine_examples = 10;  // per side

  // Throws ConfigError on an unknown key or a malformed value.
  void set(std::string_view key, std::string_view value);
  void validate() const;

  // Canonical `key = value` text; parsing it back gives the same config.
  std::string to_text() const;
  // FNV-1a of to_text(), hex.
  std::string hash() const;
};

// Flat `key = value` lines; '#' starts a comment.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::string_view text);

}  // namespace catdisco
