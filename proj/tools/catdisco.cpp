// Command-line front end: train, eval, baseline, synth, patterns.

#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "catdisco/chat_backend.hpp"
#include "catdisco/config.hpp"
#include "catdisco/errors.hpp"
#include "catdisco/pipeline.hpp"
#include "catdisco/synth.hpp"

using namespace catdisco;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kOracle = 4 };

void print_metrics(const GcdMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  nlohmann::json recall = nlohmann::json::array();
  for (const auto& r : m.per_class_recall) recall.push_back(opt(r));
  std::cout << nlohmann::json{{"acc_k", opt(m.acc_k)},
                              {"acc_n", opt(m.acc_n)},
                              {"h_score", opt(m.h_score)},
                              {"n_test", m.n_test},
                              {"permutation", m.permutation},
                              {"per_class_recall", recall}}
                   .dump(2)
            << '\n';
}

std::vector<int> parse_sizes(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("--sizes expects comma-separated integers");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("catdisco"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Category discovery fine-tuning over precomputed embeddings"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // train
  auto* train = app.add_subcommand("train", "Run the clustering / oracle / training loop");
  std::string config_path, data_path, oracle_kind = "mock", out_dir = "out", replay_path, resume_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  train->add_option("--config", config_path, "key = value config file");
  train->add_option("--data", data_path, "Dataset JSON-lines file")->required();
  train->add_option("--oracle", oracle_kind, "Oracle backend")->check(CLI::IsMember({"http", "mock", "replay"}));
  train->add_option("--seed", seed, "Overrides the config seed");
  train->add_option("--out", out_dir, "Output directory");
  train->add_option("--transcript", replay_path, "Transcript to replay (with --oracle replay)");
  train->add_option("--resume", resume_dir, "Checkpoint directory to continue from");
  train->add_option("--set", overrides, "key=value config override (repeatable)");

  // eval
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on the test split");
  std::string ckpt_dir, eval_data;
  eval->add_option("--ckpt", ckpt_dir, "Checkpoint directory")->required();
  eval->add_option("--data", eval_data, "Dataset JSON-lines file")->required();

  // baseline
  auto* baseline = app.add_subcommand("baseline", "K-means-only reference scores");
  std::string base_data;
  std::uint64_t base_seed = 1;
  int base_runs = 5;
  baseline->add_option("--data", base_data, "Dataset JSON-lines file")->required();
  baseline->add_option("--seed", base_seed, "Base k-means seed");
  baseline->add_option("--runs", base_runs, "k-means runs");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic imbalanced dataset");
  SynthSpec spec;
  std::string synth_out, sizes_text;
  synth->add_option("--seed", spec.seed, "Generator seed");
  synth->add_option("--out", synth_out, "Output file")->required();
  synth->add_option("--K", spec.K, "Number of categories");
  synth->add_option("--known", spec.known, "Number of known categories");
  synth->add_option("--dim", spec.dim, "Embedding dimension");
  synth->add_option("--sizes", sizes_text, "Comma-separated per-class pool sizes");
  synth->add_option("--noise", spec.noise, "Per-coordinate Gaussian sigma");
  synth->add_option("--test-fraction", spec.test_fraction, "Test samples per class relative to its pool");

  // patterns
  auto* patterns = app.add_subcommand("patterns", "Dump the pattern store of a checkpoint");
  std::string pattern_ckpt;
  patterns->add_option("--ckpt", pattern_ckpt, "Checkpoint directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (*train) {
      PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
      for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (seed) cfg.seed = *seed;
      cfg.validate();
      const auto data = load_dataset(data_path);

      std::unique_ptr<ChatBackend> backend;
      TrainingOptions opts;
      opts.out_dir = out_dir;
      if (oracle_kind == "http") {
        backend = HttpChatBackend::from_environment(cfg.oracle_model);
        opts.transcript = opts.out_dir / "transcript.jsonl";
      } else if (oracle_kind == "mock") {
        backend = std::make_unique<KeywordMockBackend>();
        opts.transcript = opts.out_dir / "transcript.jsonl";
      } else {
        if (replay_path.empty()) throw ConfigError("--oracle replay needs --transcript");
        backend = std::make_unique<ReplayBackend>(replay_path);
      }
      if (!resume_dir.empty()) opts.resume_from = resume_dir;
      const auto outcome = run_training(cfg, data, backend.get(), opts);
      print_metrics(outcome.metrics);
    } else if (*eval) {
      print_metrics(run_eval(ckpt_dir, load_dataset(eval_data)));
    } else if (*baseline) {
      print_metrics(run_baseline(load_dataset(base_data), base_seed, base_runs).metrics);
    } else if (*synth) {
      if (!sizes_text.empty()) spec.sizes = parse_sizes(sizes_text);
      if (const auto parent = std::filesystem::path(synth_out).parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
      write_dataset(synth_gcd(spec), synth_out);
    } else if (*patterns) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& p : load_checkpoint(pattern_ckpt).patterns)
        out.push_back({{"pattern_id", p.pattern_id},
                       {"owner", p.owner},
                       {"text", p.text},
                       {"revisions", p.revisions},
                       {"origin", to_string(p.origin)}});
      std::cout << out.dump(2) << '\n';
    }
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfig;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kData;
  } catch (const OracleError& e) {
    spdlog::error("oracle error: {}", e.what());
    if (!e.transcript().empty()) spdlog::debug("transcript: {}", e.transcript());
    return kOracle;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
  return kOk;
}
