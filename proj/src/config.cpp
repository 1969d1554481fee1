#include "catdisco/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "catdisco/errors.hpp"

namespace catdisco {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "'");
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void PipelineConfig::set(std::string_view key, std::string_view value) {
  if (key == "batch_size") loss.batch = number<int>(key, value);
  else if (key == "learning_rate") loss.lr = number<double>(key, value);
  else if (key == "epochs") loss.epochs = number<int>(key, value);
  else if (key == "k_high") select.k_high = number<int>(key, value);
  else if (key == "k_low") select.k_low = number<int>(key, value);
  else if (key == "sigma") select.sigma = number<double>(key, value);
  else if (key == "alpha") select.alpha = number<double>(key, value);
  else if (key == "tau") loss.tau = number<double>(key, value);
  else if (key == "beta") loss.beta = number<double>(key, value);
  else if (key == "omega") loss.omega = number<double>(key, value);
  else if (key == "interval") interval = number<int>(key, value);
  else if (key == "kmeans_runs") kmeans_runs = number<int>(key, value);
  else if (key == "negatives") loss.negatives = number<int>(key, value);
  else if (key == "rho") loss.rho = number<double>(key, value);
  else if (key == "seed") seed = number<std::uint64_t>(key, value);
  else if (key == "proj_dim") proj_dim = number<std::size_t>(key, value);
  else if (key == "max_iter") max_iter = number<int>(key, value);
  else if (key == "optimizer") loss.optimizer = optimizer_from_string(value);
  else if (key == "momentum") loss.momentum = number<double>(key, value);
  else if (key == "oracle_model") oracle_model = std::string(value);
  else if (key == "match_batch") match_batch = number<int>(key, value);
  else if (key == "retries") retries = number<int>(key, value);
  else if (key == "refine_examples") refine_examples = number<int>(key, value);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void PipelineConfig::validate() const {
  loss.validate();
  if (select.sigma < 0.0 || select.sigma > 1.0) throw ConfigError("sigma must be in [0, 1]");
  if (!(select.alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (select.k_high < 0) throw ConfigError("k_high must be >= 0");
  if (select.k_low < 0) throw ConfigError("k_low must be >= 0");
  if (interval < 1) throw ConfigError("interval must be >= 1");
  if (kmeans_runs < 1) throw ConfigError("kmeans_runs must be >= 1");
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (match_batch < 1) throw ConfigError("match_batch must be >= 1");
  if (retries < 0) throw ConfigError("retries must be >= 0");
  if (refine_examples < 0) throw ConfigError("refine_examples must be >= 0");
}

std::string PipelineConfig::to_text() const {
  std::ostringstream o;
  o << "batch_size = " << loss.batch << '\n'
    << "learning_rate = " << fmt_double(loss.lr) << '\n'
    << "epochs = " << loss.epochs << '\n'
    << "k_high = " << select.k_high << '\n'
    << "k_low = " << select.k_low << '\n'
    << "sigma = " << fmt_double(select.sigma) << '\n'
    << "alpha = " << fmt_double(select.alpha) << '\n'
    << "tau = " << fmt_double(loss.tau) << '\n'
    << "beta = " << fmt_double(loss.beta) << '\n'
    << "omega = " << fmt_double(loss.omega) << '\n'
    << "interval = " << interval << '\n'
    << "kmeans_runs = " << kmeans_runs << '\n'
    << "negatives = " << loss.negatives << '\n'
    << "rho = " << fmt_double(loss.rho) << '\n'
    << "seed = " << seed << '\n'
    << "proj_dim = " << proj_dim << '\n'
    << "max_iter = " << max_iter << '\n'
    << "optimizer = " << to_string(loss.optimizer) << '\n'
    << "momentum = " << fmt_double(loss.momentum) << '\n'
    << "oracle_model = " << oracle_model << '\n'
    << "match_batch = " << match_batch << '\n'
    << "retries = " << retries << '\n'
    << "refine_examples = " << refine_examples << '\n';
  return o.str();
}

std::string PipelineConfig::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : to_text()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    try {
      cfg.set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace catdisco
