#include "catdisco/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "catdisco/errors.hpp"

namespace catdisco {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json vec_map(const std::map<int, Vec>& m) {
  json arr = json::array();
  for (const auto& [cls, v] : m) arr.push_back({{"class_id", cls}, {"vector", v}});
  return arr;
}

std::map<int, Vec> vec_map_from(const json& arr) {
  std::map<int, Vec> out;
  for (const auto& e : arr) out.emplace(e.at("class_id").get<int>(), e.at("vector").get<Vec>());
  return out;
}

LabelSource source_from(const std::string& s) {
  for (auto src : {LabelSource::cluster, LabelSource::pattern_match, LabelSource::consensus_reassign,
                   LabelSource::low_confidence_reassign})
    if (to_string(src) == s) return src;
  throw DataError("unknown label source '" + s + "'");
}

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("incomplete checkpoint: missing " + p.filename().string() + " in " + p.parent_path().string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("checkpoint file '" + p.string() + "' is malformed");
  return j;
}

void write_json(const json& j, const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  out << j.dump(1) << '\n';
}

}  // namespace

void save_checkpoint(const TrainingState& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json records = json::array();
  for (const auto& r : s.records)
    records.push_back({{"sample_id", r.sample_id},
                       {"current", r.current},
                       {"previous", r.previous ? json(*r.previous) : json()},
                       {"changed", r.changed},
                       {"source", to_string(r.source)},
                       {"stale", r.stale}});
  const json state{{"version", kFormatVersion},
                   {"config", s.config.to_text()},
                   {"config_hash", s.config.hash()},
                   {"seed", s.config.seed},
                   {"input_dim", s.input_dim},
                   {"K", s.K},
                   {"known_classes", s.known_classes},
                   {"W", {{"rows", s.head.W().rows()}, {"cols", s.head.W().cols()}, {"data", s.head.W().data()}}},
                   {"b", s.head.b()},
                   {"optimizer",
                    {{"kind", to_string(s.optimizer.kind)},
                     {"lr", s.optimizer.lr},
                     {"momentum", s.optimizer.momentum},
                     {"steps", s.optimizer.steps},
                     {"m", s.optimizer.m},
                     {"v", s.optimizer.v}}},
                   {"labeled_prototypes", vec_map(s.labeled_prototypes)},
                   {"records", records},
                   {"processed", s.processed},
                   {"epoch", s.epoch},
                   {"round", s.round},
                   {"bootstrapped", s.bootstrapped},
                   {"rng", s.rng_state}};
  write_json(state, dir / "state.json");

  json protos = json::array();
  for (const auto& [cls, p] : s.prototypes)
    protos.push_back({{"class_id", cls},
                      {"vector", p.vector},
                      {"center_part", p.center_part},
                      {"pattern_part", p.pattern_part},
                      {"last_update_round", p.last_update_round}});
  write_json(protos, dir / "prototypes.json");
  save_patterns(s.patterns, dir / "patterns.json");
}

TrainingState load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("checkpoint directory '" + dir.string() + "' not found");
  const json state = read_json(dir / "state.json");
  const json protos = read_json(dir / "prototypes.json");
  if (!std::filesystem::exists(dir / "patterns.json"))
    throw DataError("incomplete checkpoint: missing patterns.json in " + dir.string());

  TrainingState s;
  try {
    if (state.at("version").get<int>() != kFormatVersion) throw DataError("unsupported checkpoint version");
    s.config = parse_config(state.at("config").get<std::string>());
    if (s.config.hash() != state.at("config_hash").get<std::string>())
      throw DataError("checkpoint config hash mismatch");
    s.input_dim = state.at("input_dim").get<std::size_t>();
    s.K = state.at("K").get<int>();
    s.known_classes = state.at("known_classes").get<std::vector<int>>();
    const auto& w = state.at("W");
    Matrix W(w.at("rows").get<std::size_t>(), w.at("cols").get<std::size_t>());
    W.data() = w.at("data").get<std::vector<double>>();
    if (W.data().size() != W.rows() * W.cols()) throw DataError("checkpoint W has the wrong size");
    s.head = ProjectionHead(std::move(W), state.at("b").get<Vec>());
    const auto& o = state.at("optimizer");
    s.optimizer.kind = optimizer_from_string(o.at("kind").get<std::string>());
    s.optimizer.lr = o.at("lr").get<double>();
    s.optimizer.momentum = o.at("momentum").get<double>();
    s.optimizer.steps = o.at("steps").get<long>();
    s.optimizer.m = o.at("m").get<Vec>();
    s.optimizer.v = o.at("v").get<Vec>();
    s.labeled_prototypes = vec_map_from(state.at("labeled_prototypes"));
    for (const auto& r : state.at("records")) {
      PseudoLabelRecord rec;
      rec.sample_id = r.at("sample_id").get<std::string>();
      rec.current = r.at("current").get<int>();
      if (!r.at("previous").is_null()) rec.previous = r.at("previous").get<int>();
      rec.changed = r.at("changed").get<bool>();
      rec.source = source_from(r.at("source").get<std::string>());
      rec.stale = r.at("stale").get<bool>();
      s.records.push_back(std::move(rec));
    }
    s.processed = state.at("processed").get<std::vector<std::string>>();
    s.epoch = state.at("epoch").get<int>();
    s.round = state.at("round").get<int>();
    s.bootstrapped = state.at("bootstrapped").get<bool>();
    s.rng_state = state.at("rng").get<std::string>();
    for (const auto& e : protos) {
      Prototype p;
      p.class_id = e.at("class_id").get<int>();
      p.vector = e.at("vector").get<Vec>();
      p.center_part = e.at("center_part").get<Vec>();
      p.pattern_part = e.at("pattern_part").get<Vec>();
      p.last_update_round = e.at("last_update_round").get<int>();
      s.prototypes.emplace(p.class_id, std::move(p));
    }
  } catch (const json::exception& e) {
    throw DataError("checkpoint '" + dir.string() + "' is malformed: " + e.what());
  } catch (const ConfigError& e) {
    throw DataError("checkpoint '" + dir.string() + "' carries an invalid config: " + e.what());
  }
  s.patterns = load_patterns(dir / "patterns.json");
  return s;
}

}  // namespace catdisco
