#include "catdisco/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "catdisco/alignment.hpp"
#include "catdisco/clustering.hpp"
#include "catdisco/errors.hpp"
#include "catdisco/mining.hpp"
#include "catdisco/ranking.hpp"
#include "catdisco/reassign.hpp"

namespace catdisco {

using nlohmann::json;

namespace {

json metrics_json(const GcdMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(); };
  return {{"acc_k", opt(m.acc_k)}, {"acc_n", opt(m.acc_n)}, {"h_score", opt(m.h_score)}, {"accuracy", m.accuracy}};
}

int nearest_prototype(const ProjectionHead& head, const PrototypeSet& prototypes, std::span<const double> x) {
  const Vec z = head.forward(x);
  int best = -1;
  double best_sim = -2.0;
  for (const auto& [cls, p] : prototypes) {
    const double s = dot(z, p.vector);
    if (s > best_sim) {
      best_sim = s;
      best = cls;
    }
  }
  return best;
}

GcdMetrics score_test(const DatasetBundle& data, const std::vector<std::size_t>& test_idx,
                      const std::vector<int>& predicted) {
  std::vector<int> truth, pred;
  for (std::size_t k = 0; k < test_idx.size(); ++k) {
    const auto gt = data.samples[test_idx[k]].ground_truth();
    if (!gt) continue;
    truth.push_back(*gt);
    pred.push_back(predicted[k]);
  }
  return gcd_metrics(pred, truth, data.known_classes, data.K);
}

// The first round clusters exactly like run_baseline with the same seed, so
// the clustering-only path and the baseline coincide.
std::uint64_t round_seed(std::uint64_t seed, int round) {
  return seed + 1000 * static_cast<std::uint64_t>(std::max(round - 1, 0));
}

Vec normalized_or_zero(Vec v) {
  const double n = norm(v);
  if (n > 0.0)
    for (auto& x : v) x /= n;
  return v;
}

}  // namespace

std::string HistoryEntry::to_json_line() const {
  json j{{"epoch", epoch},
         {"round", round},
         {"loss",
          {{"il", loss.il},
           {"novel_pl", loss.novel_pl},
           {"known_pl", loss.known_pl},
           {"ce", loss.ce},
           {"total", loss.total},
           {"batches", loss.batches}}},
         {"test", metrics_json(test)}};
  if (mining)
    j["mining"] = {{"round", mining->round},
                   {"stale", mining->stale},
                   {"patterns", mining->patterns},
                   {"processed", mining->processed},
                   {"changed", mining->changed},
                   {"low_confidence", mining->low_confidence},
                   {"excluded", mining->excluded},
                   {"oracle_calls", mining->oracle_calls},
                   {"failed_clusters", mining->failed_clusters}};
  return j.dump();
}

PipelineRun::PipelineRun(const PipelineConfig& config, const DatasetBundle& data, ChatBackend* backend,
                         TranscriptLog* transcript)
    : data_(data), backend_(backend), transcript_(transcript), embedder_(data) {
  config.validate();
  data.validate();
  state_.config = config;
  state_.input_dim = data.dimension;
  state_.K = data.K;
  state_.known_classes = data.known_classes;
  const std::size_t out_dim = config.proj_dim == 0 ? data.dimension : config.proj_dim;
  state_.head = out_dim == data.dimension ? ProjectionHead::identity(data.dimension)
                                          : ProjectionHead::orthogonal(out_dim, data.dimension, config.seed);
  state_.optimizer = Optimizer(config.loss.optimizer, config.loss.lr, config.loss.momentum);
  rng_.seed(config.seed);

  unlabeled_idx_ = data.indices_of(Split::unlabeled);
  labeled_idx_ = data.indices_of(Split::labeled);
  test_idx_ = data.indices_of(Split::test);
  unlabeled_x_ = data.embeddings_of(unlabeled_idx_);
  labeled_x_ = data.embeddings_of(labeled_idx_);
  for (auto i : labeled_idx_) labeled_y_.push_back(*data.samples[i].label());
  if (unlabeled_idx_.size() < static_cast<std::size_t>(data.K))
    throw DataError("fewer unlabeled samples than categories");
  if (backend_)
    oracle_ = std::make_unique<PatternOracle>(
        *backend_, OracleOptions{config.retries, static_cast<std::size_t>(config.match_batch), "scam"}, transcript_);
}

PipelineRun::PipelineRun(TrainingState state, const DatasetBundle& data, ChatBackend* backend,
                         TranscriptLog* transcript)
    : PipelineRun(state.config, data, backend, transcript) {
  state_ = std::move(state);
  std::istringstream in(state_.rng_state);
  in >> rng_;
  if (in.fail()) throw DataError("checkpoint carries an unreadable generator state");
  check_compatible();
}

void PipelineRun::check_compatible() const {
  if (state_.input_dim != data_.dimension)
    throw DataError("checkpoint expects dimension " + std::to_string(state_.input_dim) + ", dataset has " +
                    std::to_string(data_.dimension));
  if (state_.K != data_.K || state_.known_classes != data_.known_classes)
    throw DataError("checkpoint category setup differs from the dataset");
  if (!state_.records.empty() && state_.records.size() != unlabeled_idx_.size())
    throw DataError("checkpoint pseudo-labels do not match the unlabeled split");
}

bool PipelineRun::round_due() const {
  const auto& c = state_.config;
  return state_.epoch % c.interval == 0 && state_.round < c.loss.epochs / c.interval;
}

Vec PipelineRun::encode_pattern(const std::string& text) const {
  auto e = embedder_.embed(text);
  if (!e) return {};
  return state_.head.forward(*e);
}

void PipelineRun::bootstrap_from_clusters() {
  const auto& cfg = state_.config;
  const Matrix Zu = state_.head.forward_all(unlabeled_x_);
  const Matrix Zl = state_.head.forward_all(labeled_x_);
  const auto runs = multi_run(Zu, data_.K, round_seed(cfg.seed, 0), cfg.kmeans_runs, cfg.max_iter);
  const auto& ref = runs.reference_result();

  std::vector<int> known_ids;
  std::vector<Vec> centroids;
  for (int c : data_.known_classes) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labeled_y_.size(); ++i)
      if (labeled_y_[i] == c) rows.push_back(i);
    if (rows.empty()) continue;
    known_ids.push_back(c);
    centroids.push_back(mean_of_rows(Zl, rows));
  }
  auto ranked = rank_clusters(cluster_stats(ref, Zu), cfg.select.sigma);
  std::vector<int> priority;
  for (const auto& s : ranked) priority.push_back(s.cluster_id);
  const Matching m = match_clusters(ref.centers, Matrix::from_rows(centroids), known_ids, priority);

  state_.records.clear();
  for (std::size_t i = 0; i < unlabeled_idx_.size(); ++i)
    state_.records.push_back({data_.samples[unlabeled_idx_[i]].id,
                              m.class_of_cluster[static_cast<std::size_t>(ref.assignments[i])], std::nullopt, false,
                              LabelSource::cluster, false});
  std::map<int, Vec> centers;
  for (std::size_t c = 0; c < ref.centers.rows(); ++c)
    centers[m.class_of_cluster[c]] = normalized(ref.centers.row(c));
  state_.prototypes = build_prototypes(centers, {}, cfg.loss.beta, 0);
  state_.labeled_prototypes.clear();
  for (std::size_t k = 0; k < known_ids.size(); ++k) state_.labeled_prototypes[known_ids[k]] = normalized(centroids[k]);
  for (int c : data_.known_classes)
    if (!state_.labeled_prototypes.count(c)) state_.labeled_prototypes[c] = state_.prototypes.at(c).vector;
  state_.processed.clear();
  state_.bootstrapped = true;
}

RoundSummary PipelineRun::mining_round() {
  if (!oracle_) throw ConfigError("a mining round needs an oracle backend");
  const auto& cfg = state_.config;
  const int round = state_.round + 1;
  const std::size_t calls_before = oracle_->calls();
  RoundSummary summary;
  summary.round = round;

  const Matrix Zu = state_.head.forward_all(unlabeled_x_);
  const Matrix Zl = state_.head.forward_all(labeled_x_);
  const auto runs = multi_run(Zu, data_.K, round_seed(cfg.seed, round), cfg.kmeans_runs, cfg.max_iter);
  const auto& ref = runs.reference_result();
  const std::size_t K = static_cast<std::size_t>(data_.K);

  // Known classes and their labeled centroids.
  std::vector<int> known_ids;
  std::vector<Vec> centroids;
  std::map<int, Vec> labeled_protos;
  for (int c : data_.known_classes) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labeled_y_.size(); ++i)
      if (labeled_y_[i] == c) rows.push_back(i);
    if (rows.empty()) continue;
    known_ids.push_back(c);
    centroids.push_back(mean_of_rows(Zl, rows));
    labeled_protos[c] = normalized(centroids.back());
  }

  // Rank and match.
  const auto ranked = rank_clusters(cluster_stats(ref, Zu), cfg.select.sigma);
  std::vector<int> priority;
  for (const auto& s : ranked) priority.push_back(s.cluster_id);
  Matching m = match_clusters(ref.centers, Matrix::from_rows(centroids), known_ids, priority);
  if (state_.round > 0) {
    std::map<int, Vec> previous_novel;
    for (const auto& [cls, p] : state_.prototypes)
      if (!data_.is_known(cls)) previous_novel[cls] = p.vector;
    Matrix unit_centers = ref.centers;
    for (std::size_t c = 0; c < K; ++c) normalize_in_place(unit_centers.row(c));
    carry_novel_ids(m, unit_centers, previous_novel);
  }

  std::vector<PseudoLabelRecord> cluster_records;
  for (std::size_t i = 0; i < unlabeled_idx_.size(); ++i)
    cluster_records.push_back({data_.samples[unlabeled_idx_[i]].id,
                               m.class_of_cluster[static_cast<std::size_t>(ref.assignments[i])], std::nullopt, false,
                               LabelSource::cluster, false});

  // Confidence selection.
  std::vector<AssignmentDistribution> dists;
  std::vector<std::vector<AssignmentDistribution>> members(K);
  for (std::size_t i = 0; i < unlabeled_idx_.size(); ++i) {
    auto d = assignment_distribution(Zu.row(i), ref.centers, cfg.select.alpha);
    d.sample_id = data_.samples[unlabeled_idx_[i]].id;
    members[static_cast<std::size_t>(ref.assignments[i])].push_back(d);
    dists.push_back(std::move(d));
  }
  const auto unstable = instability(runs.runs);
  const auto low = select_low_confidence(dists, unstable, cfg.select.k_low);
  summary.low_confidence = low.size();

  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < unlabeled_idx_.size(); ++i) row_of[data_.samples[unlabeled_idx_[i]].id] = i;
  auto oracle_sample = [&](const std::string& id) -> std::optional<OracleSample> {
    const auto& s = data_.samples[unlabeled_idx_[row_of.at(id)]];
    if (!s.text || s.text->empty()) return std::nullopt;
    return OracleSample{s.id, *s.text};
  };

  // Labeled predictions for refinement: class of the nearest center.
  std::vector<int> labeled_pred(labeled_y_.size());
  std::vector<double> labeled_dist(labeled_y_.size());
  for (std::size_t i = 0; i < labeled_y_.size(); ++i) {
    std::size_t best = 0;
    double bd = squared_distance(Zl.row(i), ref.centers.row(0));
    for (std::size_t c = 1; c < K; ++c) {
      const double d = squared_distance(Zl.row(i), ref.centers.row(c));
      if (d < bd) {
        bd = d;
        best = c;
      }
    }
    labeled_pred[i] = m.class_of_cluster[best];
    labeled_dist[i] = bd;
  }

  std::vector<ClusterJob> jobs;
  for (const auto& s : ranked) {
    ClusterJob job;
    job.cluster_id = s.cluster_id;
    job.class_id = m.class_of_cluster[static_cast<std::size_t>(s.cluster_id)];
    job.known = data_.is_known(job.class_id);
    for (const auto& id : select_high_confidence(members[static_cast<std::size_t>(s.cluster_id)], cfg.select.k_high))
      if (auto o = oracle_sample(id)) job.samples.push_back(std::move(*o));
    if (job.known) {
      std::vector<std::size_t> tp, fp;
      for (std::size_t i = 0; i < labeled_y_.size(); ++i) {
        if (labeled_pred[i] != job.class_id) continue;
        const auto& t = data_.samples[labeled_idx_[i]].text;
        if (!t || t->empty()) continue;
        (labeled_y_[i] == job.class_id ? tp : fp).push_back(i);
      }
      auto by_distance = [&](std::size_t a, std::size_t b) {
        return labeled_dist[a] != labeled_dist[b] ? labeled_dist[a] < labeled_dist[b] : a < b;
      };
      std::sort(tp.begin(), tp.end(), by_distance);
      std::sort(fp.begin(), fp.end(), by_distance);
      const std::size_t cap = static_cast<std::size_t>(cfg.refine_examples);
      for (std::size_t k = 0; k < std::min(cap, tp.size()); ++k) job.true_positives.push_back(*data_.samples[labeled_idx_[tp[k]]].text);
      for (std::size_t k = 0; k < std::min(cap, fp.size()); ++k) job.false_positives.push_back(*data_.samples[labeled_idx_[fp[k]]].text);
    }
    jobs.push_back(std::move(job));
  }

  // Mining.
  const PatternEncoder encode = [this](const std::string& text) { return encode_pattern(text); };
  // Patterns carry over between rounds and get refined again.
  std::vector<Pattern> carried = state_.patterns;
  for (auto& p : carried) p.embedding = encode_pattern(p.text);
  MiningResult mined = mine_all(*oracle_, jobs, encode, carried);
  const std::size_t attempted =
      static_cast<std::size_t>(std::count_if(jobs.begin(), jobs.end(), [](const auto& j) { return !j.samples.empty(); }));
  summary.failed_clusters = mined.failed_clusters;
  if (attempted > 0 && mined.failed_clusters.size() == attempted) {
    spdlog::warn("round {}: every cluster failed; reusing the previous patterns", round);
    summary.stale = true;
    mined.patterns = state_.patterns;
    for (auto& p : mined.patterns) p.embedding = encode_pattern(p.text);
  }
  summary.excluded = mined.excluded.size();

  // Re-verdicts for low-confidence and excluded samples.
  ReassignInputs in;
  in.mining_matches = mined.matched;
  in.low_confidence.insert(low.begin(), low.end());
  for (const auto& p : mined.patterns) in.owners[p.pattern_id] = p.owner;
  std::vector<OracleSample> again;
  std::set<std::string> queued;
  for (const std::vector<std::string>* list : {&low, &std::as_const(mined.excluded)})
    for (const auto& id : *list)
      if (queued.insert(id).second)
        if (auto o = oracle_sample(id)) again.push_back(std::move(*o));
  if (!again.empty()) {
    try {
      in.reverdicts = oracle_->match_samples(again, mined.patterns);
    } catch (const OracleError& e) {
      spdlog::warn("round {}: re-verdict failed, {} samples left stale: {}", round, again.size(), e.what());
      for (const auto& s : again) in.stale.insert(s.id);
    }
  }
  state_.records = reassign(cluster_records, in);

  std::set<std::string> processed;
  for (const auto& [id, pid] : mined.matched) processed.insert(id);
  for (const auto& [id, pid] : mined.members) processed.insert(id);
  for (const auto& v : in.reverdicts)
    if (!v.is_new()) processed.insert(v.sample_id);
  state_.processed.assign(processed.begin(), processed.end());
  summary.processed = processed.size();
  summary.changed = static_cast<std::size_t>(
      std::count_if(state_.records.begin(), state_.records.end(), [](const auto& r) { return r.changed; }));

  // Prototypes.
  std::map<int, std::vector<std::size_t>> rows_of;
  for (std::size_t i = 0; i < state_.records.size(); ++i) rows_of[state_.records[i].current].push_back(i);
  std::map<int, Vec> centers;
  for (std::size_t c = 0; c < K; ++c) {
    const int cls = m.class_of_cluster[c];
    auto it = rows_of.find(cls);
    Vec mu = it != rows_of.end() ? normalized_or_zero(mean_of_rows(Zu, it->second)) : Vec{};
    if (mu.empty() || norm(mu) == 0.0) mu = normalized(ref.centers.row(c));
    centers[cls] = std::move(mu);
  }
  std::map<int, Vec> pattern_parts;
  for (const auto& p : mined.patterns)
    if (!p.embedding.empty()) pattern_parts[p.owner] = p.embedding;
  const auto fresh = build_prototypes(centers, pattern_parts, cfg.loss.beta, round);
  state_.prototypes = state_.prototypes.empty() ? fresh : ema_update(state_.prototypes, fresh, cfg.loss.omega);
  for (int c : data_.known_classes)
    if (!labeled_protos.count(c)) labeled_protos[c] = state_.prototypes.at(c).vector;
  state_.labeled_prototypes = std::move(labeled_protos);
  state_.patterns = std::move(mined.patterns);
  state_.round = round;
  state_.bootstrapped = true;

  summary.patterns = state_.patterns.size();
  summary.oracle_calls = oracle_->calls() - calls_before;
  spdlog::info("round {}: {} patterns, {} processed, {} changed, {} low-confidence, {} excluded{}", round,
               summary.patterns, summary.processed, summary.changed, summary.low_confidence, summary.excluded,
               summary.stale ? " (stale)" : "");
  return summary;
}

EpochInputs PipelineRun::epoch_inputs() const {
  EpochInputs in;
  in.unlabeled = &unlabeled_x_;
  in.labeled = &labeled_x_;
  in.labels = labeled_y_;
  in.known_classes = data_.known_classes;
  const std::set<std::string> processed(state_.processed.begin(), state_.processed.end());
  for (const auto& r : state_.records) {
    in.pseudo_labels.push_back(r.current);
    in.weights.push_back(r.changed ? state_.config.loss.rho : 1.0);
    in.processed.push_back(processed.count(r.sample_id) > 0);
  }
  in.unlabeled_prototypes = prototype_vectors(state_.prototypes);
  in.labeled_prototypes = state_.labeled_prototypes;
  return in;
}

LossReport PipelineRun::train_one_epoch() {
  if (!state_.bootstrapped) throw TrainingError("training needs pseudo-labels; run a round first");
  const auto in = epoch_inputs();
  auto report = train_epoch(state_.head, state_.optimizer, in, state_.config.loss, rng_);
  ++state_.epoch;
  return report;
}

HistoryEntry PipelineRun::step() {
  HistoryEntry h;
  h.epoch = state_.epoch + 1;
  if (round_due())
    h.mining = mining_round();
  else if (!state_.bootstrapped)
    bootstrap_from_clusters();
  h.loss = train_one_epoch();
  h.round = state_.round;
  h.test = evaluate_test();
  spdlog::info("epoch {}: loss {:.4f} (il {:.4f}, novel {:.4f}, known {:.4f}, ce {:.4f})", h.epoch, h.loss.total,
               h.loss.il, h.loss.novel_pl, h.loss.known_pl, h.loss.ce);
  return h;
}

std::vector<int> PipelineRun::predict(const std::vector<std::size_t>& sample_indices) const {
  std::vector<int> out;
  out.reserve(sample_indices.size());
  for (auto i : sample_indices) out.push_back(nearest_prototype(state_.head, state_.prototypes, data_.samples[i].embedding));
  return out;
}

GcdMetrics PipelineRun::evaluate_test() const { return score_test(data_, test_idx_, predict(test_idx_)); }

TrainingState PipelineRun::snapshot() const {
  TrainingState s = state_;
  std::ostringstream out;
  out << rng_;
  s.rng_state = out.str();
  return s;
}

TrainingOutcome run_training(const PipelineConfig& config, const DatasetBundle& data, ChatBackend* backend,
                             const TrainingOptions& options) {
  const bool writing = !options.out_dir.empty();
  if (writing) {
    std::filesystem::create_directories(options.out_dir);
    if (!options.resume_from)
      for (const char* f : {"history.jsonl", "reassign_audit.jsonl"}) std::filesystem::remove(options.out_dir / f);
  }
  std::unique_ptr<TranscriptLog> log;
  if (!options.transcript.empty()) {
    if (!options.resume_from) std::filesystem::remove(options.transcript);
    log = std::make_unique<TranscriptLog>(options.transcript);
  }

  std::unique_ptr<PipelineRun> run;
  if (options.resume_from)
    run = std::make_unique<PipelineRun>(load_checkpoint(*options.resume_from), data, backend, log.get());
  else
    run = std::make_unique<PipelineRun>(config, data, backend, log.get());

  TrainingOutcome outcome;
  std::ofstream history;
  if (writing) {
    history.open(options.out_dir / "history.jsonl", std::ios::app);
    if (!history) throw DataError("cannot write history in '" + options.out_dir.string() + "'");
  }

  if (run->state().config.loss.epochs == 0 && !run->state().bootstrapped) run->bootstrap_from_clusters();
  while (!run->done()) {
    HistoryEntry h = run->step();
    if (writing) {
      history << h.to_json_line() << '\n';
      history.flush();
      if (h.mining) {
        append_reassign_audit(run->state().records, h.mining->round, options.out_dir / "reassign_audit.jsonl");
        save_checkpoint(run->snapshot(), options.out_dir / ("ckpt-round-" + std::to_string(h.mining->round)));
      }
    }
    outcome.history.push_back(std::move(h));
  }

  outcome.final_state = run->snapshot();
  outcome.metrics = run->evaluate_test();
  if (writing) {
    save_checkpoint(outcome.final_state, options.out_dir / "final");
    write_metrics_json(outcome.metrics, options.out_dir / "metrics.json");
    const auto test_idx = data.indices_of(Split::test);
    const auto pred = run->predict(test_idx);
    std::vector<int> p, t;
    for (std::size_t k = 0; k < test_idx.size(); ++k)
      if (auto gt = data.samples[test_idx[k]].ground_truth()) {
        p.push_back(pred[k]);
        t.push_back(*gt);
      }
    write_confusion_csv(p, t, outcome.metrics.permutation, data.K, options.out_dir / "confusion.csv");
  }
  return outcome;
}

GcdMetrics run_eval(const std::filesystem::path& checkpoint, const DatasetBundle& data) {
  const TrainingState s = load_checkpoint(checkpoint);
  if (s.input_dim != data.dimension)
    throw DataError("dimension mismatch: checkpoint expects " + std::to_string(s.input_dim) + ", dataset has " +
                    std::to_string(data.dimension));
  if (s.K != data.K) throw DataError("checkpoint K differs from the dataset");
  if (s.prototypes.empty()) throw DataError("incomplete checkpoint: no prototypes");
  const auto test_idx = data.indices_of(Split::test);
  std::vector<int> pred;
  for (auto i : test_idx) pred.push_back(nearest_prototype(s.head, s.prototypes, data.samples[i].embedding));
  return score_test(data, test_idx, pred);
}

BaselineResult run_baseline(const DatasetBundle& data, std::uint64_t seed, int runs, int max_iter) {
  data.validate();
  const auto unlabeled = data.embeddings_of(data.indices_of(Split::unlabeled));
  const auto mr = multi_run(unlabeled, data.K, seed, runs, max_iter);
  const auto& centers = mr.reference_result().centers;
  const auto test_idx = data.indices_of(Split::test);
  BaselineResult out;
  for (auto i : test_idx) {
    const auto& x = data.samples[i].embedding;
    int best = 0;
    double bd = squared_distance(x, centers.row(0));
    for (std::size_t c = 1; c < centers.rows(); ++c) {
      const double d = squared_distance(x, centers.row(c));
      if (d < bd) {
        bd = d;
        best = static_cast<int>(c);
      }
    }
    out.test_predictions.push_back(best);
  }
  out.metrics = score_test(data, test_idx, out.test_predictions);
  return out;
}

}  // namespace catdisco
