#include "catdisco/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "catdisco/errors.hpp"
#include "catdisco/losses.hpp"

namespace catdisco {

std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::momentum: return "momentum";
    case OptimizerKind::adam: return "adam";
  }
  return "sgd";
}

OptimizerKind optimizer_from_string(std::string_view s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "momentum") return OptimizerKind::momentum;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (beta < 0.0 || beta > 1.0) throw ConfigError("beta must be in [0, 1]");
  if (omega < 0.0 || omega > 1.0) throw ConfigError("omega must be in [0, 1]");
  if (rho < 0.0) throw ConfigError("rho must be >= 0");
  if (negatives < 1) throw ConfigError("negatives must be >= 1");
  if (batch < 1) throw ConfigError("batch_size must be >= 1");
  if (lr < 0.0) throw ConfigError("learning_rate must be >= 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
}

Optimizer::Optimizer(OptimizerKind kind, double lr, double momentum) : kind(kind), lr(lr), momentum(momentum) {}

void Optimizer::step(ProjectionHead& head, const Matrix& gW, const Vec& gb) {
  auto& w = head.W().data();
  auto& b = head.b();
  const std::size_t nw = w.size(), n = nw + b.size();
  auto param = [&](std::size_t i) -> double& { return i < nw ? w[i] : b[i - nw]; };
  auto grad = [&](std::size_t i) { return i < nw ? gW.data()[i] : gb[i - nw]; };
  ++steps;
  switch (kind) {
    case OptimizerKind::sgd:
      for (std::size_t i = 0; i < n; ++i) param(i) -= lr * grad(i);
      break;
    case OptimizerKind::momentum:
      if (m.size() != n) m.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = momentum * m[i] + grad(i);
        param(i) -= lr * m[i];
      }
      break;
    case OptimizerKind::adam: {
      constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
      if (m.size() != n) m.assign(n, 0.0);
      if (v.size() != n) v.assign(n, 0.0);
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps));
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (1 - b1) * grad(i);
        v[i] = b2 * v[i] + (1 - b2) * grad(i) * grad(i);
        param(i) -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
      break;
    }
  }
}

namespace {

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// min(k, pool size) draws from pool without replacement.
template <typename T>
std::vector<T> sample_without(std::mt19937_64& rng, const std::vector<T>& pool, std::size_t k) {
  std::vector<T> copy = pool;
  k = std::min(k, copy.size());
  for (std::size_t i = 0; i < k; ++i) std::swap(copy[i], copy[i + uniform_index(rng, copy.size() - i)]);
  copy.resize(k);
  return copy;
}

struct Entry {
  bool labeled;
  std::size_t row;
};

class EpochRunner {
 public:
  EpochRunner(const EpochInputs& in, const LossConfig& cfg) : in_(in), cfg_(cfg) {
    for (std::size_t i = 0; i < in.pseudo_labels.size(); ++i) by_label_[in.pseudo_labels[i]].push_back(i);
    for (const auto& [cls, p] : in.unlabeled_prototypes) u_classes_.push_back(cls);
    for (const auto& [cls, p] : in.labeled_prototypes) l_classes_.push_back(cls);
  }

  LossReport run(const ProjectionHead* frozen, ProjectionHead* head, Optimizer* opt, std::mt19937_64& rng) {
    std::vector<Entry> order;
    for (std::size_t i = 0; i < in_.unlabeled->rows(); ++i) order.push_back({false, i});
    if (in_.labeled)
      for (std::size_t i = 0; i < in_.labeled->rows(); ++i) order.push_back({true, i});
    std::shuffle(order.begin(), order.end(), rng);

    LossReport report;
    std::size_t n_il = 0, n_novel = 0, n_known = 0, n_ce = 0;
    const std::size_t B = static_cast<std::size_t>(cfg_.batch);
    for (std::size_t start = 0; start < order.size(); start += B) {
      const ProjectionHead& h = head ? *head : *frozen;
      const std::vector<Entry> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + B)));
      Matrix gW(h.out_dim(), h.in_dim());
      Vec gb(h.out_dim(), 0.0);
      const auto terms = batch_step(h, batch, rng, gW, gb);
      const double total = terms.il + terms.novel_pl + terms.known_pl + terms.ce;
      if (!std::isfinite(total)) {
        std::ostringstream diag;
        diag << "non-finite loss in batch " << report.batches << ": il=" << terms.il << " novel=" << terms.novel_pl
             << " known=" << terms.known_pl << " ce=" << terms.ce;
        spdlog::error("{}", diag.str());
        throw TrainingError(diag.str());
      }
      if (head) opt->step(*head, gW, gb);
      report.il += terms.il;
      report.novel_pl += terms.novel_pl;
      report.known_pl += terms.known_pl;
      report.ce += terms.ce;
      n_il += has_il_;
      n_novel += has_novel_;
      n_known += has_known_;
      n_ce += has_ce_;
      ++report.batches;
    }
    auto mean = [](double s, std::size_t n) { return n ? s / static_cast<double>(n) : 0.0; };
    report.il = mean(report.il, n_il);
    report.novel_pl = mean(report.novel_pl, n_novel);
    report.known_pl = mean(report.known_pl, n_known);
    report.ce = mean(report.ce, n_ce);
    report.total = report.il + report.novel_pl + report.known_pl + report.ce;
    return report;
  }

 private:
  LossReport batch_step(const ProjectionHead& h, const std::vector<Entry>& batch, std::mt19937_64& rng, Matrix& gW,
                        Vec& gb) {
    LossReport t;
    has_il_ = has_novel_ = has_known_ = has_ce_ = false;
    const Matrix& U = *in_.unlabeled;
    const std::size_t N = static_cast<std::size_t>(cfg_.negatives);

    // Instance-level term over oracle-processed anchors.
    struct Triple {
      std::size_t a, p;
      std::vector<std::size_t> negs;
    };
    std::vector<Triple> triples;
    for (const auto& e : batch) {
      if (e.labeled || !in_.processed[e.row]) continue;
      const int y = in_.pseudo_labels[e.row];
      const auto& peers = by_label_[y];
      if (peers.size() < 2) continue;
      std::size_t p = peers[uniform_index(rng, peers.size() - 1)];
      if (p == e.row) p = peers.back();
      std::vector<std::size_t> others;
      for (const auto& [cls, rows] : by_label_)
        if (cls != y) others.insert(others.end(), rows.begin(), rows.end());
      if (others.empty()) continue;
      triples.push_back({e.row, p, sample_without(rng, others, N)});
    }
    if (!triples.empty()) {
      has_il_ = true;
      const double scale = 1.0 / static_cast<double>(triples.size());
      for (const auto& tr : triples) {
        const Vec za = h.forward(U.row(tr.a)), zp = h.forward(U.row(tr.p));
        std::vector<Vec> zn;
        for (auto r : tr.negs) zn.push_back(h.forward(U.row(r)));
        const auto r = info_nce(za, zp, zn, cfg_.tau);
        t.il += scale * r.loss;
        accumulate(h, U.row(tr.a), r.d_anchor, scale, gW, gb);
        accumulate(h, U.row(tr.p), r.d_positive, scale, gW, gb);
        for (std::size_t k = 0; k < tr.negs.size(); ++k) accumulate(h, U.row(tr.negs[k]), r.d_negatives[k], scale, gW, gb);
      }
    }

    // Prototype terms over unlabeled rows.
    std::vector<PlSample> pl;
    std::vector<std::size_t> pl_rows;
    for (const auto& e : batch) {
      if (e.labeled) continue;
      PlSample s;
      s.z = h.forward(U.row(e.row));
      s.label = in_.pseudo_labels[e.row];
      s.weight = in_.weights[e.row];
      s.neg_u = draw_classes(rng, u_classes_, s.label, N);
      if (std::binary_search(in_.known_classes.begin(), in_.known_classes.end(), s.label))
        s.neg_l = draw_classes(rng, l_classes_, s.label, N);
      pl.push_back(std::move(s));
      pl_rows.push_back(e.row);
    }
    if (!pl.empty()) {
      const auto r = pl_objectives(pl, in_.known_classes, in_.unlabeled_prototypes, in_.labeled_prototypes, cfg_.tau);
      t.novel_pl = r.novel;
      t.known_pl = r.known();
      for (const auto& s : pl) {
        const bool known = std::binary_search(in_.known_classes.begin(), in_.known_classes.end(), s.label);
        (known ? has_known_ : has_novel_) = true;
      }
      for (std::size_t i = 0; i < pl.size(); ++i) accumulate(h, U.row(pl_rows[i]), r.d_z[i], 1.0, gW, gb);
    }

    // Cross-entropy over labeled rows.
    std::vector<Vec> zl;
    std::vector<int> yl;
    std::vector<std::size_t> l_rows;
    for (const auto& e : batch) {
      if (!e.labeled) continue;
      zl.push_back(h.forward(in_.labeled->row(e.row)));
      yl.push_back(in_.labels[e.row]);
      l_rows.push_back(e.row);
    }
    if (!zl.empty()) {
      has_ce_ = true;
      const auto r = ce_loss(zl, yl, in_.labeled_prototypes, cfg_.tau);
      t.ce = r.loss;
      for (std::size_t i = 0; i < zl.size(); ++i) accumulate(h, in_.labeled->row(l_rows[i]), r.d_z[i], 1.0, gW, gb);
    }
    return t;
  }

  static std::vector<int> draw_classes(std::mt19937_64& rng, const std::vector<int>& classes, int own, std::size_t n) {
    std::vector<int> others;
    for (int c : classes)
      if (c != own) others.push_back(c);
    return sample_without(rng, others, n);
  }

  static void accumulate(const ProjectionHead& h, std::span<const double> x, const Vec& g, double scale, Matrix& gW,
                         Vec& gb) {
    if (scale == 1.0) {
      h.backward(x, g, gW, gb);
      return;
    }
    Vec s = g;
    for (auto& v : s) v *= scale;
    h.backward(x, s, gW, gb);
  }

  const EpochInputs& in_;
  const LossConfig& cfg_;
  std::map<int, std::vector<std::size_t>> by_label_;
  std::vector<int> u_classes_, l_classes_;
  bool has_il_ = false, has_novel_ = false, has_known_ = false, has_ce_ = false;
};

void check_inputs(const EpochInputs& in) {
  if (!in.unlabeled) throw std::invalid_argument("epoch inputs lack unlabeled rows");
  const std::size_t n = in.unlabeled->rows();
  if (in.pseudo_labels.size() != n || in.weights.size() != n || in.processed.size() != n)
    throw std::invalid_argument("epoch inputs: per-row vectors do not match the unlabeled rows");
  if (in.labeled && in.labels.size() != in.labeled->rows())
    throw std::invalid_argument("epoch inputs: labels do not match the labeled rows");
}

}  // namespace

LossReport train_epoch(ProjectionHead& head, Optimizer& opt, const EpochInputs& in, const LossConfig& cfg,
                       std::mt19937_64& rng) {
  check_inputs(in);
  EpochRunner runner(in, cfg);
  return runner.run(nullptr, &head, &opt, rng);
}

LossReport evaluate_epoch(const ProjectionHead& head, const EpochInputs& in, const LossConfig& cfg,
                          std::mt19937_64& rng) {
  check_inputs(in);
  EpochRunner runner(in, cfg);
  return runner.run(&head, nullptr, nullptr, rng);
}

}  // namespace catdisco
