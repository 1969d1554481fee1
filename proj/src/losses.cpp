#include "catdisco/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace catdisco {

namespace {

// Gradients of cos(a, b) with respect to a and b, scaled by `scale`.
void add_cosine_grad(std::span<const double> a, std::span<const double> b, double scale, Vec& ga, Vec& gb) {
  const double na = norm(a), nb = norm(b);
  const double c = dot(a, b) / (na * nb);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ga[i] += scale * (b[i] / (na * nb) - c * a[i] / (na * na));
    gb[i] += scale * (a[i] / (na * nb) - c * b[i] / (nb * nb));
  }
}

void require_nonzero(std::span<const double> v) {
  if (!(norm(v) > 0.0)) throw std::invalid_argument("zero-norm input to contrastive loss");
}

const Vec& prototype_at(const std::map<int, Vec>& set, int cls, const char* which) {
  auto it = set.find(cls);
  if (it == set.end())
    throw std::invalid_argument(std::string("missing ") + which + " prototype for class " + std::to_string(cls));
  return it->second;
}

}  // namespace

ContrastiveResult info_nce(std::span<const double> anchor, std::span<const double> positive,
                           const std::vector<Vec>& negatives, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (negatives.empty()) throw std::invalid_argument("info_nce needs at least one negative");
  require_nonzero(anchor);
  require_nonzero(positive);
  for (const auto& n : negatives) require_nonzero(n);

  const std::size_t m = negatives.size() + 1;
  std::vector<double> logits(m);
  logits[0] = cosine(anchor, positive) / tau;
  for (std::size_t k = 1; k < m; ++k) logits[k] = cosine(anchor, negatives[k - 1]) / tau;
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - top);
  const double lse = top + std::log(sum);

  ContrastiveResult r;
  r.loss = lse - logits[0];
  r.d_anchor.assign(anchor.size(), 0.0);
  r.d_positive.assign(positive.size(), 0.0);
  r.d_negatives.assign(negatives.size(), Vec(anchor.size(), 0.0));
  for (std::size_t k = 0; k < m; ++k) {
    const double g = (std::exp(logits[k] - lse) - (k == 0 ? 1.0 : 0.0)) / tau;
    if (k == 0)
      add_cosine_grad(anchor, positive, g, r.d_anchor, r.d_positive);
    else
      add_cosine_grad(anchor, negatives[k - 1], g, r.d_anchor, r.d_negatives[k - 1]);
  }
  return r;
}

ContrastiveResult prototype_loss(std::span<const double> sample, std::span<const double> own,
                                 const std::vector<Vec>& negatives, double tau, double weight) {
  ContrastiveResult r = info_nce(sample, own, negatives, tau);
  r.loss *= weight;
  for (auto& v : r.d_anchor) v *= weight;
  for (auto& v : r.d_positive) v *= weight;
  for (auto& n : r.d_negatives)
    for (auto& v : n) v *= weight;
  return r;
}

PlResult pl_objectives(const std::vector<PlSample>& batch, const std::vector<int>& known_classes,
                       const std::map<int, Vec>& unlabeled_prototypes,
                       const std::map<int, Vec>& labeled_prototypes, double tau) {
  PlResult out;
  out.d_z.reserve(batch.size());
  std::size_t n_known = 0, n_novel = 0;
  for (const auto& s : batch) {
    if (std::binary_search(known_classes.begin(), known_classes.end(), s.label))
      ++n_known;
    else
      ++n_novel;
  }

  auto term = [&](const PlSample& s, const std::map<int, Vec>& set, const std::vector<int>& neg_ids,
                  const char* which, double scale, Vec& grad) {
    const Vec& own = prototype_at(set, s.label, which);
    std::vector<Vec> negs;
    for (int c : neg_ids) negs.push_back(prototype_at(set, c, which));
    const auto r = prototype_loss(s.z, own, negs, tau, s.weight);
    axpy(scale, r.d_anchor, grad);
    return scale * r.loss;
  };

  for (const auto& s : batch) {
    Vec grad(s.z.size(), 0.0);
    if (std::binary_search(known_classes.begin(), known_classes.end(), s.label)) {
      const double scale = 1.0 / static_cast<double>(n_known);
      out.known_u += term(s, unlabeled_prototypes, s.neg_u, "unlabeled-side", scale, grad);
      out.known_l += term(s, labeled_prototypes, s.neg_l, "labeled", scale, grad);
    } else {
      const double scale = 1.0 / static_cast<double>(n_novel);
      out.novel += term(s, unlabeled_prototypes, s.neg_u, "unlabeled-side", scale, grad);
    }
    out.d_z.push_back(std::move(grad));
  }
  return out;
}

CeResult ce_loss(const std::vector<Vec>& z, const std::vector<int>& labels,
                 const std::map<int, Vec>& labeled_prototypes, double tau) {
  if (z.size() != labels.size()) throw std::invalid_argument("ce_loss: labels and inputs differ in length");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  CeResult out;
  if (z.empty()) return out;
  const double scale = 1.0 / static_cast<double>(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    prototype_at(labeled_prototypes, labels[i], "labeled");
    require_nonzero(z[i]);
    std::vector<double> logits;
    std::vector<const Vec*> protos;
    std::size_t target = 0;
    for (const auto& [cls, p] : labeled_prototypes) {
      if (cls == labels[i]) target = logits.size();
      logits.push_back(cosine(z[i], p) / tau);
      protos.push_back(&p);
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - top);
    const double lse = top + std::log(sum);
    out.loss += scale * (lse - logits[target]);

    Vec grad(z[i].size(), 0.0);
    for (std::size_t c = 0; c < logits.size(); ++c) {
      const double g = scale * (std::exp(logits[c] - lse) - (c == target ? 1.0 : 0.0)) / tau;
      Vec unused(z[i].size(), 0.0);
      add_cosine_grad(z[i], *protos[c], g, grad, unused);
    }
    out.d_z.push_back(std::move(grad));
  }
  return out;
}

}  // namespace catdisco
