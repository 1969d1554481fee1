#include "catdisco/prototypes.hpp"

#include <stdexcept>

namespace catdisco {

Vec blend_prototype(std::span<const double> center, std::span<const double> pattern, double beta) {
  if (pattern.empty()) return normalized(center);
  if (pattern.size() != center.size()) throw std::invalid_argument("prototype parts differ in dimension");
  Vec p(center.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = beta * center[i] + (1.0 - beta) * pattern[i];
  return normalized(p);
}

PrototypeSet build_prototypes(const std::map<int, Vec>& centers, const std::map<int, Vec>& patterns,
                              double beta, int round) {
  PrototypeSet out;
  for (const auto& [cls, mu] : centers) {
    Prototype p;
    p.class_id = cls;
    p.center_part = mu;
    if (auto it = patterns.find(cls); it != patterns.end()) p.pattern_part = it->second;
    p.vector = blend_prototype(p.center_part, p.pattern_part, beta);
    p.last_update_round = round;
    out.emplace(cls, std::move(p));
  }
  return out;
}

Vec ema_update(std::span<const double> previous, std::span<const double> fresh, double omega) {
  if (previous.size() != fresh.size()) throw std::invalid_argument("ema_update: dimension mismatch");
  Vec p(fresh.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = omega * previous[i] + (1.0 - omega) * fresh[i];
  return normalized(p);
}

PrototypeSet ema_update(const PrototypeSet& previous, const PrototypeSet& fresh, double omega) {
  PrototypeSet out = fresh;
  for (auto& [cls, p] : out)
    if (auto it = previous.find(cls); it != previous.end()) p.vector = ema_update(it->second.vector, p.vector, omega);
  return out;
}

std::map<int, Vec> prototype_vectors(const PrototypeSet& set) {
  std::map<int, Vec> out;
  for (const auto& [cls, p] : set) out.emplace(cls, p.vector);
  return out;
}

}  // namespace catdisco
