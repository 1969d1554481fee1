#pragma once

#include <map>
#include <span>

#include "catdisco/linalg.hpp"

namespace catdisco {

struct Prototype {
  int class_id = 0;
  Vec vector;        // unit norm
  Vec center_part;   // mu_i
  Vec pattern_part;  // projected pattern embedding; empty when the class has none
  int last_update_round = 0;
};

using PrototypeSet = std::map<int, Prototype>;

// normalize(beta * center + (1 - beta) * pattern); the center alone when
// the pattern is empty.
Vec blend_prototype(std::span<const double> center, std::span<const double> pattern, double beta);

// One prototype per class in `centers`; `patterns` may omit classes.
PrototypeSet build_prototypes(const std::map<int, Vec>& centers, const std::map<int, Vec>& patterns,
                              double beta, int round);

// normalize(omega * previous + (1 - omega) * fresh)
Vec ema_update(std::span<const double> previous, std::span<const double> fresh, double omega);

// Classes absent from `previous` take the fresh prototype as is.
PrototypeSet ema_update(const PrototypeSet& previous, const PrototypeSet& fresh, double omega);

std::map<int, Vec> prototype_vectors(const PrototypeSet& set);

}  // namespace catdisco
