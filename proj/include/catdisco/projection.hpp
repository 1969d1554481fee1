#pragma once

#include <cstdint>
#include <span>

#include "catdisco/linalg.hpp"

namespace catdisco {

// f(x) = normalize(W x + b), W is out_dim x in_dim.
class ProjectionHead {
 public:
  ProjectionHead() = default;
  ProjectionHead(Matrix W, Vec b);

  static ProjectionHead identity(std::size_t dim);
  // Rows of W are orthonormal (Gram-Schmidt on Gaussian draws) when
  // out_dim <= in_dim, otherwise unit-norm.
  static ProjectionHead orthogonal(std::size_t out_dim, std::size_t in_dim, std::uint64_t seed);

  std::size_t in_dim() const { return W_.cols(); }
  std::size_t out_dim() const { return W_.rows(); }

  Vec affine(std::span<const double> x) const;
  // Throws TrainingError when W x + b vanishes.
  Vec forward(std::span<const double> x) const;
  Matrix forward_all(const Matrix& xs) const;

  // Adds to (gW, gb) the parameter gradient of a loss whose gradient with
  // respect to forward(x) is g_out.
  void backward(std::span<const double> x, std::span<const double> g_out, Matrix& gW, Vec& gb) const;

  Matrix& W() { return W_; }
  const Matrix& W() const { return W_; }
  Vec& b() { return b_; }
  const Vec& b() const { return b_; }

  bool operator==(const ProjectionHead&) const = default;

 private:
  Matrix W_;
  Vec b_;
};

}  // namespace catdisco
