#include "catdisco/projection.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "catdisco/errors.hpp"

namespace catdisco {

ProjectionHead::ProjectionHead(Matrix W, Vec b) : W_(std::move(W)), b_(std::move(b)) {
  if (b_.size() != W_.rows()) throw std::invalid_argument("projection bias size does not match W");
}

ProjectionHead ProjectionHead::identity(std::size_t dim) {
  Matrix W(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) W(i, i) = 1.0;
  return {std::move(W), Vec(dim, 0.0)};
}

ProjectionHead ProjectionHead::orthogonal(std::size_t out_dim, std::size_t in_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix W(out_dim, in_dim);
  for (std::size_t r = 0; r < out_dim; ++r) {
    for (;;) {
      Vec v(in_dim);
      for (auto& x : v) x = gauss(rng);
      if (r < in_dim)
        for (std::size_t p = 0; p < r; ++p) axpy(-dot(v, W.row(p)), W.row(p), v);
      const double n = norm(v);
      if (n < 1e-8) continue;
      for (auto& x : v) x /= n;
      W.set_row(r, v);
      break;
    }
  }
  return {std::move(W), Vec(out_dim, 0.0)};
}

Vec ProjectionHead::affine(std::span<const double> x) const {
  if (x.size() != in_dim()) throw std::invalid_argument("projection input has wrong dimension");
  Vec z = b_;
  for (std::size_t r = 0; r < out_dim(); ++r) z[r] += dot(W_.row(r), x);
  return z;
}

Vec ProjectionHead::forward(std::span<const double> x) const {
  Vec z = affine(x);
  const double n = norm(z);
  if (!(n > 0.0) || !std::isfinite(n)) throw TrainingError("projection output has zero or non-finite norm");
  for (auto& v : z) v /= n;
  return z;
}

Matrix ProjectionHead::forward_all(const Matrix& xs) const {
  Matrix out(xs.rows(), out_dim());
  for (std::size_t i = 0; i < xs.rows(); ++i) out.set_row(i, forward(xs.row(i)));
  return out;
}

void ProjectionHead::backward(std::span<const double> x, std::span<const double> g_out, Matrix& gW,
                              Vec& gb) const {
  Vec z = affine(x);
  const double n = norm(z);
  for (auto& v : z) v /= n;
  // d normalize(z)/dz = (I - y y^T) / |z|
  const double proj = dot(z, g_out);
  for (std::size_t r = 0; r < out_dim(); ++r) {
    const double dz = (g_out[r] - z[r] * proj) / n;
    gb[r] += dz;
    axpy(dz, x, gW.row(r));
  }
}

}  // namespace catdisco
