#include "catdisco/linalg.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace catdisco {

Matrix Matrix::from_rows(const std::vector<Vec>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) m.set_row(r, rows[r]);
  return m;
}

void Matrix::set_row(std::size_t r, std::span<const double> v) {
  if (v.size() != cols_) throw std::invalid_argument("row width mismatch");
  std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
}

void Matrix::append_row(std::span<const double> v) {
  if (rows_ == 0 && cols_ == 0) cols_ = v.size();
  if (v.size() != cols_) throw std::invalid_argument("row width mismatch");
  data_.insert(data_.end(), v.begin(), v.end());
  ++rows_;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine of zero-norm vector");
  return dot(a, b) / (na * nb);
}

Vec normalized(std::span<const double> a) {
  Vec out(a.begin(), a.end());
  normalize_in_place(out);
  return out;
}

void normalize_in_place(std::span<double> a) {
  const double n = norm(a);
  if (n == 0.0 || !std::isfinite(n)) throw std::invalid_argument("zero-norm embedding");
  for (double& x : a) x /= n;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vec mean_of_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Vec mean(m.cols(), 0.0);
  if (rows.empty()) return mean;
  for (std::size_t r : rows) axpy(1.0, m.row(r), mean);
  for (double& x : mean) x /= static_cast<double>(rows.size());
  return mean;
}

}  // namespace catdisco
