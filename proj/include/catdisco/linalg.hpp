#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace catdisco {

using Vec = std::vector<double>;

// Dense row-major matrix. Rows are the unit of access everywhere in the
// engine (one row per sample, center or prototype).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<Vec>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void set_row(std::size_t r, std::span<const double> v);
  void append_row(std::span<const double> v);

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  Matrix transposed() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);
double distance(std::span<const double> a, std::span<const double> b);

// Cosine similarity; throws std::invalid_argument on a zero-norm input.
double cosine(std::span<const double> a, std::span<const double> b);

// Returns a / |a|. Throws std::invalid_argument when |a| == 0.
Vec normalized(std::span<const double> a);
void normalize_in_place(std::span<double> a);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// Mean of the selected rows; an empty selection yields a zero vector.
Vec mean_of_rows(const Matrix& m, std::span<const std::size_t> rows);

}  // namespace catdisco
