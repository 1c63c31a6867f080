#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace drnn {

/// Raised when operand shapes do not agree. The message names the operand
/// and the expected and actual sizes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

[[noreturn]] void throw_dimension_error(const std::string& operand, std::size_t expected,
                                        std::size_t actual);

using SeededGenerator = std::mt19937_64;

/// Dense column vector of doubles.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t length, double fill = 0.0) : values_(length, fill) {}
  Vector(std::initializer_list<double> init) : values_(init) {}
  explicit Vector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> values_;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }

  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Activations. Elementwise, stable at large magnitudes.
double sigmoid(double x);
Vector sigmoid(const Vector& x);
Vector tanh_act(const Vector& x);

/// exp(z_c) / sum_l exp(z_l), evaluated after subtracting max(z).
Vector softmax(const Vector& z);

/// W x + b.
Vector affine(const Matrix& w, const Vector& x, const Vector& b);

// In-place kernels used by the recurrence and its gradient.
void add_matvec(const Matrix& w, const Vector& x, Vector& out);            // out += W x
void add_transpose_matvec(const Matrix& w, const Vector& g, Vector& out);  // out += W^T g
void add_outer(Matrix& out, const Vector& a, const Vector& b);             // out += a b^T
void add_scaled(Vector& out, const Vector& x, double alpha);               // out += alpha x

Vector operator+(const Vector& a, const Vector& b);
Vector operator-(const Vector& a, const Vector& b);
Vector operator*(double alpha, const Vector& x);
Vector hadamard(const Vector& a, const Vector& b);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& x);

/// Entries i.i.d. uniform on [-scale, scale].
Matrix init_matrix(std::size_t rows, std::size_t cols, double scale, SeededGenerator& rng);
Vector init_vector(std::size_t length, double scale, SeededGenerator& rng);

inline constexpr double kDefaultInitScale = 0.08;

}  // namespace drnn
