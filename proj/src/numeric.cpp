#include "drnn/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace drnn {

void throw_dimension_error(const std::string& operand, std::size_t expected,
                           std::size_t actual) {
  std::ostringstream msg;
  msg << "dimension mismatch for " << operand << ": expected " << expected << ", got "
      << actual;
  throw DimensionError(msg.str());
}

namespace {

void check_size(const char* operand, std::size_t expected, std::size_t actual) {
  if (expected != actual) throw_dimension_error(operand, expected, actual);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  check_size("matrix values", rows * cols, values_.size());
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector sigmoid(const Vector& x) {
  Vector y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
  return y;
}

Vector tanh_act(const Vector& x) {
  Vector y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

Vector softmax(const Vector& z) {
  if (z.empty()) throw_dimension_error("softmax logits", 1, 0);
  const double shift = *std::max_element(z.begin(), z.end());
  Vector y(z.size());
  double total = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    y[c] = std::exp(z[c] - shift);
    total += y[c];
  }
  for (double& v : y) v /= total;
  return y;
}

Vector affine(const Matrix& w, const Vector& x, const Vector& b) {
  check_size("affine input x (W.cols)", w.cols(), x.size());
  check_size("affine bias b (W.rows)", w.rows(), b.size());
  Vector out = b;
  add_matvec(w, x, out);
  return out;
}

void add_matvec(const Matrix& w, const Vector& x, Vector& out) {
  check_size("matvec input (W.cols)", w.cols(), x.size());
  check_size("matvec output (W.rows)", w.rows(), out.size());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto row = w.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols(); ++c) acc += row[c] * x[c];
    out[r] += acc;
  }
}

void add_transpose_matvec(const Matrix& w, const Vector& g, Vector& out) {
  check_size("transposed matvec input (W.rows)", w.rows(), g.size());
  check_size("transposed matvec output (W.cols)", w.cols(), out.size());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto row = w.row(r);
    const double gr = g[r];
    for (std::size_t c = 0; c < w.cols(); ++c) out[c] += row[c] * gr;
  }
}

void add_outer(Matrix& out, const Vector& a, const Vector& b) {
  check_size("outer product rows", out.rows(), a.size());
  check_size("outer product cols", out.cols(), b.size());
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += a[r] * b[c];
}

void add_scaled(Vector& out, const Vector& x, double alpha) {
  check_size("scaled add", out.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
}

Vector operator+(const Vector& a, const Vector& b) {
  check_size("vector sum", a.size(), b.size());
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector operator-(const Vector& a, const Vector& b) {
  check_size("vector difference", a.size(), b.size());
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector operator*(double alpha, const Vector& x) {
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i];
  return out;
}

Vector hadamard(const Vector& a, const Vector& b) {
  check_size("elementwise product", a.size(), b.size());
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

double dot(const Vector& a, const Vector& b) {
  check_size("dot product", a.size(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const Vector& x) { return std::sqrt(dot(x, x)); }

Matrix init_matrix(std::size_t rows, std::size_t cols, double scale, SeededGenerator& rng) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("init_matrix: rows and cols must be positive");
  if (!(scale > 0.0)) throw std::invalid_argument("init_matrix: scale must be positive");
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

Vector init_vector(std::size_t length, double scale, SeededGenerator& rng) {
  Matrix m = init_matrix(length, 1, scale, rng);
  return Vector(std::vector<double>(m.values().begin(), m.values().end()));
}

}  // namespace drnn
