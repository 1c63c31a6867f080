#include "drnn/pca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "drnn/atomic_file.hpp"

namespace drnn {

namespace {

// Slack on the energy comparison so that energy = 1 selects the rank
// despite round-off in the trailing (zero) eigenvalues.
constexpr double kEnergySlack = 1e-12;

double off_diagonal_norm(const Matrix& a) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) sq += a(i, j) * a(i, j);
  return std::sqrt(sq);
}

}  // namespace

SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance, int max_sweeps) {
  const std::size_t n = symmetric.rows();
  if (n == 0 || symmetric.cols() != n) throw_dimension_error("jacobi_eigen: square matrix columns", n, symmetric.cols());
  Matrix a = symmetric;
  Matrix v = Matrix::identity(n);

  double frobenius = 0.0;
  for (double x : a.values()) frobenius += x * x;
  const double threshold = tolerance * std::max(1.0, std::sqrt(frobenius));

  int sweeps = 0;
  while (sweeps < max_sweeps && off_diagonal_norm(a) > threshold) {
    ++sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  SymmetricEigen out{Vector(n), Matrix(n, n), sweeps};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(idx[j], idx[j]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, idx[j]);
  }
  return out;
}

PcaModel pca_fit(std::span<const Vector> rows, double energy) {
  if (rows.size() < 2) throw std::invalid_argument("pca_fit: need at least 2 rows");
  if (!(energy > 0.0 && energy <= 1.0)) throw std::invalid_argument("pca_fit: energy must lie in (0, 1]");
  const std::size_t D = rows.front().size();
  if (D == 0) throw std::invalid_argument("pca_fit: zero-dimensional rows");
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r].size() != D) throw_dimension_error("pca_fit: row " + std::to_string(r), D, rows[r].size());

  const double N = static_cast<double>(rows.size());
  Vector mean(D);
  for (const auto& x : rows) add_scaled(mean, x, 1.0);
  for (double& m : mean) m /= N;

  Matrix cov(D, D);
  Vector centered(D);
  for (const auto& x : rows) {
    for (std::size_t j = 0; j < D; ++j) centered[j] = x[j] - mean[j];
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t j = i; j < D; ++j) cov(i, j) += centered[i] * centered[j];
  }
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t j = i; j < D; ++j) cov(j, i) = cov(i, j) = cov(i, j) / N;

  const auto eig = jacobi_eigen(cov);
  double total = 0.0;
  for (double lambda : eig.values) total += std::max(lambda, 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("pca_fit: degenerate input (all rows identical)");

  std::size_t d = 0;
  double kept = 0.0;
  while (d < D) {
    kept += std::max(eig.values[d], 0.0);
    ++d;
    if (kept / total >= energy - kEnergySlack) break;
  }

  PcaModel model;
  model.mean = mean;
  model.components = Matrix(D, d);
  model.explained_variance = Vector(d);
  model.energy_retained = std::min(kept / total, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    model.explained_variance[j] = eig.values[j];
    std::size_t lead = 0;
    for (std::size_t k = 1; k < D; ++k)
      if (std::abs(eig.vectors(k, j)) > std::abs(eig.vectors(lead, j))) lead = k;
    const double sign = eig.vectors(lead, j) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < D; ++k) model.components(k, j) = sign * eig.vectors(k, j);
  }
  return model;
}

std::vector<Vector> pca_transform(const PcaModel& model, std::span<const Vector> rows) {
  const std::size_t D = model.input_dim(), d = model.output_dim();
  std::vector<Vector> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != D) throw_dimension_error("pca_transform: frame " + std::to_string(r), D, rows[r].size());
    Vector y(d);
    for (std::size_t k = 0; k < D; ++k) {
      const double c = rows[r][k] - model.mean[k];
      for (std::size_t j = 0; j < d; ++j) y[j] += c * model.components(k, j);
    }
    out.push_back(std::move(y));
  }
  return out;
}

std::vector<Vector> pca_reconstruct(const PcaModel& model, std::span<const Vector> reduced) {
  std::vector<Vector> out;
  out.reserve(reduced.size());
  for (const auto& y : reduced) {
    Vector x = model.mean;
    add_matvec(model.components, y, x);
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<Vector> stack_frames(const Dataset& dataset) {
  std::vector<Vector> rows;
  for (const auto& seq : dataset.sequences) rows.insert(rows.end(), seq.frames.begin(), seq.frames.end());
  return rows;
}

Dataset pca_transform_dataset(const PcaModel& model, const Dataset& dataset) {
  if (dataset.feature_dim != model.input_dim())
    throw_dimension_error("PCA model input vs dataset feature_dim", model.input_dim(), dataset.feature_dim);
  Dataset out = dataset;
  out.feature_dim = model.output_dim();
  for (auto& seq : out.sequences) seq.frames = pca_transform(model, seq.frames);
  return out;
}

namespace {

void write_row(std::ostream& out, const char* label, std::span<const double> values) {
  if (label != nullptr) out << label;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (label != nullptr || j > 0) out << ' ';
    out << format_double(values[j]);
  }
  out << '\n';
}

std::vector<std::string> read_tokens(std::istream& in, std::size_t& line_no, const char* section) {
  std::string line;
  if (!std::getline(in, line))
    throw FormatError(std::string("PCA file: unexpected end of file, missing ") + section);
  ++line_no;
  std::istringstream ss(line);
  std::vector<std::string> tokens;
  for (std::string t; ss >> t;) tokens.push_back(std::move(t));
  return tokens;
}

std::size_t parse_size(const std::string& token, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(token, &used);
    if (used != token.size() || v < 0) throw std::invalid_argument(token);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw FormatError("PCA file line " + std::to_string(line_no) + ": malformed count '" + token + "'");
  }
}

}  // namespace

void write_pca(std::ostream& out, const PcaModel& model) {
  out << "DRNNPCA 1\n";
  out << "dim " << model.input_dim() << " components " << model.output_dim() << " energy "
      << format_double(model.energy_retained) << '\n';
  write_row(out, "mean", model.mean.values());
  write_row(out, "variance", model.explained_variance.values());
  for (std::size_t k = 0; k < model.input_dim(); ++k) write_row(out, nullptr, model.components.row(k));
}

PcaModel read_pca(std::istream& in) {
  std::size_t line_no = 0;
  auto magic = read_tokens(in, line_no, "header");
  if (magic.size() != 2 || magic[0] != "DRNNPCA" || magic[1] != "1")
    throw FormatError("PCA file: bad header, expected 'DRNNPCA 1'");
  auto dims = read_tokens(in, line_no, "dimension line");
  if (dims.size() != 6 || dims[0] != "dim" || dims[2] != "components" || dims[4] != "energy")
    throw FormatError("PCA file line 2: expected 'dim <D> components <d> energy <e>'");
  const std::size_t D = parse_size(dims[1], line_no);
  const std::size_t d = parse_size(dims[3], line_no);
  if (D == 0 || d == 0 || d > D) throw FormatError("PCA file line 2: invalid dimensions");

  PcaModel model;
  model.energy_retained = parse_double(dims[5]);
  auto read_labeled = [&](const char* label, std::size_t count) {
    auto tokens = read_tokens(in, line_no, label);
    if (tokens.size() != count + 1 || tokens[0] != label)
      throw FormatError("PCA file line " + std::to_string(line_no) + ": expected '" + label +
                        "' followed by " + std::to_string(count) + " values");
    Vector v(count);
    for (std::size_t j = 0; j < count; ++j) v[j] = parse_double(tokens[j + 1]);
    return v;
  };
  model.mean = read_labeled("mean", D);
  model.explained_variance = read_labeled("variance", d);
  model.components = Matrix(D, d);
  for (std::size_t k = 0; k < D; ++k) {
    auto tokens = read_tokens(in, line_no, "component rows");
    if (tokens.size() != d)
      throw FormatError("PCA file line " + std::to_string(line_no) + ": expected " +
                        std::to_string(d) + " values");
    for (std::size_t j = 0; j < d; ++j) model.components(k, j) = parse_double(tokens[j]);
  }
  return model;
}

void save_pca(const PcaModel& model, const std::filesystem::path& path) {
  write_atomically(path, std::ios::binary, [&](std::ostream& out) { write_pca(out, model); });
}

PcaModel load_pca(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open PCA file " + path.string());
  return read_pca(in);
}

}  // namespace drnn
