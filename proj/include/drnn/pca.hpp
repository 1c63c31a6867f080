#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "drnn/dataset.hpp"
#include "drnn/numeric.hpp"

namespace drnn {

struct SymmetricEigen {
  Vector values;        // descending
  Matrix vectors;       // column j pairs with values[j]
  int sweeps = 0;
};

/// Cyclic Jacobi rotations on a symmetric matrix until the off-diagonal
/// Frobenius norm drops below `tolerance` or `max_sweeps` is reached.
SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance = 1e-12,
                            int max_sweeps = 100);

struct PcaModel {
  Vector mean;                 // D
  Matrix components;           // D x d, orthonormal columns
  Vector explained_variance;   // d, non-increasing
  double energy_retained = 0;  // variance fraction kept, in (0, 1]

  std::size_t input_dim() const { return components.rows(); }
  std::size_t output_dim() const { return components.cols(); }

  bool operator==(const PcaModel&) const = default;
};

/// Population covariance (1/N) of the mean-centered rows, decomposed with
/// jacobi_eigen. Keeps the fewest leading components whose variance fraction
/// reaches `energy`. Each component is signed so that its largest-magnitude
/// coordinate is non-negative.
PcaModel pca_fit(std::span<const Vector> rows, double energy);

/// (x - mean) * components for every row.
std::vector<Vector> pca_transform(const PcaModel& model, std::span<const Vector> rows);

/// components * y + mean.
std::vector<Vector> pca_reconstruct(const PcaModel& model, std::span<const Vector> reduced);

/// All frames of all sequences, in order.
std::vector<Vector> stack_frames(const Dataset& dataset);

/// Copy of `dataset` with every frame projected.
Dataset pca_transform_dataset(const PcaModel& model, const Dataset& dataset);

/// DRNNPCA 1
/// dim <D> components <d> energy <e>
/// mean <D floats>
/// variance <d floats>
/// <D rows of d floats>
void write_pca(std::ostream& out, const PcaModel& model);
PcaModel read_pca(std::istream& in);
void save_pca(const PcaModel& model, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);

}  // namespace drnn
