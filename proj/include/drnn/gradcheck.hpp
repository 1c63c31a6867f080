#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "drnn/backward.hpp"

namespace drnn {

inline constexpr double kFiniteDiffEpsilon = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-5;

using ParamLoss = std::function<double(const CellParams&)>;

/// Central differences (L(p + eps e_j) - L(p - eps e_j)) / 2 eps for every
/// scalar parameter.
GradientSet finite_diff_grad(const ParamLoss& loss, const CellParams& params,
                             double epsilon = kFiniteDiffEpsilon);

/// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

/// Largest relative error over all parameters; throws on shape mismatch.
double max_relative_error(const GradientSet& a, const GradientSet& b);

/// Loss whose gradient the given truncation mode computes exactly: the true
/// sequence loss for Full, and for Truncated the loss of a forward pass whose
/// gates see the DoS recorded at `reference` as constants. Evaluated by an
/// independent extended-precision scalar implementation and returned as the
/// offset from the loss at `reference`.
ParamLoss oracle_loss(std::vector<Vector> xs, Labels labels, LossMode mode,
                      Truncation truncation, const CellParams& reference);

struct GradcheckCase {
  int order = 0;
  Truncation truncation = Truncation::Full;
  LossMode mode = LossMode::SequenceFinal;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradcheckOptions {
  std::uint64_t seed = 7;
  std::size_t input_dim = 5;
  std::size_t state_dim = 4;
  std::size_t output_dim = 3;
  std::size_t frames = 6;
  double init_scale = 0.5;
  double epsilon = kFiniteDiffEpsilon;
  double tolerance = kGradcheckTolerance;
  /// Test hook: added to the first entry of W_ix in the analytic gradient.
  double corrupt_gradient = 0.0;
};

/// Every order x truncation x loss-mode combination on a random instance.
std::vector<GradcheckCase> run_gradcheck(const GradcheckOptions& options);

std::string to_string(Truncation t);
std::string to_string(LossMode m);

}  // namespace drnn
