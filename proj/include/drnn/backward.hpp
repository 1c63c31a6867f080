#pragma once

#include <span>
#include <vector>

#include "drnn/cell.hpp"
#include "drnn/loss.hpp"

namespace drnn {

enum class Truncation {
  /// DoS vectors entering the gates (orders 0..N, at t-1 for the input and
  /// forget gates, at t for the output gate) are constants in reverse mode.
  /// Gradient still flows along the f * s_{t-1} state chain, through
  /// W_zs s_t, and through the previous output z_{t-1}.
  Truncated,
  /// Exact gradient of the unrolled graph.
  Full,
};

/// Reverse accumulation over the traces of one forward run, starting from
/// d loss / d z_t for every frame.
GradientSet backward_from_logit_gradients(std::span<const StepTrace> traces,
                                          std::span<const Vector> dz,
                                          const CellParams& params, Truncation truncation);

/// Gradient of sequence_loss(outputs, labels, mode) with respect to params.
GradientSet backward(std::span<const StepTrace> traces, const Labels& labels, LossMode mode,
                     const CellParams& params, Truncation truncation);

}  // namespace drnn
