#pragma once

// Differential recurrent memory cell.
//
// The cell is an LSTM whose input, forget and output gates additionally see
// the discrete derivatives of the internal state (DoS) up to order N:
//
//   i_t  = sigma(sum_n W_id[n] D^n s_{t-1} + W_iz z_{t-1} + W_ix x_t + b_i)
//   f_t  = sigma(sum_n W_fd[n] D^n s_{t-1} + W_fz z_{t-1} + W_fx x_t + b_f)
//   s~_t = tanh(W_sz z_{t-1} + W_sx x_t + b_s)
//   s_t  = f_t * s_{t-1} + i_t * s~_t
//   o_t  = sigma(sum_n W_od[n] D^n s_t + W_oz z_{t-1} + W_ox x_t + b_o)
//   z_t  = o_t * tanh(W_zs s_t + b_z)
//
// with D^0 s = s, D^1 s_t = v_t = s_t - s_{t-1} and
// D^2 s_t = a_t = s_t - 2 s_{t-1} + s_{t-2}. States before the first frame
// are zero. Order 0 is the plain LSTM.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "drnn/numeric.hpp"

namespace drnn {

inline constexpr int kMaxDosOrder = 2;

/// Non-owning view of one named parameter tensor. Bias vectors appear as
/// single-column tensors.
struct TensorView {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  std::span<double> values;
};

struct ConstTensorView {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  std::span<const double> values;
};

/// Weights and biases of one dRNN memory-cell layer.
///
/// Dimensions: n = input_dim, m = state_dim, k = output_dim (class count).
/// The output gate gates the k-dimensional cell output, so its weights map
/// into R^k; the input and forget gates and the pre-state live in R^m.
struct CellParams {
  int order = 0;
  std::size_t input_dim = 0;
  std::size_t state_dim = 0;
  std::size_t output_dim = 0;

  // DoS weight families, order + 1 matrices each: m x m for the input and
  // forget gates, k x m for the output gate.
  std::vector<Matrix> w_id, w_fd, w_od;
  // Previous output into gates: m x k, m x k, k x k.
  Matrix w_iz, w_fz, w_oz;
  // Current input into gates: m x n, m x n, k x n.
  Matrix w_ix, w_fx, w_ox;
  // Pre-state (m x k, m x n) and cell output (k x m).
  Matrix w_sz, w_sx, w_zs;
  Vector b_i, b_f, b_s;  // m
  Vector b_o, b_z;       // k

  /// All-zero parameters. Throws std::invalid_argument for order outside
  /// [0, 2] or zero dimensions.
  static CellParams zeros(int order, std::size_t input_dim, std::size_t state_dim,
                          std::size_t output_dim);
  /// Uniform [-scale, scale] initialization.
  static CellParams random(int order, std::size_t input_dim, std::size_t state_dim,
                           std::size_t output_dim, SeededGenerator& rng,
                           double scale = kDefaultInitScale);

  /// Every tensor in a fixed canonical order.
  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;

  std::size_t parameter_count() const;

  /// Throws DimensionError naming the first inconsistent tensor.
  void validate() const;

  bool operator==(const CellParams&) const = default;
};

/// Gradient of a scalar loss with respect to every CellParams tensor.
struct GradientSet : CellParams {
  static GradientSet zeros_like(const CellParams& params);

  /// True when every tensor has the same name and shape as in `params`.
  bool congruent_with(const CellParams& params) const;

  double global_norm() const;
};

/// Recurrent carry between timesteps. The history window always holds two
/// past states, regardless of order.
struct CellState {
  Vector s_curr;   // s_{t}
  Vector s_prev;   // s_{t-1}
  Vector s_prev2;  // s_{t-2}
  Vector z_prev;   // z_{t}, fed to the next step as the previous output
  std::size_t t = 0;

  static CellState initial(const CellParams& params);
};

/// Everything the backward pass needs from one forward step.
struct StepTrace {
  Vector x;
  Vector z_prev;
  Vector s_prev;  // s_{t-1}

  // DoS of s_{t-1} fed to the input and forget gates (order + 1 entries).
  std::vector<Vector> dos_prev;
  // DoS of s_t fed to the output gate (order + 1 entries).
  std::vector<Vector> dos_curr;

  Vector i_pre, f_pre, o_pre, s_half_pre, out_pre;
  Vector i, f, o, s_half;
  Vector s;
  Vector out_act;  // tanh(W_zs s_t + b_z)
  Vector z;

  Vector v, a;            // v_t, a_t
  Vector v_prev, a_prev;  // v_{t-1}, a_{t-1}
};

// Individual pieces of one step.
Vector pre_state(const Vector& z_prev, const Vector& x, const CellParams& params);
Vector gate_input(std::span<const Vector> dos_prev, const Vector& z_prev, const Vector& x,
                  const CellParams& params);
Vector gate_forget(std::span<const Vector> dos_prev, const Vector& z_prev, const Vector& x,
                   const CellParams& params);
Vector gate_output(std::span<const Vector> dos_curr, const Vector& z_prev, const Vector& x,
                   const CellParams& params);
Vector update_state(const Vector& f, const Vector& i, const Vector& s_prev,
                    const Vector& s_half);
Vector cell_output(const Vector& o, const Vector& s, const CellParams& params);

Vector dos_velocity(const Vector& s, const Vector& s_prev);
Vector dos_acceleration(const Vector& s, const Vector& s_prev, const Vector& s_prev2);

/// [s, v, a] truncated to order + 1 entries.
std::vector<Vector> dos_stack(int order, const Vector& s, const Vector& s_prev,
                              const Vector& s_prev2);

/// DoS values to feed the gates in place of the ones derived from the state
/// history. Used by the frozen-DoS surrogate forward pass.
struct FrozenDos {
  std::span<const Vector> dos_prev;
  std::span<const Vector> dos_curr;
};

struct StepResult {
  CellState state;
  StepTrace trace;
};

/// One timestep: gates i, f from DoS at t-1, state update, DoS at t, gate o,
/// cell output; then the history window shifts.
StepResult step(const CellState& state, const Vector& x, const CellParams& params,
                const FrozenDos* frozen = nullptr);

struct ForwardResult {
  std::vector<Vector> outputs;
  std::vector<StepTrace> traces;
};

/// Runs `step` from the zero initial state over all frames.
ForwardResult forward_sequence(std::span<const Vector> xs, const CellParams& params);

/// Same recurrence, but every gate sees the DoS recorded in `recorded`
/// instead of the DoS of the states produced by this run.
ForwardResult forward_sequence_frozen_dos(std::span<const Vector> xs,
                                          const CellParams& params,
                                          std::span<const StepTrace> recorded);

}  // namespace drnn
