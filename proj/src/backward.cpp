#include "drnn/backward.hpp"

#include <sstream>

namespace drnn {

namespace {

// d sigma(p) / dp = y (1 - y); d tanh(p) / dp = 1 - y^2.
Vector sigmoid_backward(const Vector& grad_out, const Vector& y) {
  Vector g(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) g[j] = grad_out[j] * y[j] * (1.0 - y[j]);
  return g;
}

Vector tanh_backward(const Vector& grad_out, const Vector& y) {
  Vector g(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) g[j] = grad_out[j] * (1.0 - y[j] * y[j]);
  return g;
}

void check_traces(std::span<const StepTrace> traces, std::span<const Vector> dz,
                  const CellParams& params) {
  if (traces.empty()) throw std::invalid_argument("backward: no traces");
  if (dz.size() != traces.size())
    throw_dimension_error("backward: logit gradient count", traces.size(), dz.size());
  const auto dos_count = static_cast<std::size_t>(params.order + 1);
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const auto& tr = traces[t];
    if (tr.dos_prev.size() != dos_count || tr.dos_curr.size() != dos_count ||
        tr.s.size() != params.state_dim || tr.x.size() != params.input_dim ||
        tr.z.size() != params.output_dim || dz[t].size() != params.output_dim) {
      std::ostringstream msg;
      msg << "backward: trace " << t << " does not match the parameter shapes (order "
          << params.order << ", n=" << params.input_dim << ", m=" << params.state_dim
          << ", k=" << params.output_dim << ")";
      throw DimensionError(msg.str());
    }
  }
}

}  // namespace

GradientSet backward_from_logit_gradients(std::span<const StepTrace> traces,
                                          std::span<const Vector> dz,
                                          const CellParams& params, Truncation truncation) {
  params.validate();
  check_traces(traces, dz, params);

  const std::size_t T = traces.size();
  const std::size_t m = params.state_dim;
  const bool full = truncation == Truncation::Full;

  GradientSet g = GradientSet::zeros_like(params);

  // gs[t] = d loss / d s_t, gz[t] = d loss / d z_t (frame indices 0..T-1).
  // States before frame 0 are constants.
  std::vector<Vector> gs(T, Vector(m));
  std::vector<Vector> gz(dz.begin(), dz.end());

  auto add_state = [&](std::ptrdiff_t t, const Vector& v, double coeff) {
    if (t >= 0) add_scaled(gs[static_cast<std::size_t>(t)], v, coeff);
  };
  // Distributes the gradient of DoS order `n` of state `t` onto the states it
  // was differenced from.
  auto add_dos = [&](int n, std::ptrdiff_t t, const Vector& v) {
    switch (n) {
      case 0:
        add_state(t, v, 1.0);
        break;
      case 1:
        add_state(t, v, 1.0);
        add_state(t - 1, v, -1.0);
        break;
      default:
        add_state(t, v, 1.0);
        add_state(t - 1, v, -2.0);
        add_state(t - 2, v, 1.0);
        break;
    }
  };

  for (std::size_t step = T; step-- > 0;) {
    const auto t = static_cast<std::ptrdiff_t>(step);
    const StepTrace& tr = traces[step];
    const Vector& dzt = gz[step];
    Vector dz_prev(params.output_dim);

    // z_t = o_t * tanh(W_zs s_t + b_z)
    const Vector d_out_pre = tanh_backward(hadamard(dzt, tr.o), tr.out_act);
    const Vector d_o_pre = sigmoid_backward(hadamard(dzt, tr.out_act), tr.o);

    add_outer(g.w_zs, d_out_pre, tr.s);
    add_scaled(g.b_z, d_out_pre, 1.0);
    add_transpose_matvec(params.w_zs, d_out_pre, gs[step]);

    for (int n = 0; n <= params.order; ++n) add_outer(g.w_od[n], d_o_pre, tr.dos_curr[n]);
    add_outer(g.w_oz, d_o_pre, tr.z_prev);
    add_outer(g.w_ox, d_o_pre, tr.x);
    add_scaled(g.b_o, d_o_pre, 1.0);
    add_transpose_matvec(params.w_oz, d_o_pre, dz_prev);
    if (full) {
      for (int n = 0; n <= params.order; ++n) {
        Vector d_dos(m);
        add_transpose_matvec(params.w_od[n], d_o_pre, d_dos);
        add_dos(n, t, d_dos);
      }
    }

    // Every consumer of s_t has now contributed to gs[step].
    const Vector& ds = gs[step];

    // s_t = f_t * s_{t-1} + i_t * s~_t
    const Vector d_i_pre = sigmoid_backward(hadamard(ds, tr.s_half), tr.i);
    const Vector d_f_pre = sigmoid_backward(hadamard(ds, tr.s_prev), tr.f);
    const Vector d_sh_pre = tanh_backward(hadamard(ds, tr.i), tr.s_half);
    add_state(t - 1, hadamard(ds, tr.f), 1.0);

    for (int n = 0; n <= params.order; ++n) {
      add_outer(g.w_id[n], d_i_pre, tr.dos_prev[n]);
      add_outer(g.w_fd[n], d_f_pre, tr.dos_prev[n]);
    }
    add_outer(g.w_iz, d_i_pre, tr.z_prev);
    add_outer(g.w_fz, d_f_pre, tr.z_prev);
    add_outer(g.w_sz, d_sh_pre, tr.z_prev);
    add_outer(g.w_ix, d_i_pre, tr.x);
    add_outer(g.w_fx, d_f_pre, tr.x);
    add_outer(g.w_sx, d_sh_pre, tr.x);
    add_scaled(g.b_i, d_i_pre, 1.0);
    add_scaled(g.b_f, d_f_pre, 1.0);
    add_scaled(g.b_s, d_sh_pre, 1.0);

    add_transpose_matvec(params.w_iz, d_i_pre, dz_prev);
    add_transpose_matvec(params.w_fz, d_f_pre, dz_prev);
    add_transpose_matvec(params.w_sz, d_sh_pre, dz_prev);
    if (full) {
      for (int n = 0; n <= params.order; ++n) {
        Vector d_dos(m);
        add_transpose_matvec(params.w_id[n], d_i_pre, d_dos);
        add_transpose_matvec(params.w_fd[n], d_f_pre, d_dos);
        add_dos(n, t - 1, d_dos);
      }
    }

    if (step > 0) add_scaled(gz[step - 1], dz_prev, 1.0);
  }
  return g;
}

GradientSet backward(std::span<const StepTrace> traces, const Labels& labels, LossMode mode,
                     const CellParams& params, Truncation truncation) {
  std::vector<Vector> logits;
  logits.reserve(traces.size());
  for (const auto& tr : traces) logits.push_back(tr.z);
  const auto dz = logit_gradients(logits, labels, mode);
  return backward_from_logit_gradients(traces, dz, params, truncation);
}

}  // namespace drnn
