#include "drnn/cell.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace drnn {

namespace {

void expect_shape(const std::string& name, const Matrix& m, std::size_t rows, std::size_t cols) {
  if (m.rows() != rows) throw_dimension_error(name + " rows", rows, m.rows());
  if (m.cols() != cols) throw_dimension_error(name + " cols", cols, m.cols());
}

void expect_length(const std::string& name, const Vector& v, std::size_t length) {
  if (v.size() != length) throw_dimension_error(name, length, v.size());
}

void expect_dos_count(const char* which, std::span<const Vector> dos, const CellParams& p) {
  const auto expected = static_cast<std::size_t>(p.order + 1);
  if (dos.size() != expected) {
    std::ostringstream msg;
    msg << which << ": order " << p.order << " needs " << expected << " DoS vectors, got "
        << dos.size();
    throw DimensionError(msg.str());
  }
  for (const auto& d : dos) expect_length(std::string(which) + " DoS vector", d, p.state_dim);
}

// sum_n W[n] dos[n] + W_z z_prev + W_x x + b
Vector gate_preactivation(const std::vector<Matrix>& w_dos, std::span<const Vector> dos,
                          const Matrix& w_z, const Matrix& w_x, const Vector& b,
                          const Vector& z_prev, const Vector& x) {
  Vector pre = b;
  for (std::size_t n = 0; n < dos.size(); ++n) add_matvec(w_dos[n], dos[n], pre);
  add_matvec(w_z, z_prev, pre);
  add_matvec(w_x, x, pre);
  return pre;
}

Vector pre_state_preactivation(const Vector& z_prev, const Vector& x, const CellParams& p) {
  Vector pre = p.b_s;
  add_matvec(p.w_sz, z_prev, pre);
  add_matvec(p.w_sx, x, pre);
  return pre;
}

template <typename Params, typename View>
std::vector<View> collect_tensors(Params& p) {
  std::vector<View> out;
  auto add_matrix = [&](std::string name, auto& m) {
    out.push_back(View{std::move(name), m.rows(), m.cols(), m.values()});
  };
  auto add_vector = [&](std::string name, auto& v) {
    out.push_back(View{std::move(name), v.size(), 1, v.values()});
  };
  for (std::size_t n = 0; n < p.w_id.size(); ++n) add_matrix("W_id" + std::to_string(n), p.w_id[n]);
  for (std::size_t n = 0; n < p.w_fd.size(); ++n) add_matrix("W_fd" + std::to_string(n), p.w_fd[n]);
  for (std::size_t n = 0; n < p.w_od.size(); ++n) add_matrix("W_od" + std::to_string(n), p.w_od[n]);
  add_matrix("W_iz", p.w_iz);
  add_matrix("W_fz", p.w_fz);
  add_matrix("W_oz", p.w_oz);
  add_matrix("W_ix", p.w_ix);
  add_matrix("W_fx", p.w_fx);
  add_matrix("W_ox", p.w_ox);
  add_matrix("W_sz", p.w_sz);
  add_matrix("W_sx", p.w_sx);
  add_matrix("W_zs", p.w_zs);
  add_vector("b_i", p.b_i);
  add_vector("b_f", p.b_f);
  add_vector("b_o", p.b_o);
  add_vector("b_s", p.b_s);
  add_vector("b_z", p.b_z);
  return out;
}

}  // namespace

CellParams CellParams::zeros(int order, std::size_t input_dim, std::size_t state_dim,
                             std::size_t output_dim) {
  if (order < 0 || order > kMaxDosOrder)
    throw std::invalid_argument("DoS order must be 0, 1 or 2, got " + std::to_string(order));
  if (input_dim == 0 || state_dim == 0 || output_dim == 0)
    throw std::invalid_argument("cell dimensions must be positive");
  const std::size_t n = input_dim, m = state_dim, k = output_dim;
  CellParams p;
  p.order = order;
  p.input_dim = n;
  p.state_dim = m;
  p.output_dim = k;
  p.w_id.assign(order + 1, Matrix(m, m));
  p.w_fd.assign(order + 1, Matrix(m, m));
  p.w_od.assign(order + 1, Matrix(k, m));
  p.w_iz = p.w_fz = p.w_sz = Matrix(m, k);
  p.w_oz = Matrix(k, k);
  p.w_ix = p.w_fx = p.w_sx = Matrix(m, n);
  p.w_ox = Matrix(k, n);
  p.w_zs = Matrix(k, m);
  p.b_i = p.b_f = p.b_s = Vector(m);
  p.b_o = p.b_z = Vector(k);
  return p;
}

CellParams CellParams::random(int order, std::size_t input_dim, std::size_t state_dim,
                              std::size_t output_dim, SeededGenerator& rng, double scale) {
  CellParams p = zeros(order, input_dim, state_dim, output_dim);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (auto& t : p.tensors())
    for (double& v : t.values) v = dist(rng);
  return p;
}

std::vector<TensorView> CellParams::tensors() {
  return collect_tensors<CellParams, TensorView>(*this);
}

std::vector<ConstTensorView> CellParams::tensors() const {
  return collect_tensors<const CellParams, ConstTensorView>(*this);
}

std::size_t CellParams::parameter_count() const {
  std::size_t total = 0;
  for (const auto& t : tensors()) total += t.values.size();
  return total;
}

void CellParams::validate() const {
  if (order < 0 || order > kMaxDosOrder)
    throw std::invalid_argument("DoS order must be 0, 1 or 2, got " + std::to_string(order));
  const std::size_t n = input_dim, m = state_dim, k = output_dim;
  const auto families = static_cast<std::size_t>(order + 1);
  if (w_id.size() != families) throw_dimension_error("W_id family size", families, w_id.size());
  if (w_fd.size() != families) throw_dimension_error("W_fd family size", families, w_fd.size());
  if (w_od.size() != families) throw_dimension_error("W_od family size", families, w_od.size());
  for (std::size_t i = 0; i < families; ++i) {
    expect_shape("W_id" + std::to_string(i), w_id[i], m, m);
    expect_shape("W_fd" + std::to_string(i), w_fd[i], m, m);
    expect_shape("W_od" + std::to_string(i), w_od[i], k, m);
  }
  expect_shape("W_iz", w_iz, m, k);
  expect_shape("W_fz", w_fz, m, k);
  expect_shape("W_oz", w_oz, k, k);
  expect_shape("W_ix", w_ix, m, n);
  expect_shape("W_fx", w_fx, m, n);
  expect_shape("W_ox", w_ox, k, n);
  expect_shape("W_sz", w_sz, m, k);
  expect_shape("W_sx", w_sx, m, n);
  expect_shape("W_zs", w_zs, k, m);
  expect_length("b_i", b_i, m);
  expect_length("b_f", b_f, m);
  expect_length("b_o", b_o, k);
  expect_length("b_s", b_s, m);
  expect_length("b_z", b_z, k);
}

GradientSet GradientSet::zeros_like(const CellParams& params) {
  GradientSet g;
  static_cast<CellParams&>(g) =
      CellParams::zeros(params.order, params.input_dim, params.state_dim, params.output_dim);
  return g;
}

bool GradientSet::congruent_with(const CellParams& params) const {
  const auto mine = tensors();
  const auto theirs = params.tensors();
  if (mine.size() != theirs.size()) return false;
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].name != theirs[i].name || mine[i].rows != theirs[i].rows ||
        mine[i].cols != theirs[i].cols || mine[i].values.size() != theirs[i].values.size())
      return false;
  }
  return true;
}

double GradientSet::global_norm() const {
  double sq = 0.0;
  for (const auto& t : tensors())
    for (double v : t.values) sq += v * v;
  return std::sqrt(sq);
}

CellState CellState::initial(const CellParams& params) {
  CellState s;
  s.s_curr = s.s_prev = s.s_prev2 = Vector(params.state_dim);
  s.z_prev = Vector(params.output_dim);
  s.t = 0;
  return s;
}

Vector pre_state(const Vector& z_prev, const Vector& x, const CellParams& params) {
  return tanh_act(pre_state_preactivation(z_prev, x, params));
}

Vector gate_input(std::span<const Vector> dos_prev, const Vector& z_prev, const Vector& x,
                  const CellParams& params) {
  expect_dos_count("input gate", dos_prev, params);
  return sigmoid(gate_preactivation(params.w_id, dos_prev, params.w_iz, params.w_ix,
                                    params.b_i, z_prev, x));
}

Vector gate_forget(std::span<const Vector> dos_prev, const Vector& z_prev, const Vector& x,
                   const CellParams& params) {
  expect_dos_count("forget gate", dos_prev, params);
  return sigmoid(gate_preactivation(params.w_fd, dos_prev, params.w_fz, params.w_fx,
                                    params.b_f, z_prev, x));
}

Vector gate_output(std::span<const Vector> dos_curr, const Vector& z_prev, const Vector& x,
                   const CellParams& params) {
  expect_dos_count("output gate", dos_curr, params);
  return sigmoid(gate_preactivation(params.w_od, dos_curr, params.w_oz, params.w_ox,
                                    params.b_o, z_prev, x));
}

Vector update_state(const Vector& f, const Vector& i, const Vector& s_prev,
                    const Vector& s_half) {
  expect_length("input gate", i, f.size());
  expect_length("previous state", s_prev, f.size());
  expect_length("pre-state", s_half, f.size());
  Vector s(f.size());
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = f[j] * s_prev[j] + i[j] * s_half[j];
  return s;
}

Vector cell_output(const Vector& o, const Vector& s, const CellParams& params) {
  expect_length("output gate", o, params.output_dim);
  return hadamard(o, tanh_act(affine(params.w_zs, s, params.b_z)));
}

Vector dos_velocity(const Vector& s, const Vector& s_prev) { return s - s_prev; }

Vector dos_acceleration(const Vector& s, const Vector& s_prev, const Vector& s_prev2) {
  expect_length("s_{t-1}", s_prev, s.size());
  expect_length("s_{t-2}", s_prev2, s.size());
  Vector a(s.size());
  // (s - s_prev) - (s_prev - s_prev2): the same rounding as differencing two velocities.
  for (std::size_t j = 0; j < s.size(); ++j) a[j] = (s[j] - s_prev[j]) - (s_prev[j] - s_prev2[j]);
  return a;
}

std::vector<Vector> dos_stack(int order, const Vector& s, const Vector& s_prev,
                              const Vector& s_prev2) {
  std::vector<Vector> out;
  out.reserve(order + 1);
  out.push_back(s);
  if (order >= 1) out.push_back(dos_velocity(s, s_prev));
  if (order >= 2) out.push_back(dos_acceleration(s, s_prev, s_prev2));
  return out;
}

StepResult step(const CellState& state, const Vector& x, const CellParams& params,
                const FrozenDos* frozen) {
  expect_length("input frame", x, params.input_dim);
  expect_length("previous output", state.z_prev, params.output_dim);
  expect_length("state", state.s_curr, params.state_dim);

  StepTrace tr;
  tr.x = x;
  tr.z_prev = state.z_prev;
  tr.s_prev = state.s_curr;

  // DoS at t-1 from the history window: s_{t-1}, s_{t-2}, s_{t-3}.
  tr.v_prev = dos_velocity(state.s_curr, state.s_prev);
  tr.a_prev = dos_acceleration(state.s_curr, state.s_prev, state.s_prev2);
  if (frozen != nullptr) {
    tr.dos_prev.assign(frozen->dos_prev.begin(), frozen->dos_prev.end());
  } else {
    tr.dos_prev = dos_stack(params.order, state.s_curr, state.s_prev, state.s_prev2);
  }
  expect_dos_count("input/forget gate", tr.dos_prev, params);

  // (1) input and forget gates.
  tr.i_pre = gate_preactivation(params.w_id, tr.dos_prev, params.w_iz, params.w_ix, params.b_i,
                                tr.z_prev, x);
  tr.f_pre = gate_preactivation(params.w_fd, tr.dos_prev, params.w_fz, params.w_fx, params.b_f,
                                tr.z_prev, x);
  tr.i = sigmoid(tr.i_pre);
  tr.f = sigmoid(tr.f_pre);

  // (2) state update.
  tr.s_half_pre = pre_state_preactivation(tr.z_prev, x, params);
  tr.s_half = tanh_act(tr.s_half_pre);
  tr.s = update_state(tr.f, tr.i, state.s_curr, tr.s_half);

  // (3) DoS at t.
  tr.v = dos_velocity(tr.s, state.s_curr);
  tr.a = dos_acceleration(tr.s, state.s_curr, state.s_prev);

  // (4) output gate.
  if (frozen != nullptr) {
    tr.dos_curr.assign(frozen->dos_curr.begin(), frozen->dos_curr.end());
  } else {
    tr.dos_curr = dos_stack(params.order, tr.s, state.s_curr, state.s_prev);
  }
  expect_dos_count("output gate", tr.dos_curr, params);
  tr.o_pre = gate_preactivation(params.w_od, tr.dos_curr, params.w_oz, params.w_ox, params.b_o,
                                tr.z_prev, x);
  tr.o = sigmoid(tr.o_pre);

  // (5) cell output.
  tr.out_pre = affine(params.w_zs, tr.s, params.b_z);
  tr.out_act = tanh_act(tr.out_pre);
  tr.z = hadamard(tr.o, tr.out_act);

  CellState next;
  next.s_prev2 = state.s_prev;
  next.s_prev = state.s_curr;
  next.s_curr = tr.s;
  next.z_prev = tr.z;
  next.t = state.t + 1;
  return StepResult{std::move(next), std::move(tr)};
}

namespace {

void check_frames(std::span<const Vector> xs, const CellParams& params) {
  if (xs.empty()) throw std::invalid_argument("forward_sequence: empty sequence");
  for (std::size_t t = 0; t < xs.size(); ++t) {
    if (xs[t].size() != params.input_dim) {
      std::ostringstream msg;
      msg << "forward_sequence: frame " << t << " has dimension " << xs[t].size()
          << ", expected " << params.input_dim;
      throw DimensionError(msg.str());
    }
  }
}

}  // namespace

ForwardResult forward_sequence(std::span<const Vector> xs, const CellParams& params) {
  check_frames(xs, params);
  ForwardResult result;
  result.outputs.reserve(xs.size());
  result.traces.reserve(xs.size());
  CellState state = CellState::initial(params);
  for (const auto& x : xs) {
    auto [next, trace] = step(state, x, params);
    result.outputs.push_back(trace.z);
    result.traces.push_back(std::move(trace));
    state = std::move(next);
  }
  return result;
}

ForwardResult forward_sequence_frozen_dos(std::span<const Vector> xs,
                                          const CellParams& params,
                                          std::span<const StepTrace> recorded) {
  check_frames(xs, params);
  if (recorded.size() != xs.size())
    throw_dimension_error("recorded trace count", xs.size(), recorded.size());
  ForwardResult result;
  CellState state = CellState::initial(params);
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const FrozenDos frozen{recorded[t].dos_prev, recorded[t].dos_curr};
    auto [next, trace] = step(state, xs[t], params, &frozen);
    result.outputs.push_back(trace.z);
    result.traces.push_back(std::move(trace));
    state = std::move(next);
  }
  return result;
}

}  // namespace drnn
