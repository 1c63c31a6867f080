#include "drnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace drnn {

GradientSet finite_diff_grad(const ParamLoss& loss, const CellParams& params, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("finite_diff_grad: epsilon must be positive");
  GradientSet grad = GradientSet::zeros_like(params);
  CellParams probe = params;
  auto probe_tensors = probe.tensors();
  auto grad_tensors = grad.tensors();
  for (std::size_t ti = 0; ti < probe_tensors.size(); ++ti) {
    auto values = probe_tensors[ti].values;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + epsilon;
      const double up = loss(probe);
      values[j] = saved - epsilon;
      const double down = loss(probe);
      values[j] = saved;
      grad_tensors[ti].values[j] = (up - down) / (2.0 * epsilon);
    }
  }
  return grad;
}

double relative_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

double max_relative_error(const GradientSet& a, const GradientSet& b) {
  if (!a.congruent_with(b)) throw DimensionError("gradient sets are not congruent");
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  double worst = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i)
    for (std::size_t j = 0; j < ta[i].values.size(); ++j)
      worst = std::max(worst, relative_error(ta[i].values[j], tb[i].values[j]));
  return worst;
}

namespace {

// Scalar-loop re-implementation of the recurrence and loss in extended
// precision. Shares no code with forward_sequence; with `frozen` set, the
// gates read their DoS inputs from the recorded traces.
long double reference_loss(const std::vector<Vector>& xs, const Labels& labels, LossMode mode,
                           const CellParams& p, const std::vector<StepTrace>* frozen) {
  using Real = long double;
  const std::size_t n = p.input_dim, m = p.state_dim, k = p.output_dim;
  const int order = p.order;
  const std::size_t T = xs.size();
  auto sig = [](Real a) { return Real(1) / (Real(1) + std::exp(-a)); };

  std::vector<Real> s1(m, 0), s2(m, 0), s3(m, 0), z(k, 0);
  std::vector<std::vector<Real>> dos(order + 1, std::vector<Real>(m));
  std::vector<Real> i(m), f(m), sh(m), s(m), o(k), znew(k);
  Real total = 0;

  auto gate = [&](const std::vector<Matrix>& wd, const Matrix& wz, const Matrix& wx,
                  const Vector& b, std::size_t row, const Vector& x) {
    Real acc = b[row];
    for (int d = 0; d <= order; ++d)
      for (std::size_t c = 0; c < m; ++c) acc += Real(wd[d](row, c)) * dos[d][c];
    for (std::size_t c = 0; c < k; ++c) acc += Real(wz(row, c)) * z[c];
    for (std::size_t c = 0; c < n; ++c) acc += Real(wx(row, c)) * Real(x[c]);
    return acc;
  };

  for (std::size_t t = 0; t < T; ++t) {
    const Vector& x = xs[t];
    for (std::size_t j = 0; j < m; ++j) {
      for (int d = 0; d <= order; ++d) {
        if (frozen != nullptr) {
          dos[d][j] = (*frozen)[t].dos_prev[d][j];
        } else {
          dos[d][j] = d == 0 ? s1[j] : d == 1 ? s1[j] - s2[j] : (s1[j] - s2[j]) - (s2[j] - s3[j]);
        }
      }
    }
    for (std::size_t j = 0; j < m; ++j) {
      i[j] = sig(gate(p.w_id, p.w_iz, p.w_ix, p.b_i, j, x));
      f[j] = sig(gate(p.w_fd, p.w_fz, p.w_fx, p.b_f, j, x));
      Real pre = p.b_s[j];
      for (std::size_t c = 0; c < k; ++c) pre += Real(p.w_sz(j, c)) * z[c];
      for (std::size_t c = 0; c < n; ++c) pre += Real(p.w_sx(j, c)) * Real(x[c]);
      sh[j] = std::tanh(pre);
      s[j] = f[j] * s1[j] + i[j] * sh[j];
    }
    for (std::size_t j = 0; j < m; ++j) {
      for (int d = 0; d <= order; ++d) {
        if (frozen != nullptr) {
          dos[d][j] = (*frozen)[t].dos_curr[d][j];
        } else {
          dos[d][j] = d == 0 ? s[j] : d == 1 ? s[j] - s1[j] : (s[j] - s1[j]) - (s1[j] - s2[j]);
        }
      }
    }
    for (std::size_t r = 0; r < k; ++r) {
      o[r] = sig(gate(p.w_od, p.w_oz, p.w_ox, p.b_o, r, x));
      Real pre = p.b_z[r];
      for (std::size_t c = 0; c < m; ++c) pre += Real(p.w_zs(r, c)) * s[c];
      znew[r] = o[r] * std::tanh(pre);
    }

    const bool scored = mode == LossMode::PerFrameCumulative || t + 1 == T;
    if (scored) {
      const ClassIndex c = mode == LossMode::PerFrameCumulative
                               ? std::get<std::vector<ClassIndex>>(labels).at(t)
                               : final_label(labels);
      Real top = znew[0];
      for (Real v : znew) top = std::max(top, v);
      Real sum = 0;
      for (Real v : znew) sum += std::exp(v - top);
      total += -(znew.at(c) - top - std::log(sum));
    }
    s3 = s2;
    s2 = s1;
    s1 = s;
    z = znew;
  }
  return total;
}

}  // namespace

ParamLoss oracle_loss(std::vector<Vector> xs, Labels labels, LossMode mode,
                      Truncation truncation, const CellParams& reference) {
  if (mode == LossMode::PerFrameCumulative &&
      std::get_if<std::vector<ClassIndex>>(&labels) == nullptr)
    throw LabelError("cumulative loss needs one label per frame");
  std::optional<std::vector<StepTrace>> recorded;
  if (truncation == Truncation::Truncated) recorded = forward_sequence(xs, reference).traces;
  const std::vector<StepTrace>* frozen = recorded ? &*recorded : nullptr;
  // Offsetting by the reference loss keeps the extended-precision difference
  // intact when the result is rounded to double.
  const long double base = reference_loss(xs, labels, mode, reference, frozen);
  return [xs = std::move(xs), labels = std::move(labels), mode, recorded = std::move(recorded),
          base](const CellParams& p) {
    const std::vector<StepTrace>* frozen = recorded ? &*recorded : nullptr;
    return static_cast<double>(reference_loss(xs, labels, mode, p, frozen) - base);
  };
}

std::vector<GradcheckCase> run_gradcheck(const GradcheckOptions& options) {
  SeededGenerator rng(options.seed);
  std::normal_distribution<double> frame_dist(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> class_dist(0, options.output_dim - 1);

  std::vector<Vector> xs;
  for (std::size_t t = 0; t < options.frames; ++t) {
    Vector x(options.input_dim);
    for (double& v : x) v = frame_dist(rng);
    xs.push_back(std::move(x));
  }
  std::vector<ClassIndex> frame_labels;
  for (std::size_t t = 0; t < options.frames; ++t) frame_labels.push_back(class_dist(rng));
  const ClassIndex sequence_label = class_dist(rng);

  std::vector<GradcheckCase> cases;
  for (int order = 0; order <= kMaxDosOrder; ++order) {
    const CellParams params =
        CellParams::random(order, options.input_dim, options.state_dim, options.output_dim, rng,
                           options.init_scale);
    const auto traces = forward_sequence(xs, params).traces;
    for (Truncation truncation : {Truncation::Full, Truncation::Truncated}) {
      for (LossMode mode : {LossMode::SequenceFinal, LossMode::PerFrameCumulative}) {
        const Labels labels = mode == LossMode::SequenceFinal ? Labels{sequence_label}
                                                              : Labels{frame_labels};
        GradientSet analytic = backward(traces, labels, mode, params, truncation);
        if (options.corrupt_gradient != 0.0) analytic.w_ix(0, 0) += options.corrupt_gradient;
        const GradientSet numeric = finite_diff_grad(
            oracle_loss(xs, labels, mode, truncation, params), params, options.epsilon);
        GradcheckCase c;
        c.order = order;
        c.truncation = truncation;
        c.mode = mode;
        c.max_rel_error = max_relative_error(analytic, numeric);
        c.passed = c.max_rel_error < options.tolerance;
        cases.push_back(c);
      }
    }
  }
  return cases;
}

std::string to_string(Truncation t) {
  return t == Truncation::Full ? "full" : "truncated";
}

std::string to_string(LossMode m) {
  return m == LossMode::SequenceFinal ? "final" : "cumulative";
}

}  // namespace drnn
