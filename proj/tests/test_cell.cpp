#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "drnn/cell.hpp"
#include "drnn/params_io.hpp"
#include "oracles.hpp"

using namespace drnn;

namespace {

std::vector<Vector> random_frames(std::size_t T, std::size_t n, SeededGenerator& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<Vector> xs;
  for (std::size_t t = 0; t < T; ++t) {
    Vector x(n);
    for (double& v : x) v = dist(rng);
    xs.push_back(std::move(x));
  }
  return xs;
}

Vector random_vector(std::size_t n, SeededGenerator& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Vector v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

// k/1024 with |k| < 2^20: sums and differences of a few of these are exact.
Vector dyadic_vector(std::size_t n, SeededGenerator& rng) {
  std::uniform_int_distribution<int> dist(-(1 << 20), 1 << 20);
  Vector v(n);
  for (double& x : v) x = dist(rng) / 1024.0;
  return v;
}

std::vector<Vector> random_dos(int order, std::size_t m, SeededGenerator& rng) {
  std::vector<Vector> out;
  for (int n = 0; n <= order; ++n) out.push_back(random_vector(m, rng));
  return out;
}

CellParams order2_with_zero_higher(const CellParams& p0) {
  CellParams p2 = p0;
  p2.order = 2;
  for (auto* fam : {&p2.w_id, &p2.w_fd}) {
    fam->push_back(Matrix(p0.state_dim, p0.state_dim));
    fam->push_back(Matrix(p0.state_dim, p0.state_dim));
  }
  p2.w_od.push_back(Matrix(p0.output_dim, p0.state_dim));
  p2.w_od.push_back(Matrix(p0.output_dim, p0.state_dim));
  return p2;
}

double max_abs_diff(const Vector& a, const Vector& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
  return worst;
}

double max_abs_diff(const Vector& a, const oracle::Vec& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
  return worst;
}

}  // namespace

TEST_SUITE("params") {
  TEST_CASE("shapes follow the dimensions") {
    for (int order = 0; order <= 2; ++order) {
      const auto p = CellParams::zeros(order, 5, 4, 3);
      CHECK_NOTHROW(p.validate());
      CHECK(p.w_id.size() == static_cast<std::size_t>(order + 1));
      CHECK(p.w_fd.size() == static_cast<std::size_t>(order + 1));
      CHECK(p.w_od.size() == static_cast<std::size_t>(order + 1));
      const std::size_t n = 5, m = 4, k = 3, N = order + 1;
      const std::size_t expected = N * (2 * m * m + k * m) + 2 * m * k + k * k +
                                   2 * m * n + k * n + m * k + m * n + k * m + 3 * m + 2 * k;
      CHECK(p.parameter_count() == expected);
      CHECK(p.tensors().size() == 3 * N + 9 + 5);
    }
  }

  TEST_CASE("order outside 0..2 is rejected") {
    CHECK_THROWS_AS(CellParams::zeros(3, 5, 4, 3), std::invalid_argument);
    CHECK_THROWS_AS(CellParams::zeros(-1, 5, 4, 3), std::invalid_argument);
    CHECK_THROWS_AS(CellParams::zeros(1, 0, 4, 3), std::invalid_argument);
  }

  TEST_CASE("validate names the broken tensor") {
    auto p = CellParams::zeros(1, 5, 4, 3);
    p.w_fx = Matrix(4, 6);
    try {
      p.validate();
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      CHECK(std::string(e.what()).find("W_fx") != std::string::npos);
    }
  }

  TEST_CASE("tensor order is canonical") {
    const auto p = CellParams::zeros(1, 2, 2, 2);
    std::vector<std::string> names;
    for (const auto& t : p.tensors()) names.push_back(t.name);
    const std::vector<std::string> expected{"W_id0", "W_id1", "W_fd0", "W_fd1", "W_od0", "W_od1",
                                            "W_iz",  "W_fz",  "W_oz",  "W_ix",  "W_fx",  "W_ox",
                                            "W_sz",  "W_sx",  "W_zs",  "b_i",   "b_f",   "b_o",
                                            "b_s",   "b_z"};
    CHECK(names == expected);
  }

  TEST_CASE("binary round trip is value exact") {
    SeededGenerator rng(5);
    for (int order = 0; order <= 2; ++order) {
      const auto p = CellParams::random(order, 5, 4, 3, rng, 1.0);
      std::stringstream buf;
      write_params(buf, p);
      CHECK(read_params(buf) == p);
    }
  }

  TEST_CASE("corrupt parameter streams are rejected") {
    SeededGenerator rng(6);
    const auto p = CellParams::random(1, 3, 2, 2, rng);
    std::stringstream buf;
    write_params(buf, p);
    const std::string bytes = buf.str();

    std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(read_params(truncated), FormatError);

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    std::stringstream bm(bad_magic);
    CHECK_THROWS_AS(read_params(bm), FormatError);
  }
}

TEST_SUITE("pieces") {
  TEST_CASE("pre_state examples") {
    auto p = CellParams::zeros(0, 3, 4, 2);
    CHECK(pre_state(Vector(2), Vector(3), p) == Vector(4));

    SeededGenerator rng(21);
    p = CellParams::random(0, 3, 4, 2, rng, 1.0);
    p.b_s.fill(0.0);
    const Vector x = random_vector(3, rng);
    const Vector a = pre_state(Vector(2), x, p);
    p.w_sz = init_matrix(4, 2, 5.0, rng);
    const Vector b = pre_state(Vector(2), x, p);
    CHECK(a == b);
    for (std::size_t j = 0; j < 4; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < 3; ++c) acc += p.w_sx(j, c) * x[c];
      CHECK(std::abs(a[j] - std::tanh(acc)) < 1e-15);
    }
  }

  TEST_CASE("pre_state matches scalar oracle") {
    SeededGenerator rng(22);
    for (int trial = 0; trial < 50; ++trial) {
      const auto p = CellParams::random(1, 5, 4, 3, rng, 1.0);
      const Vector z = random_vector(3, rng), x = random_vector(5, rng);
      const Vector s = pre_state(z, x, p);
      for (std::size_t j = 0; j < 4; ++j) {
        double acc = p.b_s[j];
        for (std::size_t c = 0; c < 3; ++c) acc += p.w_sz(j, c) * z[c];
        for (std::size_t c = 0; c < 5; ++c) acc += p.w_sx(j, c) * x[c];
        CHECK(std::abs(s[j] - std::tanh(acc)) < 1e-14);
      }
    }
  }

  TEST_CASE("gates are one half under zero parameters") {
    for (int order = 0; order <= 2; ++order) {
      const auto p = CellParams::zeros(order, 3, 4, 2);
      SeededGenerator rng(23);
      const auto dos = random_dos(order, 4, rng);
      const Vector z = random_vector(2, rng), x = random_vector(3, rng);
      for (double v : gate_input(dos, z, x, p)) CHECK(v == 0.5);
      for (double v : gate_forget(dos, z, x, p)) CHECK(v == 0.5);
      for (double v : gate_output(dos, z, x, p)) CHECK(v == 0.5);
      CHECK(gate_output(dos, z, x, p).size() == 2);
    }
  }

  TEST_CASE("zeroed higher-order weights reduce to order 0") {
    SeededGenerator rng(24);
    for (int trial = 0; trial < 50; ++trial) {
      const auto p0 = CellParams::random(0, 5, 4, 3, rng, 1.0);
      const auto p2 = order2_with_zero_higher(p0);
      const auto dos2 = random_dos(2, 4, rng);
      const std::vector<Vector> dos0{dos2[0]};
      const Vector z = random_vector(3, rng), x = random_vector(5, rng);
      CHECK(max_abs_diff(gate_input(dos2, z, x, p2), gate_input(dos0, z, x, p0)) <= 1e-15);
      CHECK(max_abs_diff(gate_forget(dos2, z, x, p2), gate_forget(dos0, z, x, p0)) <= 1e-15);
      CHECK(max_abs_diff(gate_output(dos2, z, x, p2), gate_output(dos0, z, x, p0)) <= 1e-15);

      CellParams p1 = p0;
      p1.order = 1;
      p1.w_id.push_back(Matrix(4, 4));
      p1.w_fd.push_back(Matrix(4, 4));
      p1.w_od.push_back(Matrix(3, 4));
      const std::vector<Vector> dos1{dos2[0], dos2[1]};
      CHECK(max_abs_diff(gate_output(dos1, z, x, p1), gate_output(dos0, z, x, p0)) <= 1e-15);
    }
  }

  TEST_CASE("gates match scalar oracle") {
    SeededGenerator rng(25);
    for (int order = 0; order <= 2; ++order) {
      for (int trial = 0; trial < 30; ++trial) {
        const auto p = CellParams::random(order, 5, 4, 3, rng, 1.0);
        const auto dos = random_dos(order, 4, rng);
        const Vector z = random_vector(3, rng), x = random_vector(5, rng);
        CHECK(max_abs_diff(gate_input(dos, z, x, p),
                           oracle::gate(p.w_id, dos, p.w_iz, z, p.w_ix, x, p.b_i)) < 1e-14);
        CHECK(max_abs_diff(gate_forget(dos, z, x, p),
                           oracle::gate(p.w_fd, dos, p.w_fz, z, p.w_fx, x, p.b_f)) < 1e-14);
        CHECK(max_abs_diff(gate_output(dos, z, x, p),
                           oracle::gate(p.w_od, dos, p.w_oz, z, p.w_ox, x, p.b_o)) < 1e-14);
      }
    }
  }

  TEST_CASE("gates reject the wrong number of DoS vectors") {
    const auto p = CellParams::zeros(1, 3, 4, 2);
    const std::vector<Vector> one{Vector(4)};
    CHECK_THROWS_AS(gate_input(one, Vector(2), Vector(3), p), DimensionError);
    const std::vector<Vector> bad{Vector(4), Vector(5)};
    CHECK_THROWS_AS(gate_output(bad, Vector(2), Vector(3), p), DimensionError);
  }

  TEST_CASE("update_state examples") {
    const Vector sp{0.3, -1.2}, sh{0.7, 0.1};
    CHECK(update_state(Vector{1, 1}, Vector{0, 0}, sp, sh) == sp);
    CHECK(update_state(Vector{0, 0}, Vector{1, 1}, sp, sh) == sh);
    CHECK(update_state(Vector{0.5, 0.5}, Vector{0.5, 0.5}, Vector{2, -2}, Vector{1, 1}) ==
          Vector{1.5, -0.5});
  }

  TEST_CASE("velocity examples") {
    SeededGenerator rng(26);
    const Vector s = random_vector(4, rng);
    CHECK(dos_velocity(s, s) == Vector(4));
    CHECK(dos_velocity(Vector{3, 1}, Vector{1, 2}) == Vector{2, -1});
    CHECK(dos_velocity(s, Vector(4)) == s);
  }

  TEST_CASE("acceleration examples") {
    CHECK(dos_acceleration(Vector{4}, Vector{1}, Vector{0}) == Vector{2});
    SeededGenerator rng(27);
    const Vector base = dyadic_vector(5, rng), c = dyadic_vector(5, rng);
    CHECK(dos_acceleration(base + 2.0 * c, base + c, base) == Vector(5));
  }

  TEST_CASE("acceleration identities are exact on dyadic states") {
    SeededGenerator rng(28);
    for (int trial = 0; trial < 1000; ++trial) {
      const Vector s = dyadic_vector(6, rng), s1 = dyadic_vector(6, rng),
                   s2 = dyadic_vector(6, rng);
      const Vector a = dos_acceleration(s, s1, s2);
      const Vector diff = dos_velocity(s, s1) - dos_velocity(s1, s2);
      for (std::size_t j = 0; j < 6; ++j) {
        CHECK(a[j] == s[j] - 2.0 * s1[j] + s2[j]);
        CHECK(a[j] == diff[j]);
      }
    }
  }

  TEST_CASE("acceleration equals velocity difference on arbitrary doubles") {
    SeededGenerator rng(29);
    for (int trial = 0; trial < 1000; ++trial) {
      const Vector s = random_vector(6, rng), s1 = random_vector(6, rng),
                   s2 = random_vector(6, rng);
      CHECK(dos_acceleration(s, s1, s2) == dos_velocity(s, s1) - dos_velocity(s1, s2));
    }
  }

  TEST_CASE("cell_output examples") {
    SeededGenerator rng(30);
    auto p = CellParams::random(0, 3, 4, 2, rng, 1.0);
    CHECK(cell_output(Vector(2), random_vector(4, rng), p) == Vector(2));
    p.b_z.fill(0.0);
    CHECK(cell_output(random_vector(2, rng), Vector(4), p) == Vector(2));
  }

  TEST_CASE("cell_output matches scalar oracle") {
    SeededGenerator rng(31);
    for (int trial = 0; trial < 50; ++trial) {
      const auto p = CellParams::random(0, 3, 4, 2, rng, 1.0);
      Vector o(2);
      for (double& v : o) v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      const Vector s = random_vector(4, rng);
      const Vector z = cell_output(o, s, p);
      for (std::size_t r = 0; r < 2; ++r) {
        double acc = p.b_z[r];
        for (std::size_t c = 0; c < 4; ++c) acc += p.w_zs(r, c) * s[c];
        CHECK(std::abs(z[r] - o[r] * std::tanh(acc)) < 1e-14);
      }
    }
  }
}

TEST_SUITE("step") {
  TEST_CASE("zero parameters are a fixed point") {
    for (int order = 0; order <= 2; ++order) {
      const auto p = CellParams::zeros(order, 3, 4, 2);
      SeededGenerator rng(40);
      const auto xs = random_frames(6, 3, rng);
      const auto run = forward_sequence(xs, p);
      for (const auto& tr : run.traces) {
        CHECK(tr.s == Vector(4));
        CHECK(tr.z == Vector(2));
      }
    }
  }

  TEST_CASE("order-0 step equals an independent LSTM step") {
    SeededGenerator rng(41);
    for (int trial = 0; trial < 50; ++trial) {
      const auto p = CellParams::random(0, 5, 4, 3, rng, 1.0);
      const auto xs = random_frames(1, 5, rng);
      const auto r = step(CellState::initial(p), xs[0], p);
      const auto ref = oracle::lstm_forward(oracle::lstm_from(p), xs);
      CHECK(max_abs_diff(r.trace.z, ref[0]) <= 1e-15);
    }
  }

  TEST_CASE("a state held constant has zero DoS") {
    // f = 0 exactly, W_* = 0: s_t = sigma(b_i) * tanh(b_s) every step.
    auto p = CellParams::zeros(2, 3, 4, 2);
    p.b_f.fill(-800.0);
    p.b_i.fill(0.4);
    p.b_s.fill(0.9);
    const double c = sigmoid(0.4) * std::tanh(0.9);
    CellState state = CellState::initial(p);
    state.s_curr = state.s_prev = state.s_prev2 = Vector(4, c);
    SeededGenerator rng(42);
    const auto xs = random_frames(2, 3, rng);
    auto first = step(state, xs[0], p);
    auto second = step(first.state, xs[1], p);
    CHECK(second.trace.s == Vector(4, c));
    CHECK(second.trace.v == Vector(4));
    CHECK(second.trace.a == Vector(4));
    REQUIRE(second.trace.dos_curr.size() == 3);
    CHECK(second.trace.dos_curr[0] == Vector(4, c));
    CHECK(second.trace.dos_curr[1] == Vector(4));
    CHECK(second.trace.dos_curr[2] == Vector(4));
  }

  TEST_CASE("a constant run from zero has zero velocity after the first frame") {
    auto p = CellParams::zeros(2, 3, 4, 2);
    p.b_f.fill(-800.0);
    p.b_i.fill(0.4);
    p.b_s.fill(0.9);
    SeededGenerator rng(43);
    const auto xs = random_frames(5, 3, rng);
    const auto run = forward_sequence(xs, p);
    const Vector s1 = run.traces[0].s;
    CHECK(norm2(s1) > 0.0);
    for (std::size_t t = 1; t < xs.size(); ++t) CHECK(run.traces[t].v == Vector(4));
    // Zero padding before the first frame makes a_2 = -s_1.
    CHECK(run.traces[1].a == -1.0 * s1);
    for (std::size_t t = 2; t < xs.size(); ++t) CHECK(run.traces[t].a == Vector(4));
  }

  TEST_CASE("step validates its operands") {
    const auto p = CellParams::zeros(1, 3, 4, 2);
    CHECK_THROWS_AS(step(CellState::initial(p), Vector(4), p), DimensionError);
  }
}

TEST_SUITE("forward") {
  TEST_CASE("single frame equals one step") {
    SeededGenerator rng(50);
    const auto p = CellParams::random(2, 5, 4, 3, rng, 0.5);
    const auto xs = random_frames(1, 5, rng);
    const auto run = forward_sequence(xs, p);
    const auto r = step(CellState::initial(p), xs[0], p);
    CHECK(run.outputs.size() == 1);
    CHECK(run.outputs[0] == r.trace.z);
  }

  TEST_CASE("forward is deterministic and equals manual iteration") {
    SeededGenerator rng(51);
    const auto p = CellParams::random(2, 5, 4, 3, rng, 0.5);
    const auto xs = random_frames(9, 5, rng);
    const auto a = forward_sequence(xs, p);
    const auto b = forward_sequence(xs, p);
    CHECK(a.outputs == b.outputs);

    CellState state = CellState::initial(p);
    for (std::size_t t = 0; t < xs.size(); ++t) {
      auto r = step(state, xs[t], p);
      CHECK(r.trace.z == a.traces[t].z);
      CHECK(r.trace.s == a.traces[t].s);
      CHECK(r.trace.i == a.traces[t].i);
      CHECK(r.trace.dos_prev == a.traces[t].dos_prev);
      CHECK(r.trace.dos_curr == a.traces[t].dos_curr);
      state = r.state;
    }
  }

  TEST_CASE("order reduction over sequences") {
    SeededGenerator rng(52);
    for (int trial = 0; trial < 100; ++trial) {
      const auto p0 = CellParams::random(0, 5, 4, 3, rng, 1.0);
      const auto p2 = order2_with_zero_higher(p0);
      const auto xs = random_frames(8, 5, rng);
      const auto a = forward_sequence(xs, p0);
      const auto b = forward_sequence(xs, p2);
      for (std::size_t t = 0; t < xs.size(); ++t)
        CHECK(max_abs_diff(a.outputs[t], b.outputs[t]) <= 1e-15);
    }
  }

  TEST_CASE("order 0 equals an independent LSTM over sequences") {
    SeededGenerator rng(53);
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = CellParams::random(0, 5, 4, 3, rng, 1.0);
      const auto xs = random_frames(8, 5, rng);
      const auto out = forward_sequence(xs, p).outputs;
      const auto ref = oracle::lstm_forward(oracle::lstm_from(p), xs);
      for (std::size_t t = 0; t < xs.size(); ++t) CHECK(max_abs_diff(out[t], ref[t]) <= 1e-15);
    }
  }

  TEST_CASE("trace identities, ranges and bounds") {
    SeededGenerator rng(54);
    for (int order = 0; order <= 2; ++order) {
      for (int trial = 0; trial < 20; ++trial) {
        const auto p = CellParams::random(order, 5, 4, 3, rng, 2.0);
        const std::size_t T = 12;
        const auto xs = random_frames(T, 5, rng);
        const auto run = forward_sequence(xs, p);
        CHECK(run.traces[0].v == run.traces[0].s);
        CHECK(run.traces[0].a == run.traces[0].s);
        for (std::size_t t = 0; t < T; ++t) {
          const auto& tr = run.traces[t];
          const Vector s_prev = t == 0 ? Vector(4) : run.traces[t - 1].s;
          const Vector v_prev = t == 0 ? Vector(4) : run.traces[t - 1].v;
          CHECK(tr.v == tr.s - s_prev);
          CHECK(tr.a == tr.v - v_prev);
          CHECK(tr.s_prev == s_prev);
          for (const Vector* g : {&tr.i, &tr.f, &tr.o})
            for (double v : *g) {
              CHECK(v > 0.0);
              CHECK(v < 1.0);
            }
          for (const Vector* g : {&tr.s_half, &tr.out_act})
            for (double v : *g) {
              CHECK(v > -1.0);
              CHECK(v < 1.0);
            }
          for (std::size_t j = 0; j < 4; ++j) {
            CHECK(std::abs(tr.s[j]) <= tr.f[j] * std::abs(s_prev[j]) + tr.i[j]);
            CHECK(std::abs(tr.s[j]) <= static_cast<double>(t + 1));
          }
        }
      }
    }
  }

  TEST_CASE("frozen DoS replay reproduces the original run") {
    SeededGenerator rng(55);
    const auto p = CellParams::random(2, 5, 4, 3, rng, 0.5);
    const auto xs = random_frames(7, 5, rng);
    const auto run = forward_sequence(xs, p);
    const auto replay = forward_sequence_frozen_dos(xs, p, run.traces);
    CHECK(replay.outputs == run.outputs);
  }

  TEST_CASE("forward rejects bad sequences") {
    const auto p = CellParams::zeros(1, 3, 4, 2);
    CHECK_THROWS_AS(forward_sequence(std::vector<Vector>{}, p), std::invalid_argument);
    const std::vector<Vector> xs{Vector(3), Vector(3), Vector(2)};
    try {
      forward_sequence(xs, p);
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      CHECK(std::string(e.what()).find("frame 2") != std::string::npos);
    }
  }
}
