#include <cmath>
#include <random>

#include "doctest.h"
#include "mtmm/grad_check.hpp"
#include "mtmm/gru.hpp"
#include "mtmm/rng.hpp"

using namespace mtmm;

namespace {

GruParams zero_params(int d_in, int d) {
  GruParams p;
  p.W_z = Tensor(d_in, d);
  p.W_r = Tensor(d_in, d);
  p.W_h = Tensor(d_in, d);
  p.U_z = Tensor(d, d);
  p.U_r = Tensor(d, d);
  p.U_h = Tensor(d, d);
  p.b_z = Tensor(1, d);
  p.b_r = Tensor(1, d);
  p.b_h = Tensor(1, d);
  return p;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("gru_cell zero case stays at zero") {
  GruParams p = zero_params(3, 2);
  Graph g;
  const GruIds ids = gru_leaves(g, p);
  const Graph::Id x = g.constant(Tensor::row({0.4, -0.7, 1.2}));
  const Graph::Id h0 = g.constant(Tensor(1, 2));
  const Tensor& h = g.value(gru_cell(g, x, h0, ids));
  // z = r = 0.5 and the candidate is tanh(0) = 0, so the state stays 0.
  CHECK(h.at(0, 0) == 0.0);
  CHECK(h.at(0, 1) == 0.0);
}

TEST_CASE("gru_cell scalar case matches hand arithmetic") {
  GruParams p = zero_params(1, 1);
  p.W_z.at(0, 0) = 0.5;
  p.U_z.at(0, 0) = -0.4;
  p.b_z.at(0, 0) = 0.1;
  p.W_r.at(0, 0) = -0.3;
  p.U_r.at(0, 0) = 0.2;
  p.b_r.at(0, 0) = -0.1;
  p.W_h.at(0, 0) = 0.8;
  p.U_h.at(0, 0) = 0.5;
  p.b_h.at(0, 0) = 0.05;
  const double x = 0.7, h_prev = 0.3;

  // Scalar oracle, straight from the gate equations.
  const double z = sigmoid(x * 0.5 + h_prev * -0.4 + 0.1);
  const double r = sigmoid(x * -0.3 + h_prev * 0.2 + -0.1);
  const double cand = std::tanh(x * 0.8 + (r * h_prev) * 0.5 + 0.05);
  const double expected = (1.0 - z) * h_prev + z * cand;

  Graph g;
  const GruIds ids = gru_leaves(g, p);
  const Tensor& h = g.value(
      gru_cell(g, g.constant(Tensor::row({x})), g.constant(Tensor::row({h_prev})), ids));
  CHECK(h.at(0, 0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("gru_cell gradient matches finite differences for every parameter") {
  std::mt19937_64 rng(5);
  GruParams p = GruParams::init(3, 2, rng);
  Tensor x(1, 3);
  Tensor h0(1, 2);
  for (double& v : x.data) v = uniform_range(rng, -1.0, 1.0);
  for (double& v : h0.data) v = uniform_range(rng, -0.5, 0.5);

  std::vector<Tensor*> leaves = p.tensors();
  leaves.push_back(&x);
  leaves.push_back(&h0);

  const double err = grad_check(
      [](Graph& g, const std::vector<Graph::Id>& ids) {
        GruIds p_ids{ids[0], ids[1], ids[2], ids[3], ids[4], ids[5], ids[6], ids[7], ids[8]};
        return g.sum_all(gru_cell(g, ids[9], ids[10], p_ids));
      },
      leaves, 1e-5);
  CHECK(err < 1e-5);
}

TEST_CASE("bigru single utterance concatenates the two directions") {
  std::mt19937_64 rng(9);
  BiGruParams p = BiGruParams::init(3, 2, rng);
  Tensor x(1, 3);
  for (double& v : x.data) v = uniform_range(rng, -1.0, 1.0);

  Graph g;
  const Tensor& out = g.value(bigru(g, g.constant(x), bigru_leaves(g, p)));
  CHECK(out.rows == 1);
  CHECK(out.cols == 4);

  Graph g2;
  const GruIds fwd = gru_leaves(g2, p.fwd);
  const Tensor& hf =
      g2.value(gru_cell(g2, g2.constant(x), g2.constant(Tensor(1, 2)), fwd));
  const GruIds bwd = gru_leaves(g2, p.bwd);
  const Tensor& hb =
      g2.value(gru_cell(g2, g2.constant(x), g2.constant(Tensor(1, 2)), bwd));
  CHECK(out.at(0, 0) == hf.at(0, 0));
  CHECK(out.at(0, 1) == hf.at(0, 1));
  CHECK(out.at(0, 2) == hb.at(0, 0));
  CHECK(out.at(0, 3) == hb.at(0, 1));
}

TEST_CASE("bigru output shape is u x 2d") {
  std::mt19937_64 rng(1);
  BiGruParams p = BiGruParams::init(4, 3, rng);
  for (int u : {1, 2, 5, 9}) {
    Tensor x(u, 4);
    for (double& v : x.data) v = uniform_range(rng, -1.0, 1.0);
    Graph g;
    const Tensor& out = g.value(bigru(g, g.constant(x), bigru_leaves(g, p)));
    CHECK(out.rows == u);
    CHECK(out.cols == 6);
  }
}

TEST_CASE("bigru rejects an empty sequence") {
  std::mt19937_64 rng(2);
  BiGruParams p = BiGruParams::init(3, 2, rng);
  Graph g;
  CHECK_THROWS_AS(bigru(g, g.constant(Tensor(0, 3)), bigru_leaves(g, p)), ShapeError);
}

TEST_CASE("reversing the sequence with swapped directions mirrors the output bitwise") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const int u = 1 + static_cast<int>(bounded(rng, 5));
    BiGruParams p = BiGruParams::init(3, 2, rng);
    Tensor x(u, 3);
    for (double& v : x.data) v = uniform_range(rng, -1.5, 1.5);

    Graph g;
    const Tensor& out = g.value(bigru(g, g.constant(x), bigru_leaves(g, p)));

    Tensor x_rev(u, 3);
    for (int i = 0; i < u; ++i)
      for (int j = 0; j < 3; ++j) x_rev.at(i, j) = x.at(u - 1 - i, j);
    BiGruParams swapped;
    swapped.fwd = p.bwd;
    swapped.bwd = p.fwd;
    Graph g2;
    const Tensor& out_rev = g2.value(bigru(g2, g2.constant(x_rev), bigru_leaves(g2, swapped)));

    for (int i = 0; i < u; ++i)
      for (int j = 0; j < 2; ++j) {
        CHECK(out.at(i, j) == out_rev.at(u - 1 - i, j + 2));
        CHECK(out.at(i, j + 2) == out_rev.at(u - 1 - i, j));
      }
  }
}

TEST_CASE("bigru matches an unrolled step-by-step oracle") {
  std::mt19937_64 rng(21);
  const int u = 3, d_in = 3, d = 2;
  BiGruParams p = BiGruParams::init(d_in, d, rng);
  Tensor x(u, d_in);
  for (double& v : x.data) v = uniform_range(rng, -1.0, 1.0);

  // Unrolled oracle with plain scalar arithmetic.
  auto run_direction = [&](const GruParams& gp, bool reverse) {
    std::vector<std::vector<double>> states(u, std::vector<double>(d, 0.0));
    std::vector<double> h(d, 0.0);
    for (int step = 0; step < u; ++step) {
      const int t = reverse ? u - 1 - step : step;
      std::vector<double> z(d), r(d), cand(d), h_new(d);
      for (int j = 0; j < d; ++j) {
        double az = gp.b_z.at(0, j), ar = gp.b_r.at(0, j);
        for (int k = 0; k < d_in; ++k) {
          az += x.at(t, k) * gp.W_z.at(k, j);
          ar += x.at(t, k) * gp.W_r.at(k, j);
        }
        for (int k = 0; k < d; ++k) {
          az += h[k] * gp.U_z.at(k, j);
          ar += h[k] * gp.U_r.at(k, j);
        }
        z[j] = sigmoid(az);
        r[j] = sigmoid(ar);
      }
      for (int j = 0; j < d; ++j) {
        double ah = gp.b_h.at(0, j);
        for (int k = 0; k < d_in; ++k) ah += x.at(t, k) * gp.W_h.at(k, j);
        for (int k = 0; k < d; ++k) ah += (r[k] * h[k]) * gp.U_h.at(k, j);
        cand[j] = std::tanh(ah);
      }
      for (int j = 0; j < d; ++j) h_new[j] = (1.0 - z[j]) * h[j] + z[j] * cand[j];
      h = h_new;
      states[t] = h;
    }
    return states;
  };

  const auto fwd = run_direction(p.fwd, false);
  const auto bwd = run_direction(p.bwd, true);

  Graph g;
  const Tensor& out = g.value(bigru(g, g.constant(x), bigru_leaves(g, p)));
  for (int i = 0; i < u; ++i)
    for (int j = 0; j < d; ++j) {
      CHECK(out.at(i, j) == doctest::Approx(fwd[i][j]).epsilon(1e-12));
      CHECK(out.at(i, j + d) == doctest::Approx(bwd[i][j]).epsilon(1e-12));
    }
}

TEST_CASE("full bigru gradient check") {
  std::mt19937_64 rng(31);
  const int u = 4, d_in = 3, d = 2;
  BiGruParams p = BiGruParams::init(d_in, d, rng);
  Tensor x(u, d_in);
  for (double& v : x.data) v = uniform_range(rng, -1.0, 1.0);

  std::vector<Tensor*> leaves = p.fwd.tensors();
  for (Tensor* t : p.bwd.tensors()) leaves.push_back(t);
  leaves.push_back(&x);

  const double err = grad_check(
      [](Graph& g, const std::vector<Graph::Id>& ids) {
        BiGruIds bi{{ids[0], ids[1], ids[2], ids[3], ids[4], ids[5], ids[6], ids[7], ids[8]},
                    {ids[9], ids[10], ids[11], ids[12], ids[13], ids[14], ids[15], ids[16],
                     ids[17]}};
        return g.mean_all(g.tanh_(bigru(g, ids[18], bi)));
      },
      leaves, 1e-5);
  CHECK(err < 1e-4);
}
