#include "mtmm/gru.hpp"

#include <cmath>

#include "mtmm/rng.hpp"

namespace mtmm {

namespace {

Tensor uniform_tensor(int r, int c, double k, std::mt19937_64& rng) {
  Tensor t(r, c);
  for (double& v : t.data) v = uniform_range(rng, -k, k);
  return t;
}

}  // namespace

void GruParams::validate() const {
  const int d_in = W_z.rows;
  const int d = W_z.cols;
  auto expect = [](const Tensor& t, int r, int c, const char* name) {
    if (t.rows != r || t.cols != c)
      throw ShapeError(std::string("GruParams: ") + name + " has shape " + t.shape_str() +
                       ", expected " + std::to_string(r) + "x" + std::to_string(c));
  };
  expect(W_r, d_in, d, "W_r");
  expect(W_h, d_in, d, "W_h");
  expect(U_z, d, d, "U_z");
  expect(U_r, d, d, "U_r");
  expect(U_h, d, d, "U_h");
  expect(b_z, 1, d, "b_z");
  expect(b_r, 1, d, "b_r");
  expect(b_h, 1, d, "b_h");
}

GruParams GruParams::init(int d_in, int d, std::mt19937_64& rng) {
  if (d_in < 1 || d < 1) throw ShapeError("GruParams::init: sizes must be >= 1");
  const double ki = 1.0 / std::sqrt(static_cast<double>(d_in));
  const double kr = 1.0 / std::sqrt(static_cast<double>(d));
  GruParams p;
  p.W_z = uniform_tensor(d_in, d, ki, rng);
  p.W_r = uniform_tensor(d_in, d, ki, rng);
  p.W_h = uniform_tensor(d_in, d, ki, rng);
  p.U_z = uniform_tensor(d, d, kr, rng);
  p.U_r = uniform_tensor(d, d, kr, rng);
  p.U_h = uniform_tensor(d, d, kr, rng);
  p.b_z = Tensor(1, d);
  p.b_r = Tensor(1, d);
  p.b_h = Tensor(1, d);
  return p;
}

std::vector<Tensor*> GruParams::tensors() {
  return {&W_z, &W_r, &W_h, &U_z, &U_r, &U_h, &b_z, &b_r, &b_h};
}

BiGruParams BiGruParams::init(int d_in, int d, std::mt19937_64& rng) {
  BiGruParams p;
  p.fwd = GruParams::init(d_in, d, rng);
  p.bwd = GruParams::init(d_in, d, rng);
  return p;
}

GruIds gru_leaves(Graph& g, GruParams& p) {
  p.validate();
  GruIds ids;
  ids.W_z = g.leaf(p.W_z);
  ids.W_r = g.leaf(p.W_r);
  ids.W_h = g.leaf(p.W_h);
  ids.U_z = g.leaf(p.U_z);
  ids.U_r = g.leaf(p.U_r);
  ids.U_h = g.leaf(p.U_h);
  ids.b_z = g.leaf(p.b_z);
  ids.b_r = g.leaf(p.b_r);
  ids.b_h = g.leaf(p.b_h);
  return ids;
}

BiGruIds bigru_leaves(Graph& g, BiGruParams& p) {
  return {gru_leaves(g, p.fwd), gru_leaves(g, p.bwd)};
}

Graph::Id gru_cell(Graph& g, Graph::Id x_t, Graph::Id h_prev, const GruIds& p) {
  const Graph::Id z =
      g.sigmoid(g.add(g.add(g.matmul(x_t, p.W_z), g.matmul(h_prev, p.U_z)), p.b_z));
  const Graph::Id r =
      g.sigmoid(g.add(g.add(g.matmul(x_t, p.W_r), g.matmul(h_prev, p.U_r)), p.b_r));
  const Graph::Id cand = g.tanh_(
      g.add(g.add(g.matmul(x_t, p.W_h), g.matmul(g.mul(r, h_prev), p.U_h)), p.b_h));
  const Graph::Id one_minus_z = g.affine(z, -1.0, 1.0);
  return g.add(g.mul(one_minus_z, h_prev), g.mul(z, cand));
}

Graph::Id bigru(Graph& g, Graph::Id X, const BiGruIds& p) {
  const Tensor& x = g.value(X);
  const int u = x.rows;
  if (u < 1) throw ShapeError("bigru: empty sequence");
  const int d = g.value(p.fwd.W_z).cols;

  std::vector<Graph::Id> fwd_states(static_cast<std::size_t>(u));
  Graph::Id h = g.constant(Tensor(1, d));
  for (int t = 0; t < u; ++t) {
    h = gru_cell(g, g.slice_row(X, t), h, p.fwd);
    fwd_states[static_cast<std::size_t>(t)] = h;
  }

  std::vector<Graph::Id> bwd_states(static_cast<std::size_t>(u));
  h = g.constant(Tensor(1, d));
  for (int t = u - 1; t >= 0; --t) {
    h = gru_cell(g, g.slice_row(X, t), h, p.bwd);
    bwd_states[static_cast<std::size_t>(t)] = h;
  }

  return g.concat_cols({g.concat_rows(fwd_states), g.concat_rows(bwd_states)});
}

}  // namespace mtmm
