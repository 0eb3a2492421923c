#include <cmath>
#include <random>

#include "doctest.h"
#include "mtmm/attention.hpp"
#include "mtmm/grad_check.hpp"
#include "mtmm/rng.hpp"

using namespace mtmm;

namespace {

Tensor random_tensor(int r, int c, std::mt19937_64& rng) {
  Tensor t(r, c);
  for (double& v : t.data) v = uniform_range(rng, -2.0, 2.0);
  return t;
}

}  // namespace

TEST_CASE("hand-derived u=2 d=1 example") {
  // X = [[1],[0]], Y = [[1],[1]]; every stage computed by scalar arithmetic.
  Graph g;
  const Graph::Id x = g.constant(Tensor::from_rows({{1}, {0}}));
  const Graph::Id y = g.constant(Tensor::from_rows({{1}, {1}}));
  const AttentionIds ids = cim_attention(g, x, y);
  const AttentionPair p = snapshot_attention(g, ids, "XY");

  CHECK(p.m1.at(0, 0) == 1.0);
  CHECK(p.m1.at(0, 1) == 1.0);
  CHECK(p.m1.at(1, 0) == 0.0);
  CHECK(p.m1.at(1, 1) == 0.0);

  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(p.n1.at(i, j) == doctest::Approx(0.5).epsilon(1e-9));

  CHECK(p.o1.at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.o1.at(1, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.a1.at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.a1.at(1, 0) == doctest::Approx(0.0).epsilon(1e-9));

  CHECK(p.m2.at(0, 0) == 1.0);
  CHECK(p.m2.at(0, 1) == 0.0);
  CHECK(p.m2.at(1, 0) == 1.0);
  CHECK(p.m2.at(1, 1) == 0.0);

  const double e = std::exp(1.0);
  const double hi = e / (e + 1.0);  // 0.7310585786...
  const double lo = 1.0 / (e + 1.0);
  for (int i = 0; i < 2; ++i) {
    CHECK(p.n2.at(i, 0) == doctest::Approx(hi).epsilon(1e-9));
    CHECK(p.n2.at(i, 1) == doctest::Approx(lo).epsilon(1e-9));
    CHECK(p.o2.at(i, 0) == doctest::Approx(hi).epsilon(1e-9));
    CHECK(p.a2.at(i, 0) == doctest::Approx(hi).epsilon(1e-9));
  }

  // output = [a1 ; a2] column-wise.
  CHECK(p.output.cols == 2);
  CHECK(p.output.at(0, 0) == p.a1.at(0, 0));
  CHECK(p.output.at(0, 1) == p.a2.at(0, 0));
}

TEST_CASE("identical inputs collapse the pair") {
  std::mt19937_64 rng(17);
  Graph g;
  const Graph::Id x = g.constant(random_tensor(3, 2, rng));
  const AttentionIds ids = cim_attention(g, x, x);
  const AttentionPair p = snapshot_attention(g, ids, "XX");
  for (std::size_t i = 0; i < p.m1.size(); ++i) CHECK(p.m1.data[i] == p.m2.data[i]);
  for (std::size_t i = 0; i < p.n1.size(); ++i) CHECK(p.n1.data[i] == p.n2.data[i]);
  for (std::size_t i = 0; i < p.o1.size(); ++i) CHECK(p.o1.data[i] == p.o2.data[i]);
  for (std::size_t i = 0; i < p.a1.size(); ++i) CHECK(p.a1.data[i] == p.a2.data[i]);
}

TEST_CASE("swap law, transpose law and row-stochasticity on random instances") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 1000; ++trial) {
    const int u = 1 + static_cast<int>(bounded(rng, 4));
    const int d = 1 + static_cast<int>(bounded(rng, 3));
    Tensor xt = random_tensor(u, d, rng);
    Tensor yt = random_tensor(u, d, rng);

    Graph g;
    const Graph::Id x = g.constant(xt);
    const Graph::Id y = g.constant(yt);
    const AttentionPair fwd = snapshot_attention(g, cim_attention(g, x, y), "XY");
    const AttentionPair swp = snapshot_attention(g, cim_attention(g, y, x), "YX");

    // M2 is exactly M1 transposed.
    for (int i = 0; i < u; ++i)
      for (int j = 0; j < u; ++j) CHECK(fwd.m2.at(i, j) == fwd.m1.at(j, i));

    // Swapping the arguments exchanges the roles elementwise exactly.
    for (std::size_t i = 0; i < fwd.a1.size(); ++i) {
      CHECK(swp.a1.data[i] == fwd.a2.data[i]);
      CHECK(swp.a2.data[i] == fwd.a1.data[i]);
    }

    // N1 and N2 rows are probability distributions.
    for (int i = 0; i < u; ++i) {
      double s1 = 0.0, s2 = 0.0;
      for (int j = 0; j < u; ++j) {
        s1 += fwd.n1.at(i, j);
        s2 += fwd.n2.at(i, j);
        CHECK(fwd.n1.at(i, j) > 0.0);
        CHECK(fwd.n1.at(i, j) < 1.0 + 1e-12);
      }
      CHECK(s1 == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(s2 == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("single-utterance attention reduces to pure gating") {
  std::mt19937_64 rng(41);
  Tensor xt = random_tensor(1, 3, rng);
  Tensor yt = random_tensor(1, 3, rng);
  Graph g;
  const AttentionPair p =
      snapshot_attention(g, cim_attention(g, g.constant(xt), g.constant(yt)), "XY");
  CHECK(p.n1.at(0, 0) == doctest::Approx(1.0));
  CHECK(p.n2.at(0, 0) == doctest::Approx(1.0));
  for (int j = 0; j < 3; ++j) {
    CHECK(p.a1.at(0, j) == doctest::Approx(yt.at(0, j) * xt.at(0, j)).epsilon(1e-12));
    CHECK(p.a2.at(0, j) == doctest::Approx(xt.at(0, j) * yt.at(0, j)).epsilon(1e-12));
  }
}

TEST_CASE("self-attention output halves are identical and match the pair block") {
  std::mt19937_64 rng(53);
  Tensor xt = random_tensor(3, 4, rng);

  Graph g;
  const Graph::Id x = g.constant(xt);
  const Tensor& self_out = g.value(self_attention(g, x));
  CHECK(self_out.rows == 3);
  CHECK(self_out.cols == 8);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) CHECK(self_out.at(i, j) == self_out.at(i, j + 4));

  Graph g2;
  const Graph::Id x2 = g2.constant(xt);
  const Tensor& pair_out = g2.value(cim_attention(g2, x2, x2).output);
  for (std::size_t i = 0; i < self_out.size(); ++i)
    CHECK(self_out.data[i] == pair_out.data[i]);
}

TEST_CASE("single-utterance self-attention is the squared row twice") {
  Graph g;
  const Graph::Id x = g.constant(Tensor::from_rows({{1.5, -2.0}}));
  const Tensor& out = g.value(self_attention(g, x));
  CHECK(out.rows == 1);
  CHECK(out.cols == 4);
  CHECK(out.at(0, 0) == doctest::Approx(2.25));
  CHECK(out.at(0, 1) == doctest::Approx(4.0));
  CHECK(out.at(0, 2) == doctest::Approx(2.25));
  CHECK(out.at(0, 3) == doctest::Approx(4.0));
}

TEST_CASE("attention rejects mismatched operands") {
  Graph g;
  const Graph::Id x = g.constant(Tensor(2, 3));
  const Graph::Id y = g.constant(Tensor(2, 4));
  CHECK_THROWS_AS(cim_attention(g, x, y), ShapeError);
}

TEST_CASE("whole block gradient check") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 5; ++trial) {
    const int u = 1 + static_cast<int>(bounded(rng, 4));
    const int d = 1 + static_cast<int>(bounded(rng, 3));
    Tensor x = random_tensor(u, d, rng);
    Tensor y = random_tensor(u, d, rng);
    Tensor* leaves[2] = {&x, &y};
    const double err = grad_check(
        [](Graph& g, const std::vector<Graph::Id>& ids) {
          return g.mean_all(cim_attention(g, ids[0], ids[1]).output);
        },
        leaves, 1e-5);
    CHECK(err < 1e-5);
  }
}
