#pragma once

#include <random>
#include <vector>

#include "mtmm/graph.hpp"

namespace mtmm {

/// One GRU direction. Input matrices are d_in x d, recurrent matrices
/// d x d, biases 1 x d.
struct GruParams {
  Tensor W_z, W_r, W_h;
  Tensor U_z, U_r, U_h;
  Tensor b_z, b_r, b_h;

  int input_size() const { return W_z.rows; }
  int hidden_size() const { return W_z.cols; }
  void validate() const;

  /// Uniform init in [-k, k]: k = 1/sqrt(d_in) for input matrices,
  /// 1/sqrt(d) for recurrent matrices. Biases start at zero.
  static GruParams init(int d_in, int d, std::mt19937_64& rng);

  std::vector<Tensor*> tensors();
};

struct BiGruParams {
  GruParams fwd, bwd;

  static BiGruParams init(int d_in, int d, std::mt19937_64& rng);
};

/// Graph-side handles for one direction's parameters.
struct GruIds {
  Graph::Id W_z, W_r, W_h, U_z, U_r, U_h, b_z, b_r, b_h;
};

struct BiGruIds {
  GruIds fwd, bwd;
};

GruIds gru_leaves(Graph& g, GruParams& p);
BiGruIds bigru_leaves(Graph& g, BiGruParams& p);

/// One step: x_t is 1 x d_in, h_prev is 1 x d. Gates
///   z = sigmoid(x W_z + h U_z + b_z)
///   r = sigmoid(x W_r + h U_r + b_r)
///   h~ = tanh(x W_h + (r * h) U_h + b_h)
///   h' = (1 - z) * h + z * h~
Graph::Id gru_cell(Graph& g, Graph::Id x_t, Graph::Id h_prev, const GruIds& p);

/// Bidirectional encoding of a u x d_in sequence; row i of the u x 2d
/// output is [forward state after rows 0..i ; backward state after rows
/// u-1..i]. Initial hidden states are zero. Throws on an empty sequence.
Graph::Id bigru(Graph& g, Graph::Id X, const BiGruIds& p);

}  // namespace mtmm
