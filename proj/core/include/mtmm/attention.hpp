#pragma once

#include <string>

#include "mtmm/graph.hpp"

namespace mtmm {

/// Graph handles for one contextual inter-modal attention block over a
/// modality pair (X, Y), both u x d:
///   m1 = X Y^T, m2 = Y X^T          (u x u matching matrices)
///   n1 = rowsoftmax(m1), n2 = ...   (row-stochastic scores)
///   o1 = n1 Y, o2 = n2 X            (soft attention)
///   a1 = o1 * X, a2 = o2 * Y        (multiplicative gating)
///   output = [a1 ; a2]              (u x 2d, column concat)
struct AttentionIds {
  Graph::Id m1, m2, n1, n2, o1, o2, a1, a2, output;
};

/// Value snapshot of one attention block, exportable for heatmaps.
struct AttentionPair {
  std::string name;  // modality pair tag, e.g. "TV"; self-attention "TT"
  Tensor m1, m2, n1, n2, o1, o2, a1, a2, output;
};

AttentionIds cim_attention(Graph& g, Graph::Id x, Graph::Id y);

/// Uni-modal variant: the block applied with both arguments equal.
Graph::Id self_attention(Graph& g, Graph::Id x);

AttentionPair snapshot_attention(const Graph& g, const AttentionIds& ids, std::string name);

}  // namespace mtmm
