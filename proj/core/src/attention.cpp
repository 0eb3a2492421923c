#include "mtmm/attention.hpp"

namespace mtmm {

AttentionIds cim_attention(Graph& g, Graph::Id x, Graph::Id y) {
  const Tensor& tx = g.value(x);
  const Tensor& ty = g.value(y);
  if (!tx.same_shape(ty))
    throw ShapeError("cim_attention: operands must share shape, got " + tx.shape_str() +
                     " vs " + ty.shape_str());
  if (tx.rows < 1) throw ShapeError("cim_attention: need at least one utterance");

  AttentionIds ids;
  ids.m1 = g.matmul(x, g.transpose(y));
  ids.m2 = g.matmul(y, g.transpose(x));
  ids.n1 = g.row_softmax(ids.m1);
  ids.n2 = g.row_softmax(ids.m2);
  ids.o1 = g.matmul(ids.n1, y);
  ids.o2 = g.matmul(ids.n2, x);
  ids.a1 = g.mul(ids.o1, x);
  ids.a2 = g.mul(ids.o2, y);
  ids.output = g.concat_cols({ids.a1, ids.a2});
  return ids;
}

Graph::Id self_attention(Graph& g, Graph::Id x) { return cim_attention(g, x, x).output; }

AttentionPair snapshot_attention(const Graph& g, const AttentionIds& ids, std::string name) {
  AttentionPair p;
  p.name = std::move(name);
  p.m1 = g.value(ids.m1);
  p.m2 = g.value(ids.m2);
  p.n1 = g.value(ids.n1);
  p.n2 = g.value(ids.n2);
  p.o1 = g.value(ids.o1);
  p.o2 = g.value(ids.o2);
  p.a1 = g.value(ids.a1);
  p.a2 = g.value(ids.a2);
  p.output = g.value(ids.output);
  return p;
}

}  // namespace mtmm
