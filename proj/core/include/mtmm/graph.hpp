#pragma once

#include <random>
#include <deque>
#include <vector>

#include "mtmm/tensor.hpp"

namespace mtmm {

/// Kinds accepted by Graph::elementwise. Binary kinds require identical
/// shapes; dropout_mask_apply multiplies by a fixed (already scaled) mask.
enum class Elementwise { mul, add, tanh, sigmoid, relu, dropout_mask_apply };

/// Reverse-mode tape over 2-D tensors.
///
/// Every factory method appends a node, computes its value eagerly and
/// returns its id, so insertion order is a topological order. backward()
/// walks the tape once in reverse and accumulates d(loss)/d(leaf) into the
/// grad buffer of every requires_grad leaf reachable from the loss.
///
/// single-owner, single-threaded during construction and backward.
class Graph {
 public:
  using Id = int;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Borrows `t` (must outlive the graph); grads accumulate into t.grad.
  Id leaf(Tensor& t);
  /// Owned copy that never receives gradient.
  Id constant(Tensor t);

  Id matmul(Id a, Id b);
  Id transpose(Id a);
  Id concat_cols(const std::vector<Id>& parts);
  Id concat_rows(const std::vector<Id>& parts);
  /// 1 x cols view of row i.
  Id slice_row(Id a, int i);

  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  /// Broadcasts a 1xC row over every row of a (r x C).
  Id add_row(Id a, Id row);

  Id tanh_(Id a);
  Id sigmoid(Id a);
  Id relu(Id a);
  Id log_(Id a);
  Id clip(Id a, double lo, double hi);
  /// scale * x + shift, elementwise.
  Id affine(Id a, double scale, double shift);
  /// Inverted-scaling dropout: keeps entries with prob 1-rate and divides
  /// them by the keep probability, so inference needs no rescaling.
  Id dropout(Id a, double rate, std::mt19937_64& rng);

  /// Row-wise softmax with max subtraction. Throws NumericError on
  /// non-finite input.
  Id row_softmax(Id a);

  Id sum_all(Id a);
  Id mean_all(Id a);

  /// Dispatcher matching the elementwise operation contract.
  Id elementwise(Elementwise kind, Id a, Id b = -1);

  const Tensor& value(Id id) const;
  int size() const { return static_cast<int>(nodes_.size()); }

  /// Seeds the 1x1 loss node with adjoint 1 and sweeps the tape in reverse.
  /// Accumulates (+=) into leaf grad buffers.
  void backward(Id loss);

 private:
  enum class Op {
    leaf,
    constant,
    matmul,
    transpose,
    concat_cols,
    concat_rows,
    slice_row,
    add,
    sub,
    mul,
    add_row,
    tanh_fn,
    sigmoid_fn,
    relu_fn,
    log_fn,
    clip_fn,
    affine_fn,
    dropout_mask,
    row_softmax_fn,
    sum_all_red,
    mean_all_red,
  };

  struct Node {
    Op op{};
    std::vector<Id> inputs;
    Tensor value;
    std::vector<double> adjoint;  // allocated lazily during backward
    Tensor* leaf_target = nullptr;
    double p0 = 0.0, p1 = 0.0;   // op parameters (affine, clip, slice index)
    std::vector<double> mask;    // dropout keep mask, already scaled
  };

  Id push(Node n);
  const Node& node(Id id) const;
  Node& node(Id id);
  void check_same_shape(Id a, Id b, const char* what) const;
  std::vector<double>& adjoint_of(Id id);

  std::deque<Node> nodes_;
};

}  // namespace mtmm
