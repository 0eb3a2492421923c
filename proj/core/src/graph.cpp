#include "mtmm/graph.hpp"

#include <algorithm>
#include <cmath>

#include "mtmm/rng.hpp"

namespace mtmm {

namespace {

// C (r x c) += A (r x k) * B (k x c)
void matmul_acc(const double* A, const double* B, double* C, int r, int k, int c) {
  for (int i = 0; i < r; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      const double a = A[static_cast<std::size_t>(i) * k + kk];
      const double* brow = B + static_cast<std::size_t>(kk) * c;
      double* crow = C + static_cast<std::size_t>(i) * c;
      for (int j = 0; j < c; ++j) crow[j] += a * brow[j];
    }
  }
}

// C (r x c) += A (r x k) * B^T where B is (c x k)
void matmul_acc_nt(const double* A, const double* B, double* C, int r, int k, int c) {
  for (int i = 0; i < r; ++i) {
    const double* arow = A + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < c; ++j) {
      const double* brow = B + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      C[static_cast<std::size_t>(i) * c + j] += acc;
    }
  }
}

// C (r x c) += A^T * B where A is (k x r), B is (k x c)
void matmul_acc_tn(const double* A, const double* B, double* C, int r, int k, int c) {
  for (int kk = 0; kk < k; ++kk) {
    const double* arow = A + static_cast<std::size_t>(kk) * r;
    const double* brow = B + static_cast<std::size_t>(kk) * c;
    for (int i = 0; i < r; ++i) {
      const double a = arow[i];
      double* crow = C + static_cast<std::size_t>(i) * c;
      for (int j = 0; j < c; ++j) crow[j] += a * brow[j];
    }
  }
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Graph::Id Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size()) - 1;
}

const Graph::Node& Graph::node(Id id) const {
  if (id < 0 || id >= static_cast<Id>(nodes_.size()))
    throw ShapeError("graph node id out of range");
  return nodes_[static_cast<std::size_t>(id)];
}

Graph::Node& Graph::node(Id id) {
  return const_cast<Node&>(static_cast<const Graph*>(this)->node(id));
}

void Graph::check_same_shape(Id a, Id b, const char* what) const {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  if (!ta.same_shape(tb))
    throw ShapeError(std::string(what) + ": shape mismatch " + ta.shape_str() + " vs " +
                     tb.shape_str());
}

const Tensor& Graph::value(Id id) const { return node(id).value; }

Graph::Id Graph::leaf(Tensor& t) {
  Node n;
  n.op = Op::leaf;
  n.value = t;  // copy of the current values
  n.leaf_target = &t;
  return push(std::move(n));
}

Graph::Id Graph::constant(Tensor t) {
  Node n;
  n.op = Op::constant;
  n.value = std::move(t);
  return push(std::move(n));
}

Graph::Id Graph::matmul(Id a, Id b) {
  const Tensor& ta = node(a).value;
  const Tensor& tb = node(b).value;
  if (ta.cols != tb.rows)
    throw ShapeError("matmul: inner dimensions differ, " + ta.shape_str() + " x " +
                     tb.shape_str());
  Node n;
  n.op = Op::matmul;
  n.inputs = {a, b};
  n.value = Tensor(ta.rows, tb.cols);
  matmul_acc(ta.data.data(), tb.data.data(), n.value.data.data(), ta.rows, ta.cols, tb.cols);
  return push(std::move(n));
}

Graph::Id Graph::transpose(Id a) {
  const Tensor& ta = node(a).value;
  Node n;
  n.op = Op::transpose;
  n.inputs = {a};
  n.value = Tensor(ta.cols, ta.rows);
  for (int i = 0; i < ta.rows; ++i)
    for (int j = 0; j < ta.cols; ++j) n.value.at(j, i) = ta.at(i, j);
  return push(std::move(n));
}

Graph::Id Graph::concat_cols(const std::vector<Id>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  const int rows = node(parts[0]).value.rows;
  int total = 0;
  for (Id p : parts) {
    const Tensor& t = node(p).value;
    if (t.rows != rows)
      throw ShapeError("concat_cols: row-count mismatch, " + std::to_string(rows) + " vs " +
                       t.shape_str());
    total += t.cols;
  }
  Node n;
  n.op = Op::concat_cols;
  n.inputs = parts;
  n.value = Tensor(rows, total);
  int off = 0;
  for (Id p : parts) {
    const Tensor& t = node(p).value;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < t.cols; ++j) n.value.at(i, off + j) = t.at(i, j);
    off += t.cols;
  }
  return push(std::move(n));
}

Graph::Id Graph::concat_rows(const std::vector<Id>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  const int cols = node(parts[0]).value.cols;
  int total = 0;
  for (Id p : parts) {
    const Tensor& t = node(p).value;
    if (t.cols != cols)
      throw ShapeError("concat_rows: column-count mismatch, " + std::to_string(cols) + " vs " +
                       t.shape_str());
    total += t.rows;
  }
  Node n;
  n.op = Op::concat_rows;
  n.inputs = parts;
  n.value = Tensor(total, cols);
  int off = 0;
  for (Id p : parts) {
    const Tensor& t = node(p).value;
    for (int i = 0; i < t.rows; ++i)
      for (int j = 0; j < cols; ++j) n.value.at(off + i, j) = t.at(i, j);
    off += t.rows;
  }
  return push(std::move(n));
}

Graph::Id Graph::slice_row(Id a, int i) {
  const Tensor& ta = node(a).value;
  if (i < 0 || i >= ta.rows) throw ShapeError("slice_row: index out of range");
  Node n;
  n.op = Op::slice_row;
  n.inputs = {a};
  n.p0 = static_cast<double>(i);
  n.value = Tensor(1, ta.cols);
  for (int j = 0; j < ta.cols; ++j) n.value.at(0, j) = ta.at(i, j);
  return push(std::move(n));
}

Graph::Id Graph::add(Id a, Id b) {
  check_same_shape(a, b, "add");
  Node n;
  n.op = Op::add;
  n.inputs = {a, b};
  n.value = node(a).value;
  const Tensor& tb = node(b).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] += tb.data[i];
  return push(std::move(n));
}

Graph::Id Graph::sub(Id a, Id b) {
  check_same_shape(a, b, "sub");
  Node n;
  n.op = Op::sub;
  n.inputs = {a, b};
  n.value = node(a).value;
  const Tensor& tb = node(b).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] -= tb.data[i];
  return push(std::move(n));
}

Graph::Id Graph::mul(Id a, Id b) {
  check_same_shape(a, b, "mul");
  Node n;
  n.op = Op::mul;
  n.inputs = {a, b};
  n.value = node(a).value;
  const Tensor& tb = node(b).value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] *= tb.data[i];
  return push(std::move(n));
}

Graph::Id Graph::add_row(Id a, Id row) {
  const Tensor& ta = node(a).value;
  const Tensor& tr = node(row).value;
  if (tr.rows != 1 || tr.cols != ta.cols)
    throw ShapeError("add_row: bias must be 1x" + std::to_string(ta.cols) + ", got " +
                     tr.shape_str());
  Node n;
  n.op = Op::add_row;
  n.inputs = {a, row};
  n.value = ta;
  for (int i = 0; i < ta.rows; ++i)
    for (int j = 0; j < ta.cols; ++j) n.value.at(i, j) += tr.at(0, j);
  return push(std::move(n));
}

Graph::Id Graph::tanh_(Id a) {
  Node n;
  n.op = Op::tanh_fn;
  n.inputs = {a};
  n.value = node(a).value;
  for (double& v : n.value.data) v = std::tanh(v);
  return push(std::move(n));
}

Graph::Id Graph::sigmoid(Id a) {
  Node n;
  n.op = Op::sigmoid_fn;
  n.inputs = {a};
  n.value = node(a).value;
  for (double& v : n.value.data) v = sigmoid_scalar(v);
  return push(std::move(n));
}

Graph::Id Graph::relu(Id a) {
  Node n;
  n.op = Op::relu_fn;
  n.inputs = {a};
  n.value = node(a).value;
  for (double& v : n.value.data) v = v > 0.0 ? v : 0.0;
  return push(std::move(n));
}

Graph::Id Graph::log_(Id a) {
  Node n;
  n.op = Op::log_fn;
  n.inputs = {a};
  n.value = node(a).value;
  for (double& v : n.value.data) {
    if (v <= 0.0) throw NumericError("log of non-positive value");
    v = std::log(v);
  }
  return push(std::move(n));
}

Graph::Id Graph::clip(Id a, double lo, double hi) {
  if (!(lo < hi)) throw ShapeError("clip: lo must be < hi");
  Node n;
  n.op = Op::clip_fn;
  n.inputs = {a};
  n.p0 = lo;
  n.p1 = hi;
  n.value = node(a).value;
  for (double& v : n.value.data) v = std::clamp(v, lo, hi);
  return push(std::move(n));
}

Graph::Id Graph::affine(Id a, double scale, double shift) {
  Node n;
  n.op = Op::affine_fn;
  n.inputs = {a};
  n.p0 = scale;
  n.p1 = shift;
  n.value = node(a).value;
  for (double& v : n.value.data) v = scale * v + shift;
  return push(std::move(n));
}

Graph::Id Graph::dropout(Id a, double rate, std::mt19937_64& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ShapeError("dropout: rate must be in [0, 1)");
  Node n;
  n.op = Op::dropout_mask;
  n.inputs = {a};
  n.value = node(a).value;
  const double keep = 1.0 - rate;
  n.mask.resize(n.value.size());
  for (std::size_t i = 0; i < n.mask.size(); ++i)
    n.mask[i] = (rate == 0.0 || uniform01(rng) >= rate) ? 1.0 / keep : 0.0;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.data[i] *= n.mask[i];
  return push(std::move(n));
}

Graph::Id Graph::row_softmax(Id a) {
  const Tensor& ta = node(a).value;
  if (!ta.all_finite()) throw NumericError("row_softmax: non-finite input");
  Node n;
  n.op = Op::row_softmax_fn;
  n.inputs = {a};
  n.value = Tensor(ta.rows, ta.cols);
  for (int i = 0; i < ta.rows; ++i) {
    double mx = ta.at(i, 0);
    for (int j = 1; j < ta.cols; ++j) mx = std::max(mx, ta.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < ta.cols; ++j) {
      const double e = std::exp(ta.at(i, j) - mx);
      n.value.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < ta.cols; ++j) n.value.at(i, j) /= sum;
  }
  return push(std::move(n));
}

Graph::Id Graph::sum_all(Id a) {
  Node n;
  n.op = Op::sum_all_red;
  n.inputs = {a};
  n.value = Tensor(1, 1);
  double s = 0.0;
  for (double v : node(a).value.data) s += v;
  n.value.data[0] = s;
  return push(std::move(n));
}

Graph::Id Graph::mean_all(Id a) {
  const Tensor& ta = node(a).value;
  if (ta.size() == 0) throw ShapeError("mean_all: empty tensor");
  Node n;
  n.op = Op::mean_all_red;
  n.inputs = {a};
  n.value = Tensor(1, 1);
  double s = 0.0;
  for (double v : ta.data) s += v;
  n.value.data[0] = s / static_cast<double>(ta.size());
  return push(std::move(n));
}

Graph::Id Graph::elementwise(Elementwise kind, Id a, Id b) {
  switch (kind) {
    case Elementwise::mul:
      return mul(a, b);
    case Elementwise::add:
      return add(a, b);
    case Elementwise::tanh:
      return tanh_(a);
    case Elementwise::sigmoid:
      return sigmoid(a);
    case Elementwise::relu:
      return relu(a);
    case Elementwise::dropout_mask_apply:
      return mul(a, b);
  }
  throw ShapeError("elementwise: unknown kind");
}

std::vector<double>& Graph::adjoint_of(Id id) {
  Node& n = node(id);
  if (n.adjoint.size() != n.value.size()) n.adjoint.assign(n.value.size(), 0.0);
  return n.adjoint;
}

void Graph::backward(Id loss) {
  Node& last = node(loss);
  if (last.value.rows != 1 || last.value.cols != 1)
    throw ShapeError("backward: loss must be 1x1, got " + last.value.shape_str());

  for (Node& n : nodes_) n.adjoint.clear();
  adjoint_of(loss)[0] = 1.0;

  for (Id id = loss; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.adjoint.empty()) continue;
    const std::vector<double>& g = n.adjoint;
    const Tensor& y = n.value;

    switch (n.op) {
      case Op::leaf: {
        if (n.leaf_target != nullptr && n.leaf_target->requires_grad) {
          n.leaf_target->ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i) n.leaf_target->grad[i] += g[i];
        }
        break;
      }
      case Op::constant:
        break;
      case Op::matmul: {
        const Tensor& a = node(n.inputs[0]).value;
        const Tensor& b = node(n.inputs[1]).value;
        // dA += G * B^T ; dB += A^T * G
        matmul_acc_nt(g.data(), b.data.data(), adjoint_of(n.inputs[0]).data(), a.rows, b.cols,
                      a.cols);
        matmul_acc_tn(a.data.data(), g.data(), adjoint_of(n.inputs[1]).data(), a.cols, a.rows,
                      b.cols);
        break;
      }
      case Op::transpose: {
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        const int r = y.rows, c = y.cols;  // y is input transposed
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j)
            ga[static_cast<std::size_t>(j) * r + i] += g[static_cast<std::size_t>(i) * c + j];
        break;
      }
      case Op::concat_cols: {
        int off = 0;
        for (Id p : n.inputs) {
          const Tensor& t = node(p).value;
          std::vector<double>& gp = adjoint_of(p);
          for (int i = 0; i < t.rows; ++i)
            for (int j = 0; j < t.cols; ++j)
              gp[static_cast<std::size_t>(i) * t.cols + j] +=
                  g[static_cast<std::size_t>(i) * y.cols + off + j];
          off += t.cols;
        }
        break;
      }
      case Op::concat_rows: {
        int off = 0;
        for (Id p : n.inputs) {
          const Tensor& t = node(p).value;
          std::vector<double>& gp = adjoint_of(p);
          for (int i = 0; i < t.rows; ++i)
            for (int j = 0; j < t.cols; ++j)
              gp[static_cast<std::size_t>(i) * t.cols + j] +=
                  g[static_cast<std::size_t>(off + i) * y.cols + j];
          off += t.rows;
        }
        break;
      }
      case Op::slice_row: {
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        const int i = static_cast<int>(n.p0);
        for (int j = 0; j < y.cols; ++j)
          ga[static_cast<std::size_t>(i) * y.cols + j] += g[static_cast<std::size_t>(j)];
        break;
      }
      case Op::add: {
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        std::vector<double>& gb = adjoint_of(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::sub: {
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        std::vector<double>& gb = adjoint_of(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] -= g[i];
        }
        break;
      }
      case Op::mul: {
        const Tensor& a = node(n.inputs[0]).value;
        const Tensor& b = node(n.inputs[1]).value;
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        std::vector<double>& gb = adjoint_of(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * b.data[i];
          gb[i] += g[i] * a.data[i];
        }
        break;
      }
      case Op::add_row: {
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        std::vector<double>& gr = adjoint_of(n.inputs[1]);
        for (int i = 0; i < y.rows; ++i)
          for (int j = 0; j < y.cols; ++j) {
            const double gij = g[static_cast<std::size_t>(i) * y.cols + j];
            ga[static_cast<std::size_t>(i) * y.cols + j] += gij;
            gr[static_cast<std::size_t>(j)] += gij;
          }
        break;
      }
      case Op::tanh_fn: {
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] += g[i] * (1.0 - y.data[i] * y.data[i]);
        break;
      }
      case Op::sigmoid_fn: {
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] += g[i] * y.data[i] * (1.0 - y.data[i]);
        break;
      }
      case Op::relu_fn: {
        const Tensor& a = node(n.inputs[0]).value;
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (a.data[i] > 0.0) ga[i] += g[i];
        break;
      }
      case Op::log_fn: {
        const Tensor& a = node(n.inputs[0]).value;
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / a.data[i];
        break;
      }
      case Op::clip_fn: {
        const Tensor& a = node(n.inputs[0]).value;
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (a.data[i] > n.p0 && a.data[i] < n.p1) ga[i] += g[i];
        break;
      }
      case Op::affine_fn: {
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.p0;
        break;
      }
      case Op::dropout_mask: {
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.mask[i];
        break;
      }
      case Op::row_softmax_fn: {
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        for (int i = 0; i < y.rows; ++i) {
          double dot = 0.0;
          for (int j = 0; j < y.cols; ++j)
            dot += g[static_cast<std::size_t>(i) * y.cols + j] * y.at(i, j);
          for (int j = 0; j < y.cols; ++j)
            ga[static_cast<std::size_t>(i) * y.cols + j] +=
                y.at(i, j) * (g[static_cast<std::size_t>(i) * y.cols + j] - dot);
        }
        break;
      }
      case Op::sum_all_red: {
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        for (double& v : ga) v += g[0];
        break;
      }
      case Op::mean_all_red: {
        std::vector<double>& ga = adjoint_of(n.inputs[0]);
        const double scale = g[0] / static_cast<double>(ga.size());
        for (double& v : ga) v += scale;
        break;
      }
    }
  }
}

}  // namespace mtmm
