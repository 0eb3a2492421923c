#include "mtmm/grad_check.hpp"

#include <cmath>

namespace mtmm {

namespace {

double eval_loss(const LossBuilder& f, std::span<Tensor* const> leaves) {
  Graph g;
  std::vector<Graph::Id> ids;
  ids.reserve(leaves.size());
  for (Tensor* t : leaves) ids.push_back(g.leaf(*t));
  const Graph::Id loss = f(g, ids);
  const Tensor& v = g.value(loss);
  if (v.rows != 1 || v.cols != 1) throw ShapeError("grad_check: loss must be 1x1");
  return v.data[0];
}

}  // namespace

double grad_check(const LossBuilder& f, std::span<Tensor* const> leaves, double eps) {
  if (eps <= 0.0) throw ShapeError("grad_check: eps must be positive");

  // Analytic pass.
  std::vector<std::vector<double>> analytic;
  {
    Graph g;
    std::vector<Graph::Id> ids;
    for (Tensor* t : leaves) {
      t->requires_grad = true;
      t->zero_grad();
      ids.push_back(g.leaf(*t));
    }
    const Graph::Id loss = f(g, ids);
    const Tensor& v = g.value(loss);
    if (v.rows != 1 || v.cols != 1) throw ShapeError("grad_check: loss must be 1x1");
    if (!std::isfinite(v.data[0])) throw NumericError("grad_check: non-finite loss value");
    g.backward(loss);
    for (Tensor* t : leaves) analytic.push_back(t->grad);
  }

  // Central differences, perturbing each entry in place.
  double worst = 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor* t = leaves[li];
    for (std::size_t i = 0; i < t->data.size(); ++i) {
      const double saved = t->data[i];
      t->data[i] = saved + eps;
      const double up = eval_loss(f, leaves);
      t->data[i] = saved - eps;
      const double down = eval_loss(f, leaves);
      t->data[i] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double a = analytic[li][i];
      const double err = std::abs(a - fd) / std::max(1.0, std::abs(a));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

double grad_check(const std::function<Graph::Id(Graph&, Graph::Id)>& f, Tensor& x, double eps) {
  Tensor* leaves[1] = {&x};
  return grad_check([&f](Graph& g, const std::vector<Graph::Id>& ids) { return f(g, ids[0]); },
                    leaves, eps);
}

}  // namespace mtmm
