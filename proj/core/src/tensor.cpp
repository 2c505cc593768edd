#include "mjo/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

namespace mjo::ad {

namespace {
std::atomic<std::uint64_t> g_next_id{1};
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) {
    if (d <= 0) throw ModelError("tensor shape has non-positive extent");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

void Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size())
    throw ModelError("tensor: value count does not match shape " + shape_str(shape));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  n->id = g_next_id.fetch_add(1);
  return wrap(std::move(n));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return from_values(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return from_values(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value) { return from_values({1}, {value}); }

std::span<double> Tensor::values_mut() {
  if (!node_->parents.empty())
    throw ModelError("tensor: mutating a non-leaf value would corrupt the graph");
  return node_->value;
}

std::span<const double> Tensor::grad() const {
  if (node_->grad.empty()) throw ModelError("tensor: gradient not computed");
  return node_->grad;
}

std::span<double> Tensor::grad_mut() {
  node_->ensure_grad();
  return node_->grad;
}

double Tensor::item() const {
  if (numel() != 1) throw ModelError("tensor: item() on non-scalar of shape " + shape_str(shape()));
  return node_->value[0];
}

void Tensor::zero_grad() const {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const {
  if (numel() != 1) throw ModelError("backward: loss must be scalar, got " + shape_str(shape()));
  if (node_->backward_ran)
    throw ModelError("backward: already ran through this node; build a fresh graph or reset");
  node_->backward_ran = true;

  // Reachable subgraph, processed in strictly decreasing creation order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{node_.get()};
  seen.insert(node_.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(), [](Node* a, Node* b) { return a->id > b->id; });

  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (Node* n : order) {
    if (n->backprop && n->requires_grad && !n->grad.empty()) n->backprop(*n);
  }
}

Tensor make_op(const char* op, Shape shape, std::vector<double> value,
               std::vector<std::shared_ptr<Node>> parents, std::function<void(Node&)> backprop) {
  if (shape_numel(shape) != value.size()) throw ModelError(std::string("make_op ") + op + ": bad shape");
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->op = op;
  n->parents = std::move(parents);
  n->backprop = std::move(backprop);
  n->requires_grad = false;
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  n->id = g_next_id.fetch_add(1);
  // The gradient buffer for ops with no differentiable parents is never
  // consumed; drop the callback to skip work.
  if (!n->requires_grad) n->backprop = nullptr;
  return Tensor::wrap(std::move(n));
}

namespace {
void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ModelError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

void accumulate(Node& parent, std::span<const double> g) {
  parent.ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) parent.grad[i] += g[i];
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op("add", a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    if (self.parents[0]->requires_grad) accumulate(*self.parents[0], self.grad);
    if (self.parents[1]->requires_grad) accumulate(*self.parents[1], self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_op("sub", a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    if (self.parents[0]->requires_grad) accumulate(*self.parents[0], self.grad);
    if (self.parents[1]->requires_grad) {
      Node& p = *self.parents[1];
      p.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_op("mul", a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.numel());
  auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
  return make_op("scale", a.shape(), std::move(out), {a.node()}, [s](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i] * s;
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  return make_op("relu", a.shape(), std::move(out), {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (p.value[i] > 0.0) p.grad[i] += self.grad[i];
  });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-av[i]));
  return make_op("sigmoid", a.shape(), std::move(out), {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.value[i];
      p.grad[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor tanh_op(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto av = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  return make_op("tanh", a.shape(), std::move(out), {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.value[i];
      p.grad[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double x : a.values()) s += x;
  return make_op("sum", {1}, {s}, {a.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    const double g = self.grad[0];
    for (double& pg : p.grad) pg += g;
  });
}

Tensor mean_all(const Tensor& a) {
  double s = 0.0;
  for (double x : a.values()) s += x;
  const double inv = 1.0 / static_cast<double>(a.numel());
  return make_op("mean", {1}, {s * inv}, {a.node()}, [inv](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    const double g = self.grad[0] * inv;
    for (double& pg : p.grad) pg += g;
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mse");
  auto av = a.values(), bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    s += d * d;
  }
  const double inv = 1.0 / static_cast<double>(a.numel());
  return make_op("mse", {1}, {s * inv}, {a.node(), b.node()}, [inv](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double g2 = 2.0 * self.grad[0] * inv;
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < pa.value.size(); ++i)
        pa.grad[i] += g2 * (pa.value[i] - pb.value[i]);
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < pb.value.size(); ++i)
        pb.grad[i] -= g2 * (pa.value[i] - pb.value[i]);
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
    throw ModelError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  const int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  auto av = a.values(), bv = b.values();
  for (int i = 0; i < m; ++i)
    for (int kk = 0; kk < k; ++kk) {
      const double aik = av[static_cast<std::size_t>(i) * k + kk];
      if (aik == 0.0) continue;
      const double* brow = &bv[static_cast<std::size_t>(kk) * n];
      double* orow = &out[static_cast<std::size_t>(i) * n];
      for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  return make_op("matmul", {m, n}, std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      // dA = dC * B^T
      for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
          const double* grow = &self.grad[static_cast<std::size_t>(i) * n];
          const double* brow = &pb.value[static_cast<std::size_t>(kk) * n];
          double s = 0.0;
          for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
          pa.grad[static_cast<std::size_t>(i) * k + kk] += s;
        }
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      // dB = A^T * dC
      for (int kk = 0; kk < k; ++kk)
        for (int i = 0; i < m; ++i) {
          const double aik = pa.value[static_cast<std::size_t>(i) * k + kk];
          if (aik == 0.0) continue;
          const double* grow = &self.grad[static_cast<std::size_t>(i) * n];
          double* brow = &pb.grad[static_cast<std::size_t>(kk) * n];
          for (int j = 0; j < n; ++j) brow[j] += aik * grow[j];
        }
    }
  });
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  if (m.shape().size() != 2 || v.shape().size() != 1 || m.shape()[1] != v.shape()[0])
    throw ModelError("add_rowvec: incompatible shapes");
  const int rows = m.shape()[0], cols = m.shape()[1];
  std::vector<double> out(m.numel());
  auto mv = m.values(), vv = v.values();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      out[static_cast<std::size_t>(i) * cols + j] = mv[static_cast<std::size_t>(i) * cols + j] + vv[j];
  return make_op("add_rowvec", m.shape(), std::move(out), {m.node(), v.node()},
                 [rows, cols](Node& self) {
                   Node& pm = *self.parents[0];
                   Node& pv = *self.parents[1];
                   if (pm.requires_grad) accumulate(pm, self.grad);
                   if (pv.requires_grad) {
                     pv.ensure_grad();
                     for (int i = 0; i < rows; ++i)
                       for (int j = 0; j < cols; ++j)
                         pv.grad[j] += self.grad[static_cast<std::size_t>(i) * cols + j];
                   }
                 });
}

Tensor slice_cols(const Tensor& m, int begin, int end) {
  if (m.shape().size() != 2 || begin < 0 || end > m.shape()[1] || begin >= end)
    throw ModelError("slice_cols: bad range");
  const int rows = m.shape()[0], cols = m.shape()[1], width = end - begin;
  std::vector<double> out(static_cast<std::size_t>(rows) * width);
  auto mv = m.values();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < width; ++j)
      out[static_cast<std::size_t>(i) * width + j] =
          mv[static_cast<std::size_t>(i) * cols + begin + j];
  return make_op("slice_cols", {rows, width}, std::move(out), {m.node()},
                 [rows, cols, begin, width](Node& self) {
                   Node& p = *self.parents[0];
                   p.ensure_grad();
                   for (int i = 0; i < rows; ++i)
                     for (int j = 0; j < width; ++j)
                       p.grad[static_cast<std::size_t>(i) * cols + begin + j] +=
                           self.grad[static_cast<std::size_t>(i) * width + j];
                 });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[0] != b.shape()[0])
    throw ModelError("concat_cols: incompatible shapes");
  const int rows = a.shape()[0], p = a.shape()[1], q = b.shape()[1];
  std::vector<double> out(static_cast<std::size_t>(rows) * (p + q));
  auto av = a.values(), bv = b.values();
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < p; ++j)
      out[static_cast<std::size_t>(i) * (p + q) + j] = av[static_cast<std::size_t>(i) * p + j];
    for (int j = 0; j < q; ++j)
      out[static_cast<std::size_t>(i) * (p + q) + p + j] = bv[static_cast<std::size_t>(i) * q + j];
  }
  return make_op("concat_cols", {rows, p + q}, std::move(out), {a.node(), b.node()},
                 [rows, p, q](Node& self) {
                   Node& pa = *self.parents[0];
                   Node& pb = *self.parents[1];
                   if (pa.requires_grad) {
                     pa.ensure_grad();
                     for (int i = 0; i < rows; ++i)
                       for (int j = 0; j < p; ++j)
                         pa.grad[static_cast<std::size_t>(i) * p + j] +=
                             self.grad[static_cast<std::size_t>(i) * (p + q) + j];
                   }
                   if (pb.requires_grad) {
                     pb.ensure_grad();
                     for (int i = 0; i < rows; ++i)
                       for (int j = 0; j < q; ++j)
                         pb.grad[static_cast<std::size_t>(i) * q + j] +=
                             self.grad[static_cast<std::size_t>(i) * (p + q) + p + j];
                   }
                 });
}

Tensor select_step(const Tensor& seq, int t) {
  if (seq.shape().size() != 3 || t < 0 || t >= seq.shape()[1])
    throw ModelError("select_step: bad index");
  const int n = seq.shape()[0], l = seq.shape()[1], d = seq.shape()[2];
  std::vector<double> out(static_cast<std::size_t>(n) * d);
  auto sv = seq.values();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      out[static_cast<std::size_t>(i) * d + j] =
          sv[(static_cast<std::size_t>(i) * l + t) * d + j];
  return make_op("select_step", {n, d}, std::move(out), {seq.node()}, [n, l, d, t](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j)
        p.grad[(static_cast<std::size_t>(i) * l + t) * d + j] +=
            self.grad[static_cast<std::size_t>(i) * d + j];
  });
}

Tensor stack_steps(const std::vector<Tensor>& steps) {
  if (steps.empty()) throw ModelError("stack_steps: no steps");
  const int n = steps[0].shape()[0], d = steps[0].shape()[1];
  const int l = static_cast<int>(steps.size());
  std::vector<double> out(static_cast<std::size_t>(n) * l * d);
  std::vector<std::shared_ptr<Node>> parents;
  for (int t = 0; t < l; ++t) {
    if (steps[t].shape() != Shape{n, d}) throw ModelError("stack_steps: inconsistent step shapes");
    auto sv = steps[t].values();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j)
        out[(static_cast<std::size_t>(i) * l + t) * d + j] = sv[static_cast<std::size_t>(i) * d + j];
    parents.push_back(steps[t].node());
  }
  return make_op("stack_steps", {n, l, d}, std::move(out), std::move(parents),
                 [n, l, d](Node& self) {
                   for (int t = 0; t < l; ++t) {
                     Node& p = *self.parents[t];
                     if (!p.requires_grad) continue;
                     p.ensure_grad();
                     for (int i = 0; i < n; ++i)
                       for (int j = 0; j < d; ++j)
                         p.grad[static_cast<std::size_t>(i) * d + j] +=
                             self.grad[(static_cast<std::size_t>(i) * l + t) * d + j];
                   }
                 });
}

Tensor linear_seq(const Tensor& seq, const Tensor& matrix) {
  if (seq.shape().size() != 3 || matrix.shape().size() != 2 || seq.shape()[2] != matrix.shape()[0])
    throw ModelError("linear_seq: incompatible shapes");
  const int n = seq.shape()[0], l = seq.shape()[1], f = seq.shape()[2], g = matrix.shape()[1];
  std::vector<double> out(static_cast<std::size_t>(n) * l * g, 0.0);
  auto sv = seq.values(), mv = matrix.values();
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < l; ++t) {
      const double* row = &sv[(static_cast<std::size_t>(i) * l + t) * f];
      double* orow = &out[(static_cast<std::size_t>(i) * l + t) * g];
      for (int ff = 0; ff < f; ++ff) {
        const double x = row[ff];
        if (x == 0.0) continue;
        const double* mrow = &mv[static_cast<std::size_t>(ff) * g];
        for (int gg = 0; gg < g; ++gg) orow[gg] += x * mrow[gg];
      }
    }
  return make_op("linear_seq", {n, l, g}, std::move(out), {seq.node(), matrix.node()},
                 [n, l, f, g](Node& self) {
                   Node& ps = *self.parents[0];
                   Node& pm = *self.parents[1];
                   if (ps.requires_grad) {
                     ps.ensure_grad();
                     for (int i = 0; i < n; ++i)
                       for (int t = 0; t < l; ++t) {
                         const double* grow = &self.grad[(static_cast<std::size_t>(i) * l + t) * g];
                         double* srow = &ps.grad[(static_cast<std::size_t>(i) * l + t) * f];
                         for (int ff = 0; ff < f; ++ff) {
                           const double* mrow = &pm.value[static_cast<std::size_t>(ff) * g];
                           double s = 0.0;
                           for (int gg = 0; gg < g; ++gg) s += grow[gg] * mrow[gg];
                           srow[ff] += s;
                         }
                       }
                   }
                   if (pm.requires_grad) {
                     pm.ensure_grad();
                     for (int i = 0; i < n; ++i)
                       for (int t = 0; t < l; ++t) {
                         const double* grow = &self.grad[(static_cast<std::size_t>(i) * l + t) * g];
                         const double* srow = &ps.value[(static_cast<std::size_t>(i) * l + t) * f];
                         for (int ff = 0; ff < f; ++ff) {
                           double* mrow = &pm.grad[static_cast<std::size_t>(ff) * g];
                           const double x = srow[ff];
                           if (x == 0.0) continue;
                           for (int gg = 0; gg < g; ++gg) mrow[gg] += x * grow[gg];
                         }
                       }
                   }
                 });
}

Tensor bivariate_cor_loss(const Tensor& refined, const Tensor& observed, int* degenerate_leads) {
  check_same_shape(refined, observed, "bivariate_cor_loss");
  if (refined.shape().size() != 3 || refined.shape()[2] != 2)
    throw ModelError("bivariate_cor_loss: expected (N, L, 2) series");
  const int n = refined.shape()[0], l = refined.shape()[1];
  if (n < 2) throw ModelError("bivariate_cor_loss: batch size must be >= 2");

  auto bv = refined.values(), av = observed.values();
  auto idx = [l](int i, int t, int c) { return (static_cast<std::size_t>(i) * l + t) * 2 + c; };

  std::vector<double> s_ab(l, 0.0), s_aa(l, 0.0), s_bb(l, 0.0);
  for (int t = 0; t < l; ++t) {
    for (int i = 0; i < n; ++i) {
      const double a1 = av[idx(i, t, 0)], a2 = av[idx(i, t, 1)];
      const double b1 = bv[idx(i, t, 0)], b2 = bv[idx(i, t, 1)];
      s_ab[t] += a1 * b1 + a2 * b2;
      s_aa[t] += a1 * a1 + a2 * a2;
      s_bb[t] += b1 * b1 + b2 * b2;
    }
  }
  int degenerate = 0;
  double loss = 0.0;
  std::vector<double> cor(l, 0.0);
  std::vector<bool> ok(l, false);
  for (int t = 0; t < l; ++t) {
    const double denom = std::sqrt(s_aa[t]) * std::sqrt(s_bb[t]);
    if (denom > 0.0) {
      cor[t] = s_ab[t] / denom;
      ok[t] = true;
      loss -= cor[t];
    } else {
      ++degenerate;
    }
  }
  loss /= static_cast<double>(l);
  if (degenerate_leads) *degenerate_leads = degenerate;

  return make_op(
      "bivariate_cor_loss", {1}, {loss}, {refined.node(), observed.node()},
      [n, l, idx, s_ab = std::move(s_ab), s_aa = std::move(s_aa), s_bb = std::move(s_bb),
       cor = std::move(cor), ok = std::move(ok)](Node& self) {
        Node& pb = *self.parents[0];
        const Node& pa = *self.parents[1];
        if (!pb.requires_grad) return;
        pb.ensure_grad();
        const double g = self.grad[0];
        for (int t = 0; t < l; ++t) {
          if (!ok[t]) continue;
          const double denom = std::sqrt(s_aa[t]) * std::sqrt(s_bb[t]);
          // d(-cor_t / L)/db = -(a/denom - cor_t * b/s_bb) / L
          const double f = -g / static_cast<double>(l);
          for (int i = 0; i < n; ++i)
            for (int c = 0; c < 2; ++c) {
              const double a = pa.value[idx(i, t, c)];
              const double b = pb.value[idx(i, t, c)];
              pb.grad[idx(i, t, c)] += f * (a / denom - cor[t] * b / s_bb[t]);
            }
        }
      });
}

}  // namespace mjo::ad
