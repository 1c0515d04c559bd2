#include "csqn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "csqn/errors.hpp"

namespace csqn {

using detail::Node;
using detail::NodePtr;

int64_t numel(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << " x ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace detail {

void Node::ensure_grad() {
  if (grad.empty()) grad.assign(values.size(), 0.0);
}

}  // namespace detail

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  for (int d : shape) {
    if (d <= 0)
      throw DimensionError("tensor dimensions must be positive, got " +
                           shape_str(shape));
  }
  if (numel(shape) != static_cast<int64_t>(values.size()))
    throw DimensionError("shape " + shape_str(shape) + " expects " +
                         std::to_string(numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->values = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(numel(shape)), 0.0);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(numel(shape)), value);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{1}, {value}, requires_grad);
}

static const Node& deref(const NodePtr& n, const char* what) {
  if (!n) throw StateError(std::string(what) + ": undefined tensor");
  return *n;
}

const Shape& Tensor::shape() const { return deref(node_, "shape").shape; }
int Tensor::rank() const { return static_cast<int>(shape().size()); }

int Tensor::dim(int axis) const {
  const Shape& s = shape();
  if (axis < 0 || axis >= static_cast<int>(s.size()))
    throw std::domain_error("dim: axis " + std::to_string(axis) +
                            " out of range for " + shape_str(s));
  return s[axis];
}

int64_t Tensor::size() const {
  return static_cast<int64_t>(deref(node_, "size").values.size());
}

const std::vector<double>& Tensor::values() const {
  return deref(node_, "values").values;
}

double Tensor::value(int64_t i) const { return values().at(static_cast<size_t>(i)); }

double Tensor::scalar_value() const {
  if (size() != 1)
    throw DimensionError("scalar_value: tensor has shape " + shape_str(shape()));
  return node_->values[0];
}

bool Tensor::requires_grad() const { return deref(node_, "requires_grad").requires_grad; }
bool Tensor::has_grad() const { return !deref(node_, "has_grad").grad.empty(); }

const std::vector<double>& Tensor::grad() const {
  if (!has_grad())
    throw StateError("grad: no gradient present (call backward first)");
  return node_->grad;
}

void Tensor::zero_grad() {
  deref(node_, "zero_grad");
  node_->grad.assign(node_->values.size(), 0.0);
}

void Tensor::clear_grad() {
  deref(node_, "clear_grad");
  node_->grad.clear();
}

std::vector<double>& Tensor::mutable_values() {
  deref(node_, "mutable_values");
  if (node_->backprop || !node_->parents.empty())
    throw StateError("mutable_values: only leaf tensors may be mutated");
  return node_->values;
}

// Builds an op-result node.  Parent links and the backprop closure are kept
// only when some parent requires a gradient; otherwise the result is a plain
// constant and the inputs can be freed independently.
static Tensor make_op(Shape shape, std::vector<double> values,
                      std::vector<NodePtr> parents,
                      std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->values = std::move(values);
  for (const auto& p : parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return Tensor(std::move(n));
}

static const NodePtr& checked(const Tensor& t, const char* op) {
  if (!t.defined()) throw StateError(std::string(op) + ": undefined tensor");
  return t.node();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const NodePtr& na = checked(a, "matmul");
  const NodePtr& nb = checked(b, "matmul");
  if (na->shape.size() != 2 || nb->shape.size() != 2)
    throw DimensionError("matmul: expects two matrices, got " +
                         shape_str(na->shape) + " and " + shape_str(nb->shape));
  const int m = na->shape[0], k = na->shape[1];
  const int k2 = nb->shape[0], n = nb->shape[1];
  if (k != k2)
    throw DimensionError("matmul: inner dimensions disagree: " +
                         shape_str(na->shape) + " vs " + shape_str(nb->shape));
  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < k; ++l) {
      const double av = na->values[static_cast<size_t>(i) * k + l];
      for (int j = 0; j < n; ++j)
        out[static_cast<size_t>(i) * n + j] += av * nb->values[static_cast<size_t>(l) * n + j];
    }
  return make_op({m, n}, std::move(out), {na, nb}, [m, k, n](Node& self) {
    Node& A = *self.parents[0];
    Node& B = *self.parents[1];
    const std::vector<double>& g = self.grad;
    if (A.requires_grad) {
      A.ensure_grad();  // dA = g * B^T
      for (int i = 0; i < m; ++i)
        for (int l = 0; l < k; ++l) {
          double s = 0.0;
          for (int j = 0; j < n; ++j)
            s += g[static_cast<size_t>(i) * n + j] * B.values[static_cast<size_t>(l) * n + j];
          A.grad[static_cast<size_t>(i) * k + l] += s;
        }
    }
    if (B.requires_grad) {
      B.ensure_grad();  // dB = A^T * g
      for (int l = 0; l < k; ++l)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int i = 0; i < m; ++i)
            s += A.values[static_cast<size_t>(i) * k + l] * g[static_cast<size_t>(i) * n + j];
          B.grad[static_cast<size_t>(l) * n + j] += s;
        }
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  const NodePtr& na = checked(a, "softmax_rows");
  if (na->shape.size() != 2)
    throw DimensionError("softmax_rows: expects a matrix, got " + shape_str(na->shape));
  const int m = na->shape[0], n = na->shape[1];
  std::vector<double> out(na->values.size());
  for (int i = 0; i < m; ++i) {
    const double* src = na->values.data() + static_cast<size_t>(i) * n;
    double* dst = out.data() + static_cast<size_t>(i) * n;
    double mx = src[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, src[j]);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      dst[j] = std::exp(src[j] - mx);
      sum += dst[j];
    }
    for (int j = 0; j < n; ++j) dst[j] /= sum;
  }
  return make_op({m, n}, std::move(out), {na}, [m, n](Node& self) {
    Node& A = *self.parents[0];
    if (!A.requires_grad) return;
    A.ensure_grad();
    for (int i = 0; i < m; ++i) {
      const double* y = self.values.data() + static_cast<size_t>(i) * n;
      const double* g = self.grad.data() + static_cast<size_t>(i) * n;
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += y[j] * g[j];
      double* dx = A.grad.data() + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) dx[j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor elementwise(EwOp op, const Tensor& a, const Tensor& b) {
  const NodePtr& na = checked(a, "elementwise");
  const NodePtr& nb = checked(b, "elementwise");
  if (na->shape != nb->shape)
    throw DimensionError("elementwise: shapes disagree: " + shape_str(na->shape) +
                         " vs " + shape_str(nb->shape));
  std::vector<double> out(na->values.size());
  switch (op) {
    case EwOp::add:
      for (size_t i = 0; i < out.size(); ++i) out[i] = na->values[i] + nb->values[i];
      break;
    case EwOp::sub:
      for (size_t i = 0; i < out.size(); ++i) out[i] = na->values[i] - nb->values[i];
      break;
    case EwOp::mul:
      for (size_t i = 0; i < out.size(); ++i) out[i] = na->values[i] * nb->values[i];
      break;
  }
  return make_op(na->shape, std::move(out), {na, nb}, [op](Node& self) {
    Node& A = *self.parents[0];
    Node& B = *self.parents[1];
    const std::vector<double>& g = self.grad;
    if (A.requires_grad) {
      A.ensure_grad();
      switch (op) {
        case EwOp::add:
        case EwOp::sub:
          for (size_t i = 0; i < g.size(); ++i) A.grad[i] += g[i];
          break;
        case EwOp::mul:
          for (size_t i = 0; i < g.size(); ++i) A.grad[i] += g[i] * B.values[i];
          break;
      }
    }
    if (B.requires_grad) {
      B.ensure_grad();
      switch (op) {
        case EwOp::add:
          for (size_t i = 0; i < g.size(); ++i) B.grad[i] += g[i];
          break;
        case EwOp::sub:
          for (size_t i = 0; i < g.size(); ++i) B.grad[i] -= g[i];
          break;
        case EwOp::mul:
          for (size_t i = 0; i < g.size(); ++i) B.grad[i] += g[i] * A.values[i];
          break;
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(EwOp::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(EwOp::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(EwOp::mul, a, b); }

Tensor concat(std::span<const Tensor> tensors, int axis) {
  if (tensors.empty()) throw DimensionError("concat: needs at least one tensor");
  const NodePtr& first = checked(tensors[0], "concat");
  const int rank = static_cast<int>(first->shape.size());
  if (axis < 0 || axis >= rank)
    throw std::domain_error("concat: axis " + std::to_string(axis) +
                            " out of range for rank " + std::to_string(rank));
  std::vector<NodePtr> parents;
  parents.reserve(tensors.size());
  std::vector<int> extents;  // per-input extent along axis
  int total = 0;
  for (const Tensor& t : tensors) {
    const NodePtr& n = checked(t, "concat");
    if (static_cast<int>(n->shape.size()) != rank)
      throw DimensionError("concat: rank mismatch: " + shape_str(first->shape) +
                           " vs " + shape_str(n->shape));
    for (int d = 0; d < rank; ++d) {
      if (d != axis && n->shape[d] != first->shape[d])
        throw DimensionError("concat: shapes disagree off axis: " +
                             shape_str(first->shape) + " vs " + shape_str(n->shape));
    }
    extents.push_back(n->shape[axis]);
    total += n->shape[axis];
    parents.push_back(n);
  }
  Shape out_shape = first->shape;
  out_shape[axis] = total;

  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= first->shape[d];
  for (int d = axis + 1; d < rank; ++d) inner *= first->shape[d];

  std::vector<double> out(static_cast<size_t>(numel(out_shape)));
  const int64_t out_stride = static_cast<int64_t>(total) * inner;
  int64_t offset = 0;
  for (size_t t = 0; t < parents.size(); ++t) {
    const int64_t block = static_cast<int64_t>(extents[t]) * inner;
    for (int64_t o = 0; o < outer; ++o)
      std::copy_n(parents[t]->values.data() + o * block, block,
                  out.data() + o * out_stride + offset);
    offset += block;
  }
  return make_op(std::move(out_shape), std::move(out), std::move(parents),
                 [extents, outer, inner, out_stride](Node& self) {
                   int64_t offset = 0;
                   for (size_t t = 0; t < self.parents.size(); ++t) {
                     Node& p = *self.parents[t];
                     const int64_t block = static_cast<int64_t>(extents[t]) * inner;
                     if (p.requires_grad) {
                       p.ensure_grad();
                       for (int64_t o = 0; o < outer; ++o) {
                         const double* src = self.grad.data() + o * out_stride + offset;
                         double* dst = p.grad.data() + o * block;
                         for (int64_t i = 0; i < block; ++i) dst[i] += src[i];
                       }
                     }
                     offset += block;
                   }
                 });
}

// Decomposes shape around `axis` as outer x r x inner for the reductions.
static void reduce_layout(const Shape& shape, int axis, int64_t& outer, int64_t& r,
                          int64_t& inner) {
  const int rank = static_cast<int>(shape.size());
  if (rank != 1 && rank != 2)
    throw DimensionError("reduce: expects rank 1 or 2, got " + shape_str(shape));
  if (axis < 0 || axis >= rank)
    throw std::domain_error("reduce: axis " + std::to_string(axis) +
                            " out of range for " + shape_str(shape));
  outer = 1;
  inner = 1;
  for (int d = 0; d < axis; ++d) outer *= shape[d];
  for (int d = axis + 1; d < rank; ++d) inner *= shape[d];
  r = shape[axis];
}

static Shape reduced_shape(const Shape& shape, int axis) {
  Shape out;
  for (int d = 0; d < static_cast<int>(shape.size()); ++d)
    if (d != axis) out.push_back(shape[d]);
  if (out.empty()) out.push_back(1);  // scalar
  return out;
}

Tensor reduce(Reduce kind, const Tensor& a, int axis) {
  switch (kind) {
    case Reduce::max:
      return reduce_max(a, axis);
    case Reduce::mean:
      return reduce_mean(a, axis);
  }
  throw std::domain_error("reduce: unknown kind");
}

Tensor reduce_max(const Tensor& a, int axis) {
  const NodePtr& na = checked(a, "reduce_max");
  int64_t outer, r, inner;
  reduce_layout(na->shape, axis, outer, r, inner);
  const int64_t out_n = outer * inner;
  std::vector<double> out(static_cast<size_t>(out_n));
  std::vector<int64_t> argmax(static_cast<size_t>(out_n));
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t i = 0; i < inner; ++i) {
      int64_t best = o * r * inner + i;
      double bv = na->values[static_cast<size_t>(best)];
      for (int64_t k = 1; k < r; ++k) {
        const int64_t idx = (o * r + k) * inner + i;
        const double v = na->values[static_cast<size_t>(idx)];
        if (v > bv) {  // strict: first index wins ties
          bv = v;
          best = idx;
        }
      }
      out[static_cast<size_t>(o * inner + i)] = bv;
      argmax[static_cast<size_t>(o * inner + i)] = best;
    }
  return make_op(reduced_shape(na->shape, axis), std::move(out), {na},
                 [argmax](Node& self) {
                   Node& A = *self.parents[0];
                   if (!A.requires_grad) return;
                   A.ensure_grad();
                   for (size_t i = 0; i < argmax.size(); ++i)
                     A.grad[static_cast<size_t>(argmax[i])] += self.grad[i];
                 });
}

static Tensor reduce_linear(const Tensor& a, int axis, bool mean) {
  const char* name = mean ? "reduce_mean" : "reduce_sum";
  const NodePtr& na = checked(a, name);
  int64_t outer, r, inner;
  reduce_layout(na->shape, axis, outer, r, inner);
  const double w = mean ? 1.0 / static_cast<double>(r) : 1.0;
  std::vector<double> out(static_cast<size_t>(outer * inner), 0.0);
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t k = 0; k < r; ++k)
      for (int64_t i = 0; i < inner; ++i)
        out[static_cast<size_t>(o * inner + i)] +=
            na->values[static_cast<size_t>((o * r + k) * inner + i)];
  if (mean)
    for (double& v : out) v *= w;
  return make_op(reduced_shape(na->shape, axis), std::move(out), {na},
                 [outer, r, inner, w](Node& self) {
                   Node& A = *self.parents[0];
                   if (!A.requires_grad) return;
                   A.ensure_grad();
                   for (int64_t o = 0; o < outer; ++o)
                     for (int64_t k = 0; k < r; ++k)
                       for (int64_t i = 0; i < inner; ++i)
                         A.grad[static_cast<size_t>((o * r + k) * inner + i)] +=
                             w * self.grad[static_cast<size_t>(o * inner + i)];
                 });
}

Tensor reduce_mean(const Tensor& a, int axis) { return reduce_linear(a, axis, true); }
Tensor reduce_sum(const Tensor& a, int axis) { return reduce_linear(a, axis, false); }

Tensor transpose(const Tensor& a) {
  const NodePtr& na = checked(a, "transpose");
  if (na->shape.size() != 2)
    throw DimensionError("transpose: expects a matrix, got " + shape_str(na->shape));
  const int m = na->shape[0], n = na->shape[1];
  std::vector<double> out(na->values.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<size_t>(j) * m + i] = na->values[static_cast<size_t>(i) * n + j];
  return make_op({n, m}, std::move(out), {na}, [m, n](Node& self) {
    Node& A = *self.parents[0];
    if (!A.requires_grad) return;
    A.ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        A.grad[static_cast<size_t>(i) * n + j] += self.grad[static_cast<size_t>(j) * m + i];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  const NodePtr& na = checked(a, "reshape");
  for (int d : shape)
    if (d <= 0)
      throw DimensionError("reshape: dimensions must be positive, got " + shape_str(shape));
  if (numel(shape) != static_cast<int64_t>(na->values.size()))
    throw DimensionError("reshape: " + shape_str(na->shape) + " has " +
                         std::to_string(na->values.size()) + " values, target " +
                         shape_str(shape));
  std::vector<double> out = na->values;
  return make_op(std::move(shape), std::move(out), {na}, [](Node& self) {
    Node& A = *self.parents[0];
    if (!A.requires_grad) return;
    A.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) A.grad[i] += self.grad[i];
  });
}

Tensor row(const Tensor& a, int i) {
  const NodePtr& na = checked(a, "row");
  if (na->shape.size() != 2)
    throw DimensionError("row: expects a matrix, got " + shape_str(na->shape));
  const int m = na->shape[0], n = na->shape[1];
  if (i < 0 || i >= m)
    throw std::out_of_range("row: index " + std::to_string(i) + " out of range for " +
                            shape_str(na->shape));
  std::vector<double> out(na->values.begin() + static_cast<int64_t>(i) * n,
                          na->values.begin() + static_cast<int64_t>(i + 1) * n);
  return make_op({n}, std::move(out), {na}, [i, n](Node& self) {
    Node& A = *self.parents[0];
    if (!A.requires_grad) return;
    A.ensure_grad();
    for (int j = 0; j < n; ++j)
      A.grad[static_cast<size_t>(i) * n + j] += self.grad[static_cast<size_t>(j)];
  });
}

Tensor at(const Tensor& a, int64_t i) {
  const NodePtr& na = checked(a, "at");
  if (na->shape.size() != 1)
    throw DimensionError("at: expects a vector, got " + shape_str(na->shape));
  if (i < 0 || i >= static_cast<int64_t>(na->values.size()))
    throw std::out_of_range("at: index " + std::to_string(i) + " out of range for " +
                            shape_str(na->shape));
  return make_op({1}, {na->values[static_cast<size_t>(i)]}, {na}, [i](Node& self) {
    Node& A = *self.parents[0];
    if (!A.requires_grad) return;
    A.ensure_grad();
    A.grad[static_cast<size_t>(i)] += self.grad[0];
  });
}

// Unary elementwise helper: fwd computes y from x, bwd returns dy/dx from (x, y).
template <typename Fwd, typename Dfn>
static Tensor unary_op(const Tensor& a, const char* name, Fwd fwd, Dfn dfn) {
  const NodePtr& na = checked(a, name);
  std::vector<double> out(na->values.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(na->values[i]);
  return make_op(na->shape, std::move(out), {na}, [dfn](Node& self) {
    Node& A = *self.parents[0];
    if (!A.requires_grad) return;
    A.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      A.grad[i] += self.grad[i] * dfn(A.values[i], self.values[i]);
  });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      a, "sigmoid",
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary_op(a, "tanh", [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary_op(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
                  [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary_op(a, "exp", [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  const NodePtr& na = checked(a, "log");
  for (double v : na->values)
    if (!(v > 0.0))
      throw std::domain_error("log: non-positive input " + std::to_string(v));
  return unary_op(a, "log", [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Tensor scale(const Tensor& a, double c) {
  return unary_op(a, "scale", [c](double x) { return c * x; },
                  [c](double, double) { return c; });
}

Tensor add_const(const Tensor& a, double c) {
  return unary_op(a, "add_const", [c](double x) { return x + c; },
                  [](double, double) { return 1.0; });
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw DimensionError("stack_rows: needs at least one row");
  std::vector<Tensor> reshaped;
  reshaped.reserve(rows.size());
  for (const Tensor& r : rows) {
    if (r.rank() != 1)
      throw DimensionError("stack_rows: expects vectors, got " + shape_str(r.shape()));
    reshaped.push_back(reshape(r, {1, r.dim(0)}));
  }
  return concat(reshaped, 0);
}

void backward(const Tensor& loss) {
  const NodePtr& root = checked(loss, "backward");
  if (root->values.size() != 1)
    throw std::domain_error("backward: loss must be scalar, got " +
                            shape_str(root->shape));
  if (!root->requires_grad) return;  // nothing trainable reachable

  // Iterative post-order over the grad-requiring subgraph.  `order` shares
  // ownership so records stay alive while their parent links are released.
  std::vector<NodePtr> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    NodePtr node;
    size_t next;
  };
  std::vector<Frame> stack;
  if (root->consumed)
    throw StateError("backward: operation records already consumed; rerun the forward pass");
  visited.insert(root.get());
  stack.push_back({root, 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.node->parents.size()) {
      const NodePtr& p = f.node->parents[f.next++];
      if (p->requires_grad && !visited.count(p.get())) {
        if (p->consumed)
          throw StateError(
              "backward: operation records already consumed; rerun the forward pass");
        visited.insert(p.get());
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = it->get();
    if (!n->backprop) continue;
    n->backprop(*n);
    n->consumed = true;
    // Release the record; grads and values stay readable.
    n->backprop = nullptr;
    n->parents.clear();
  }
}

}  // namespace csqn
