#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace csqn {

using Shape = std::vector<int>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until backward touches this node
  bool requires_grad = false;
  bool consumed = false;  // a backward pass already ran through this record
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // accumulates this->grad into parents

  void ensure_grad();
};

using NodePtr = std::shared_ptr<Node>;

}  // namespace detail

/// Dense double-precision array in row-major order with a recorded operation
/// history for reverse-mode differentiation.  Tensor is a shared handle:
/// copies alias the same buffer and the same record.  All operations are
/// single-threaded and deterministic.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);
  explicit Tensor(detail::NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const;
  int dim(int axis) const;
  int64_t size() const;

  const std::vector<double>& values() const;
  double value(int64_t i) const;
  double scalar_value() const;  // requires size() == 1

  bool requires_grad() const;
  bool has_grad() const;
  const std::vector<double>& grad() const;  // StateError when absent
  void zero_grad();                         // allocates and zeroes the buffer
  void clear_grad();                        // drops the buffer

  /// In-place value mutation, leaf tensors only (optimizer updates and
  /// gradient-check perturbations).
  std::vector<double>& mutable_values();

  const detail::NodePtr& node() const { return node_; }

 private:
  detail::NodePtr node_;
};

enum class EwOp { add, sub, mul };
enum class Reduce { max, mean };

Tensor matmul(const Tensor& a, const Tensor& b);  // [m x k] * [k x n]
Tensor softmax_rows(const Tensor& a);             // stabilized, per row
Tensor elementwise(EwOp op, const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

/// Concatenates along `axis`; all other extents must agree.
Tensor concat(std::span<const Tensor> tensors, int axis);

/// Reduces `axis` away (2-D -> 1-D, 1-D -> scalar).  max routes gradient to
/// the first maximal element of each slice; mean distributes 1/n.
Tensor reduce(Reduce kind, const Tensor& a, int axis);
Tensor reduce_max(const Tensor& a, int axis);
Tensor reduce_mean(const Tensor& a, int axis);
Tensor reduce_sum(const Tensor& a, int axis);

/// Reverse-mode accumulation from a scalar loss.  Every tensor the loss
/// depends on that requires a gradient receives one, summed into whatever
/// gradient it already holds.  The traversed records are consumed; a second
/// backward through any of them throws StateError.  A loss with no trainable
/// ancestors is a no-op.
void backward(const Tensor& loss);

Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor row(const Tensor& a, int i);     // 2-D -> 1-D copy of row i
Tensor at(const Tensor& a, int64_t i);  // 1-D -> scalar element
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);  // domain_error on non-positive entries
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);

/// Stacks 1-D tensors of equal width into a [k x d] matrix.
Tensor stack_rows(std::span<const Tensor> rows);

}  // namespace csqn
