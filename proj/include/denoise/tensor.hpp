#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "denoise/graph.hpp"

namespace denoise::ad {

/// Floor for norms and log arguments; also the sigmoid clamp margin.
inline constexpr double kEps = 1e-8;

namespace detail {

struct Node {
  Matrix value;
  std::optional<Matrix> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads self.grad and accumulates into parents that require grad.
  std::function<void(Node& self)> backward_fn;
};

}  // namespace detail

/// Dense 2-D array handle. Copies share the underlying node, so a parameter
/// passed into several expressions accumulates gradient from all of them.
class Tensor {
 public:
  Tensor();

  static Tensor constant(Matrix value);
  static Tensor parameter(Matrix value);
  static Tensor scalar(double v);

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  const Matrix& value() const { return node_->value; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->is_leaf; }
  bool has_grad() const { return node_->grad.has_value(); }
  const Matrix& grad() const;
  void zero_grad() const { node_->grad.reset(); }

  /// Writable storage of a leaf; used by optimizers and finite differencing.
  Matrix& leaf_value();

  /// Same values, no tape history.
  Tensor detach() const { return constant(node_->value); }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  // Internal: used by op implementations.
  static Tensor from_node(std::shared_ptr<detail::Node> node);
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Arithmetic. `add`/`sub` broadcast b when it is 1×cols or rows×1.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise, same shape
Tensor scale(const Tensor& a, double s);
Tensor neg(const Tensor& a);

// Reductions.
Tensor rowsum(const Tensor& a);
Tensor rowmean(const Tensor& a);
Tensor rowstd(const Tensor& a);  // population std per row
Tensor colmean(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// Elementwise nonlinearities.
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);  // log(max(x, kEps))
Tensor clamp(const Tensor& a, double lo, double hi);

// Row-wise ops.
Tensor softmax_rows(const Tensor& a);
Tensor l2_normalize_rows(const Tensor& a);  // x / max(|x|, kEps)
Tensor cosine_rows(const Tensor& a, const Tensor& b);  // rows×1
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> idx);
Tensor concat_rows(std::span<const Tensor> parts);

/// Enumerates the primitive kinds for table-driven dispatch (grad checks,
/// property tests). Binary kinds consume operands[0] and operands[1].
enum class OpKind {
  Matmul,
  Transpose,
  Add,
  Scale,
  RowSum,
  RowMean,
  RowStd,
  Sigmoid,
  Relu,
  Exp,
  Log,
  SoftmaxRows,
  L2NormalizeRows,
  CosineRows,
  GatherRows,
  ConcatRows,
};

inline constexpr OpKind kAllOpKinds[] = {
    OpKind::Matmul,  OpKind::Transpose, OpKind::Add, OpKind::Scale,       OpKind::RowSum,
    OpKind::RowMean, OpKind::RowStd,    OpKind::Sigmoid, OpKind::Relu,    OpKind::Exp,
    OpKind::Log,     OpKind::SoftmaxRows, OpKind::L2NormalizeRows, OpKind::CosineRows,
    OpKind::GatherRows, OpKind::ConcatRows,
};

const char* to_string(OpKind kind);

struct OpArgs {
  double scalar = 1.0;
  std::vector<std::size_t> indices;
};

Tensor forward(OpKind kind, std::span<const Tensor> operands, const OpArgs& args = {});

/// Reverse pass from a 1×1 loss. Leaf gradients accumulate across calls
/// until zero_grad(); intermediate gradients are rebuilt every call.
void backward(const Tensor& loss);

/// Max over entries of |analytic - central difference| / max(1, |central difference|).
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Matrix& x, double h = 1e-5);

}  // namespace denoise::ad
