#include "denoise/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "denoise/errors.hpp"

namespace denoise::ad {

using detail::Node;

namespace {

std::string shape_str(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void check_finite(const Matrix& m, const char* op) {
  if (!m.allFinite()) fail(ErrorCode::NonFiniteResult, std::string(op) + " produced a non-finite value");
}

void accumulate(Node& n, const Matrix& g) {
  if (!n.requires_grad) return;
  if (n.grad) {
    *n.grad += g;
  } else {
    n.grad = g;
  }
}

Tensor make_result(Matrix value, const char* op, std::initializer_list<const Tensor*> inputs,
                   std::function<void(Node&)> backward_fn) {
  check_finite(value, op);
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->is_leaf = false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    for (const Tensor* t : inputs) node->parents.push_back(t->node());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor::from_node(std::move(node));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorCode::ShapeMismatch, std::string(op) + ": " + shape_str(a.value()) + " vs " + shape_str(b.value()));
  }
}

enum class Broadcast { None, Row, Col };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::None;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::Col;
  fail(ErrorCode::ShapeMismatch, std::string(op) + ": " + shape_str(a.value()) + " vs " + shape_str(b.value()));
}

Matrix broadcast_to(const Matrix& b, Broadcast kind, Eigen::Index rows, Eigen::Index cols) {
  switch (kind) {
    case Broadcast::Row: return b.replicate(rows, 1);
    case Broadcast::Col: return b.replicate(1, cols);
    case Broadcast::None: break;
  }
  return b;
}

Matrix reduce_to(const Matrix& g, Broadcast kind) {
  switch (kind) {
    case Broadcast::Row: return g.colwise().sum();
    case Broadcast::Col: return g.rowwise().sum();
    case Broadcast::None: break;
  }
  return g;
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor::Tensor() : node_(std::make_shared<Node>()) {}

Tensor Tensor::constant(Matrix value) {
  check_finite(value, "constant");
  Tensor t;
  t.node_->value = std::move(value);
  return t;
}

Tensor Tensor::parameter(Matrix value) {
  check_finite(value, "parameter");
  Tensor t;
  t.node_->value = std::move(value);
  t.node_->requires_grad = true;
  return t;
}

Tensor Tensor::scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return constant(std::move(m));
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) fail(ErrorCode::NotScalar, "item() on " + shape_str(value()));
  return node_->value(0, 0);
}

const Matrix& Tensor::grad() const {
  if (!node_->grad) fail(ErrorCode::MissingGradient, "tensor has no accumulated gradient");
  return *node_->grad;
}

Matrix& Tensor::leaf_value() {
  if (!node_->is_leaf) fail(ErrorCode::ShapeMismatch, "leaf_value() on a computed tensor");
  return node_->value;
}

Tensor Tensor::from_node(std::shared_ptr<Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorCode::ShapeMismatch, "matmul: " + shape_str(a.value()) + " * " + shape_str(b.value()));
  }
  Matrix v = a.value() * b.value();
  return make_result(std::move(v), "matmul", {&a, &b}, [](Node& self) {
    const auto& pa = *self.parents[0];
    const auto& pb = *self.parents[1];
    if (pa.requires_grad) accumulate(*self.parents[0], *self.grad * pb.value.transpose());
    if (pb.requires_grad) accumulate(*self.parents[1], pa.value.transpose() * *self.grad);
  });
}

Tensor transpose(const Tensor& a) {
  Matrix v = a.value().transpose();
  return make_result(std::move(v), "transpose", {&a},
                     [](Node& self) { accumulate(*self.parents[0], self.grad->transpose()); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const auto kind = broadcast_kind(a, b, "add");
  Matrix v = a.value() + broadcast_to(b.value(), kind, a.rows(), a.cols());
  return make_result(std::move(v), "add", {&a, &b}, [kind](Node& self) {
    accumulate(*self.parents[0], *self.grad);
    if (self.parents[1]->requires_grad) accumulate(*self.parents[1], reduce_to(*self.grad, kind));
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const auto kind = broadcast_kind(a, b, "sub");
  Matrix v = a.value() - broadcast_to(b.value(), kind, a.rows(), a.cols());
  return make_result(std::move(v), "sub", {&a, &b}, [kind](Node& self) {
    accumulate(*self.parents[0], *self.grad);
    if (self.parents[1]->requires_grad) accumulate(*self.parents[1], -reduce_to(*self.grad, kind));
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Matrix v = a.value().cwiseProduct(b.value());
  return make_result(std::move(v), "mul", {&a, &b}, [](Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) accumulate(pa, self.grad->cwiseProduct(pb.value));
    if (pb.requires_grad) accumulate(pb, self.grad->cwiseProduct(pa.value));
  });
}

Tensor scale(const Tensor& a, double s) {
  Matrix v = a.value() * s;
  return make_result(std::move(v), "scale", {&a}, [s](Node& self) { accumulate(*self.parents[0], *self.grad * s); });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor rowsum(const Tensor& a) {
  Matrix v = a.value().rowwise().sum();
  const auto cols = a.cols();
  return make_result(std::move(v), "rowsum", {&a},
                     [cols](Node& self) { accumulate(*self.parents[0], self.grad->replicate(1, cols)); });
}

Tensor rowmean(const Tensor& a) {
  if (a.cols() == 0) fail(ErrorCode::ShapeMismatch, "rowmean of zero columns");
  const auto cols = a.cols();
  Matrix v = a.value().rowwise().mean();
  return make_result(std::move(v), "rowmean", {&a}, [cols](Node& self) {
    accumulate(*self.parents[0], (*self.grad / static_cast<double>(cols)).replicate(1, cols));
  });
}

Tensor rowstd(const Tensor& a) {
  if (a.cols() == 0) fail(ErrorCode::ShapeMismatch, "rowstd of zero columns");
  const auto cols = a.cols();
  Matrix centered = a.value().colwise() - a.value().rowwise().mean();
  Matrix v = (centered.array().square().rowwise().mean()).sqrt().matrix();
  Matrix stdv = v;
  return make_result(std::move(v), "rowstd", {&a}, [cols, centered = std::move(centered), stdv](Node& self) {
    Matrix g(centered.rows(), centered.cols());
    for (Eigen::Index i = 0; i < centered.rows(); ++i) {
      const double denom = static_cast<double>(cols) * std::max(stdv(i, 0), kEps);
      g.row(i) = centered.row(i) * ((*self.grad)(i, 0) / denom);
    }
    accumulate(*self.parents[0], g);
  });
}

Tensor colmean(const Tensor& a) {
  if (a.rows() == 0) fail(ErrorCode::EmptyGraph, "colmean of zero rows");
  const auto rows = a.rows();
  Matrix v = a.value().colwise().mean();
  return make_result(std::move(v), "colmean", {&a}, [rows](Node& self) {
    accumulate(*self.parents[0], (*self.grad / static_cast<double>(rows)).replicate(rows, 1));
  });
}

Tensor sum(const Tensor& a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  const auto r = a.rows();
  const auto c = a.cols();
  return make_result(std::move(v), "sum", {&a},
                     [r, c](Node& self) { accumulate(*self.parents[0], Matrix::Constant(r, c, (*self.grad)(0, 0))); });
}

Tensor mean(const Tensor& a) {
  const auto count = static_cast<double>(a.rows() * a.cols());
  if (count == 0) fail(ErrorCode::ShapeMismatch, "mean of empty tensor");
  return scale(sum(a), 1.0 / count);
}

Tensor sigmoid(const Tensor& a) {
  Matrix v = a.value().unaryExpr([](double x) { return stable_sigmoid(x); });
  Matrix out = v;
  return make_result(std::move(v), "sigmoid", {&a}, [out = std::move(out)](Node& self) {
    accumulate(*self.parents[0], self.grad->cwiseProduct(out.cwiseProduct((1.0 - out.array()).matrix())));
  });
}

Tensor relu(const Tensor& a) {
  Matrix v = a.value().cwiseMax(0.0);
  return make_result(std::move(v), "relu", {&a}, [](Node& self) {
    const auto& x = self.parents[0]->value;
    accumulate(*self.parents[0], (x.array() > 0.0).select(self.grad->array(), 0.0).matrix());
  });
}

Tensor exp(const Tensor& a) {
  Matrix v = a.value().array().exp().matrix();
  Matrix out = v;
  return make_result(std::move(v), "exp", {&a}, [out = std::move(out)](Node& self) {
    accumulate(*self.parents[0], self.grad->cwiseProduct(out));
  });
}

Tensor log(const Tensor& a) {
  Matrix v = a.value().cwiseMax(kEps).array().log().matrix();
  return make_result(std::move(v), "log", {&a}, [](Node& self) {
    const auto& x = self.parents[0]->value;
    accumulate(*self.parents[0], (x.array() > kEps).select(self.grad->array() / x.array(), 0.0).matrix());
  });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  Matrix v = a.value().cwiseMax(lo).cwiseMin(hi);
  return make_result(std::move(v), "clamp", {&a}, [lo, hi](Node& self) {
    const auto& x = self.parents[0]->value;
    accumulate(*self.parents[0], (x.array() >= lo && x.array() <= hi).select(self.grad->array(), 0.0).matrix());
  });
}

Tensor softmax_rows(const Tensor& a) {
  Matrix v = a.value().colwise() - a.value().rowwise().maxCoeff();
  v = v.array().exp().matrix();
  v = v.array().colwise() / v.rowwise().sum().array();
  Matrix out = v;
  return make_result(std::move(v), "softmax_rows", {&a}, [out = std::move(out)](Node& self) {
    const Matrix& g = *self.grad;
    Eigen::VectorXd dots = g.cwiseProduct(out).rowwise().sum();
    Matrix gx = out.cwiseProduct((g.colwise() - dots).matrix());
    accumulate(*self.parents[0], gx);
  });
}

Tensor l2_normalize_rows(const Tensor& a) {
  Eigen::VectorXd norms = a.value().rowwise().norm();
  Eigen::VectorXd denom = norms.cwiseMax(kEps);
  Matrix v = a.value().array().colwise() / denom.array();
  Matrix out = v;
  return make_result(std::move(v), "l2_normalize_rows", {&a},
                     [out = std::move(out), norms, denom](Node& self) {
                       const Matrix& g = *self.grad;
                       Matrix gx(g.rows(), g.cols());
                       for (Eigen::Index i = 0; i < g.rows(); ++i) {
                         if (norms(i) > kEps) {
                           const double proj = out.row(i).dot(g.row(i));
                           gx.row(i) = (g.row(i) - out.row(i) * proj) / denom(i);
                         } else {
                           gx.row(i) = g.row(i) / kEps;
                         }
                       }
                       accumulate(*self.parents[0], gx);
                     });
}

Tensor cosine_rows(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "cosine_rows");
  return rowsum(mul(l2_normalize_rows(a), l2_normalize_rows(b)));
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> idx) {
  Matrix v(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= static_cast<std::size_t>(a.rows())) {
      fail(ErrorCode::IndexOutOfRange, "gather_rows index " + std::to_string(idx[r]) + " of " + std::to_string(a.rows()));
    }
    v.row(static_cast<Eigen::Index>(r)) = a.value().row(static_cast<Eigen::Index>(idx[r]));
  }
  std::vector<std::size_t> indices(idx.begin(), idx.end());
  const auto rows = a.rows();
  return make_result(std::move(v), "gather_rows", {&a}, [indices = std::move(indices), rows](Node& self) {
    Matrix gx = Matrix::Zero(rows, self.grad->cols());
    for (std::size_t r = 0; r < indices.size(); ++r) {
      gx.row(static_cast<Eigen::Index>(indices[r])) += self.grad->row(static_cast<Eigen::Index>(r));
    }
    accumulate(*self.parents[0], gx);
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) fail(ErrorCode::ShapeMismatch, "concat_rows of nothing");
  const auto cols = parts.front().cols();
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) fail(ErrorCode::ShapeMismatch, "concat_rows: column mismatch");
    total += p.rows();
  }
  Matrix v(total, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    v.middleRows(off, p.rows()) = p.value();
    offsets.push_back(off);
    off += p.rows();
  }

  auto node = std::make_shared<Node>();
  check_finite(v, "concat_rows");
  node->value = std::move(v);
  node->is_leaf = false;
  for (const auto& p : parts) node->requires_grad = node->requires_grad || p.requires_grad();
  if (node->requires_grad) {
    for (const auto& p : parts) node->parents.push_back(p.node());
    node->backward_fn = [offsets = std::move(offsets)](Node& self) {
      for (std::size_t i = 0; i < self.parents.size(); ++i) {
        auto& p = *self.parents[i];
        if (p.requires_grad) accumulate(p, self.grad->middleRows(offsets[i], p.value.rows()));
      }
    };
  }
  return Tensor::from_node(std::move(node));
}

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Matmul: return "matmul";
    case OpKind::Transpose: return "transpose";
    case OpKind::Add: return "add";
    case OpKind::Scale: return "scale";
    case OpKind::RowSum: return "rowsum";
    case OpKind::RowMean: return "rowmean";
    case OpKind::RowStd: return "rowstd";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Relu: return "relu";
    case OpKind::Exp: return "exp";
    case OpKind::Log: return "log";
    case OpKind::SoftmaxRows: return "softmax_rows";
    case OpKind::L2NormalizeRows: return "l2_normalize_rows";
    case OpKind::CosineRows: return "cosine_rows";
    case OpKind::GatherRows: return "gather_rows";
    case OpKind::ConcatRows: return "concat_rows";
  }
  return "unknown";
}

Tensor forward(OpKind kind, std::span<const Tensor> operands, const OpArgs& args) {
  auto need = [&](std::size_t n) {
    if (operands.size() < n) fail(ErrorCode::ShapeMismatch, std::string(to_string(kind)) + " needs more operands");
  };
  need(1);
  const Tensor& a = operands[0];
  switch (kind) {
    case OpKind::Matmul: need(2); return matmul(a, operands[1]);
    case OpKind::Transpose: return transpose(a);
    case OpKind::Add: need(2); return add(a, operands[1]);
    case OpKind::Scale: return scale(a, args.scalar);
    case OpKind::RowSum: return rowsum(a);
    case OpKind::RowMean: return rowmean(a);
    case OpKind::RowStd: return rowstd(a);
    case OpKind::Sigmoid: return sigmoid(a);
    case OpKind::Relu: return relu(a);
    case OpKind::Exp: return exp(a);
    case OpKind::Log: return log(a);
    case OpKind::SoftmaxRows: return softmax_rows(a);
    case OpKind::L2NormalizeRows: return l2_normalize_rows(a);
    case OpKind::CosineRows: need(2); return cosine_rows(a, operands[1]);
    case OpKind::GatherRows: return gather_rows(a, args.indices);
    case OpKind::ConcatRows: return concat_rows(operands);
  }
  fail(ErrorCode::ShapeMismatch, "unknown op kind");
}

void backward(const Tensor& loss) {
  if (loss.rows() != 1 || loss.cols() != 1) fail(ErrorCode::NotScalar, "loss is " + shape_str(loss.value()));
  if (!loss.requires_grad()) fail(ErrorCode::DetachedLoss, "loss does not depend on any parameter");

  // Post-order DFS gives a topological order (parents before children).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (!n->is_leaf) n->grad = Matrix::Zero(n->value.rows(), n->value.cols());
  }
  Matrix seed = Matrix::Ones(1, 1);
  accumulate(*loss.node(), seed);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->is_leaf) continue;
    n->backward_fn(*n);
    n->grad.reset();
  }
  for (Node* n : order) {
    if (n->is_leaf && n->grad) check_finite(*n->grad, "backward");
  }
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Matrix& x, double h) {
  Tensor p = Tensor::parameter(x);
  backward(f(p));
  const Matrix analytic = p.grad();

  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Matrix xp = x;
      Matrix xm = x;
      xp(i, j) += h;
      xm(i, j) -= h;
      const double fp = f(Tensor::constant(xp)).item();
      const double fm = f(Tensor::constant(xm)).item();
      const double fd = (fp - fm) / (2.0 * h);
      worst = std::max(worst, std::abs(analytic(i, j) - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  return worst;
}

}  // namespace denoise::ad
