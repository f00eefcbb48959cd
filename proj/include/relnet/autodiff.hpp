#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "relnet/tensor.hpp"

namespace relnet {

// Reverse-mode automatic differentiation on tensors. The graph is rebuilt on
// every forward pass (define-by-run); a Var is a handle to a graph node.
// Leaf Vars created with requires_grad=true act as parameters: backward()
// accumulates into their grad tensor until zero_grad() is called.
//
// A graph is confined to one logical thread per forward/backward pass.

struct Node {
  Tensor value;
  Tensor grad;  // same shape as value, lazily allocated, zero-initialized
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backprop;
  bool requires_grad = false;

  Tensor& ensure_grad() {
    if (grad.numel() == 0) grad = Tensor::zeros(value.shape());
    return grad;
  }
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  // Leaf mutation between passes (optimizer updates). Never mutate a value
  // that is part of a live graph.
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const;
  void zero_grad();
  bool requires_grad() const { return node_->requires_grad; }

  std::shared_ptr<Node> node() const { return node_; }
  static Var from_node(std::shared_ptr<Node> n);

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Tensor t);

// --- differentiable operations ------------------------------------------

Var matmul(const Var& a, const Var& b);       // [m×k]·[k×n] → [m×n]
Var transpose(const Var& a);                  // rank-2
Var add(const Var& a, const Var& b);          // same shape
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);          // elementwise
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var neg(const Var& a);
Var add_row_broadcast(const Var& m, const Var& row);  // [m×n] + [1×n]
Var mul_col_broadcast(const Var& m, const Var& col);  // [m×n] ∘ [m×1]
Var sub_col_broadcast(const Var& m, const Var& col);  // [m×n] − [m×1]
Var relu(const Var& a);                       // subgradient at 0 is 0
Var vexp(const Var& a);
Var vlog(const Var& a);
Var sigmoid(const Var& a);
Var clamp(const Var& a, double lo, double hi);  // gradient 0 where clamped
Var huber(const Var& a);                      // smooth-L1, transition at 1.0
Var softmax_rows(const Var& a);               // max-subtracted, rows sum to 1
Var sub_rowmax_const(const Var& a);           // shift by per-row max (stop-grad)
Var sub_colmax_const(const Var& a);           // shift by per-col max (stop-grad)
// Column-wise t[:,n] / sum(t[:,n]); an all-zero column stays all-zero.
Var safe_col_normalize(const Var& t);
Var row_sum(const Var& a);                    // [m×n] → [m×1]
Var sum_all(const Var& a);                    // → scalar [1]
Var mean_all(const Var& a);
Var pick(const Var& a, std::vector<int64_t> flat_idx);  // gather → [k]
Var concat_cols(const std::vector<Var>& parts);         // [m×d_i] → [m×Σd_i]
Var reshape(const Var& a, std::vector<int> shape);

// --- backward pass --------------------------------------------------------

// loss must be scalar (numel == 1); accumulates dLoss/dParam into every
// reachable parameter node. Repeated paths through a parameter sum.
void backward(const Var& loss);

// --- gradient checking -----------------------------------------------------

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = false;
  double tolerance = 0.0;
  std::vector<GradCheckEntry> per_param;
};

// Compares backward() against central finite differences
// (f(x+h) − f(x−h)) / 2h on every coordinate of every parameter.
// Relative error uses denominator max(1, |analytic|, |numeric|).
// f must rebuild the forward graph on each call and return a scalar loss.
GradCheckReport grad_check(const std::function<Var()>& f,
                           const std::vector<std::pair<std::string, Var>>& params,
                           double step = 1e-5, double tolerance = 1e-4);

}  // namespace relnet
