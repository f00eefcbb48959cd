#include "relnet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace relnet {

namespace {

std::shared_ptr<Node> make_node(Tensor value, std::vector<std::shared_ptr<Node>> parents,
                                std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected rank-2 tensor, got " +
                                t.shape_str());
  }
}

}  // namespace

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const Tensor& Var::grad() const {
  return node_->ensure_grad();
}

void Var::zero_grad() {
  if (node_->grad.numel() != 0) node_->grad.fill(0.0);
}

Var Var::from_node(std::shared_ptr<Node> n) {
  Var v;
  v.node_ = std::move(n);
  return v;
}

Var constant(Tensor t) { return Var(std::move(t), false); }

Var matmul(const Var& a, const Var& b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_rank2(A, "matmul");
  require_rank2(B, "matmul");
  if (A.cols() != B.rows()) {
    throw std::invalid_argument("matmul: shape mismatch " + A.shape_str() + " vs " +
                                B.shape_str());
  }
  const int m = A.rows(), k = A.cols(), n = B.cols();
  Tensor C({m, n});
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = A.at(i, p);
      if (aip == 0.0) continue;
      for (int j = 0; j < n; ++j) C.at(i, j) += aip * B.at(p, j);
    }
  }
  return Var::from_node(make_node(std::move(C), {a.node(), b.node()}, [m, k, n](Node& nd) {
    const Tensor& G = nd.grad;
    Node& pa = *nd.parents[0];
    Node& pb = *nd.parents[1];
    if (pa.requires_grad) {
      Tensor& dA = pa.ensure_grad();
      const Tensor& B2 = pb.value;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          const double g = G.at(i, j);
          if (g == 0.0) continue;
          for (int p = 0; p < k; ++p) dA.at(i, p) += g * B2.at(p, j);
        }
    }
    if (pb.requires_grad) {
      Tensor& dB = pb.ensure_grad();
      const Tensor& A2 = pa.value;
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          const double aip = A2.at(i, p);
          if (aip == 0.0) continue;
          for (int j = 0; j < n; ++j) dB.at(p, j) += aip * G.at(i, j);
        }
    }
  }));
}

Var transpose(const Var& a) {
  const Tensor& A = a.value();
  require_rank2(A, "transpose");
  const int m = A.rows(), n = A.cols();
  Tensor T({n, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) T.at(j, i) = A.at(i, j);
  return Var::from_node(make_node(std::move(T), {a.node()}, [m, n](Node& nd) {
    Tensor& dA = nd.parents[0]->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) dA.at(i, j) += nd.grad.at(j, i);
  }));
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const auto& bd = b.value().data();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] += bd[static_cast<size_t>(i)];
  return Var::from_node(make_node(std::move(out), {a.node(), b.node()}, [](Node& nd) {
    for (int s = 0; s < 2; ++s) {
      Node& p = *nd.parents[s];
      if (!p.requires_grad) continue;
      Tensor& d = p.ensure_grad();
      for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] += nd.grad[i];
    }
  }));
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const auto& bd = b.value().data();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] -= bd[static_cast<size_t>(i)];
  return Var::from_node(make_node(std::move(out), {a.node(), b.node()}, [](Node& nd) {
    Node& pa = *nd.parents[0];
    Node& pb = *nd.parents[1];
    if (pa.requires_grad) {
      Tensor& d = pa.ensure_grad();
      for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] += nd.grad[i];
    }
    if (pb.requires_grad) {
      Tensor& d = pb.ensure_grad();
      for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] -= nd.grad[i];
    }
  }));
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const auto& bd = b.value().data();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= bd[static_cast<size_t>(i)];
  return Var::from_node(make_node(std::move(out), {a.node(), b.node()}, [](Node& nd) {
    Node& pa = *nd.parents[0];
    Node& pb = *nd.parents[1];
    if (pa.requires_grad) {
      Tensor& d = pa.ensure_grad();
      for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] += nd.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      Tensor& d = pb.ensure_grad();
      for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] += nd.grad[i] * pa.value[i];
    }
  }));
}

Var scale(const Var& a, double c) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] *= c;
  return Var::from_node(make_node(std::move(out), {a.node()}, [c](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] += c * nd.grad[i];
  }));
}

Var add_scalar(const Var& a, double c) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] += c;
  return Var::from_node(make_node(std::move(out), {a.node()}, [](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] += nd.grad[i];
  }));
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var add_row_broadcast(const Var& m, const Var& row) {
  const Tensor& M = m.value();
  const Tensor& R = row.value();
  require_rank2(M, "add_row_broadcast");
  if (R.rank() != 2 || R.rows() != 1 || R.cols() != M.cols()) {
    throw std::invalid_argument("add_row_broadcast: shape mismatch " + M.shape_str() +
                                " vs " + R.shape_str());
  }
  const int rows = M.rows(), cols = M.cols();
  Tensor out = M;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out.at(i, j) += R.at(0, j);
  return Var::from_node(make_node(std::move(out), {m.node(), row.node()}, [rows, cols](Node& nd) {
    Node& pm = *nd.parents[0];
    Node& pr = *nd.parents[1];
    if (pm.requires_grad) {
      Tensor& d = pm.ensure_grad();
      for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] += nd.grad[i];
    }
    if (pr.requires_grad) {
      Tensor& d = pr.ensure_grad();
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) d.at(0, j) += nd.grad.at(i, j);
    }
  }));
}

Var mul_col_broadcast(const Var& m, const Var& col) {
  const Tensor& M = m.value();
  const Tensor& C = col.value();
  require_rank2(M, "mul_col_broadcast");
  if (C.rank() != 2 || C.cols() != 1 || C.rows() != M.rows()) {
    throw std::invalid_argument("mul_col_broadcast: shape mismatch " + M.shape_str() +
                                " vs " + C.shape_str());
  }
  const int rows = M.rows(), cols = M.cols();
  Tensor out = M;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out.at(i, j) *= C.at(i, 0);
  return Var::from_node(make_node(std::move(out), {m.node(), col.node()}, [rows, cols](Node& nd) {
    Node& pm = *nd.parents[0];
    Node& pc = *nd.parents[1];
    if (pm.requires_grad) {
      Tensor& d = pm.ensure_grad();
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) d.at(i, j) += nd.grad.at(i, j) * pc.value.at(i, 0);
    }
    if (pc.requires_grad) {
      Tensor& d = pc.ensure_grad();
      for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols; ++j) s += nd.grad.at(i, j) * pm.value.at(i, j);
        d.at(i, 0) += s;
      }
    }
  }));
}

Var sub_col_broadcast(const Var& m, const Var& col) {
  const Tensor& M = m.value();
  const Tensor& C = col.value();
  require_rank2(M, "sub_col_broadcast");
  if (C.rank() != 2 || C.cols() != 1 || C.rows() != M.rows()) {
    throw std::invalid_argument("sub_col_broadcast: shape mismatch " + M.shape_str() +
                                " vs " + C.shape_str());
  }
  const int rows = M.rows(), cols = M.cols();
  Tensor out = M;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out.at(i, j) -= C.at(i, 0);
  return Var::from_node(make_node(std::move(out), {m.node(), col.node()}, [rows, cols](Node& nd) {
    Node& pm = *nd.parents[0];
    Node& pc = *nd.parents[1];
    if (pm.requires_grad) {
      Tensor& d = pm.ensure_grad();
      for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] += nd.grad[i];
    }
    if (pc.requires_grad) {
      Tensor& d = pc.ensure_grad();
      for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols; ++j) s += nd.grad.at(i, j);
        d.at(i, 0) -= s;
      }
    }
  }));
}

Var relu(const Var& a) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::max(0.0, out[i]);
  return Var::from_node(make_node(std::move(out), {a.node()}, [](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    const Tensor& x = nd.parents[0]->value;
    for (int64_t i = 0; i < nd.grad.numel(); ++i)
      if (x[i] > 0.0) d[i] += nd.grad[i];
  }));
}

Var vexp(const Var& a) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::exp(out[i]);
  return Var::from_node(make_node(std::move(out), {a.node()}, [](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] += nd.grad[i] * nd.value[i];
  }));
}

Var vlog(const Var& a) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::log(out[i]);
  return Var::from_node(make_node(std::move(out), {a.node()}, [](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    const Tensor& x = nd.parents[0]->value;
    for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] += nd.grad[i] / x[i];
  }));
}

Var sigmoid(const Var& a) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) {
    const double x = out[i];
    out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return Var::from_node(make_node(std::move(out), {a.node()}, [](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    for (int64_t i = 0; i < nd.grad.numel(); ++i) {
      const double y = nd.value[i];
      d[i] += nd.grad[i] * y * (1.0 - y);
    }
  }));
}

Var clamp(const Var& a, double lo, double hi) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::min(hi, std::max(lo, out[i]));
  return Var::from_node(make_node(std::move(out), {a.node()}, [lo, hi](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    const Tensor& x = nd.parents[0]->value;
    for (int64_t i = 0; i < nd.grad.numel(); ++i)
      if (x[i] >= lo && x[i] <= hi) d[i] += nd.grad[i];
  }));
}

Var huber(const Var& a) {
  Tensor out = a.value();
  for (int64_t i = 0; i < out.numel(); ++i) {
    const double x = out[i];
    out[i] = std::abs(x) < 1.0 ? 0.5 * x * x : std::abs(x) - 0.5;
  }
  return Var::from_node(make_node(std::move(out), {a.node()}, [](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    const Tensor& x = nd.parents[0]->value;
    for (int64_t i = 0; i < nd.grad.numel(); ++i) {
      const double xi = x[i];
      d[i] += nd.grad[i] * (std::abs(xi) < 1.0 ? xi : (xi > 0.0 ? 1.0 : (xi < 0.0 ? -1.0 : 0.0)));
    }
  }));
}

Var softmax_rows(const Var& a) {
  const Tensor& A = a.value();
  require_rank2(A, "softmax_rows");
  const int m = A.rows(), n = A.cols();
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    double mx = A.at(i, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, A.at(i, j));
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      const double e = std::exp(A.at(i, j) - mx);
      out.at(i, j) = e;
      s += e;
    }
    for (int j = 0; j < n; ++j) out.at(i, j) /= s;
  }
  return Var::from_node(make_node(std::move(out), {a.node()}, [m, n](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    const Tensor& y = nd.value;
    for (int i = 0; i < m; ++i) {
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += nd.grad.at(i, j) * y.at(i, j);
      for (int j = 0; j < n; ++j) d.at(i, j) += y.at(i, j) * (nd.grad.at(i, j) - dot);
    }
  }));
}

// The softmax-style normalizations downstream are invariant to these shifts,
// so treating the max as a constant still yields exact gradients.
Var sub_rowmax_const(const Var& a) {
  const Tensor& A = a.value();
  require_rank2(A, "sub_rowmax_const");
  const int m = A.rows(), n = A.cols();
  Tensor out = A;
  for (int i = 0; i < m; ++i) {
    double mx = A.at(i, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, A.at(i, j));
    for (int j = 0; j < n; ++j) out.at(i, j) -= mx;
  }
  return Var::from_node(make_node(std::move(out), {a.node()}, [](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] += nd.grad[i];
  }));
}

Var sub_colmax_const(const Var& a) {
  const Tensor& A = a.value();
  require_rank2(A, "sub_colmax_const");
  const int m = A.rows(), n = A.cols();
  Tensor out = A;
  for (int j = 0; j < n; ++j) {
    double mx = A.at(0, j);
    for (int i = 1; i < m; ++i) mx = std::max(mx, A.at(i, j));
    for (int i = 0; i < m; ++i) out.at(i, j) -= mx;
  }
  return Var::from_node(make_node(std::move(out), {a.node()}, [](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] += nd.grad[i];
  }));
}

Var safe_col_normalize(const Var& t) {
  const Tensor& T = t.value();
  require_rank2(T, "safe_col_normalize");
  const int m = T.rows(), n = T.cols();
  Tensor out({m, n});
  std::vector<double> sums(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += T.at(i, j);
    sums[j] = s;
    if (s > 0.0)
      for (int i = 0; i < m; ++i) out.at(i, j) = T.at(i, j) / s;
  }
  return Var::from_node(make_node(std::move(out), {t.node()}, [m, n, sums](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    const Tensor& y = nd.value;
    for (int j = 0; j < n; ++j) {
      if (sums[j] <= 0.0) continue;
      double dot = 0.0;
      for (int i = 0; i < m; ++i) dot += nd.grad.at(i, j) * y.at(i, j);
      for (int i = 0; i < m; ++i) d.at(i, j) += (nd.grad.at(i, j) - dot) / sums[j];
    }
  }));
}

Var row_sum(const Var& a) {
  const Tensor& A = a.value();
  require_rank2(A, "row_sum");
  const int m = A.rows(), n = A.cols();
  Tensor out({m, 1});
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += A.at(i, j);
    out.at(i, 0) = s;
  }
  return Var::from_node(make_node(std::move(out), {a.node()}, [m, n](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) d.at(i, j) += nd.grad.at(i, 0);
  }));
}

Var sum_all(const Var& a) {
  double s = 0.0;
  for (int64_t i = 0; i < a.value().numel(); ++i) s += a.value()[i];
  return Var::from_node(make_node(Tensor::scalar(s), {a.node()}, [](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    for (int64_t i = 0; i < d.numel(); ++i) d[i] += nd.grad[0];
  }));
}

Var mean_all(const Var& a) {
  return scale(sum_all(a), 1.0 / static_cast<double>(a.value().numel()));
}

Var pick(const Var& a, std::vector<int64_t> flat_idx) {
  const Tensor& A = a.value();
  Tensor out({static_cast<int>(flat_idx.size())});
  for (size_t t = 0; t < flat_idx.size(); ++t) {
    if (flat_idx[t] < 0 || flat_idx[t] >= A.numel()) {
      throw std::invalid_argument("pick: index out of range for " + A.shape_str());
    }
    out[static_cast<int64_t>(t)] = A[flat_idx[t]];
  }
  return Var::from_node(
      make_node(std::move(out), {a.node()}, [idx = std::move(flat_idx)](Node& nd) {
        Tensor& d = nd.parents[0]->ensure_grad();
        for (size_t t = 0; t < idx.size(); ++t) d[idx[t]] += nd.grad[static_cast<int64_t>(t)];
      }));
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const int m = parts[0].value().rows();
  int total = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::vector<int> widths;
  for (const Var& p : parts) {
    require_rank2(p.value(), "concat_cols");
    if (p.value().rows() != m) {
      throw std::invalid_argument("concat_cols: row mismatch " + parts[0].value().shape_str() +
                                  " vs " + p.value().shape_str());
    }
    widths.push_back(p.value().cols());
    total += p.value().cols();
    parents.push_back(p.node());
  }
  Tensor out({m, total});
  int off = 0;
  for (size_t s = 0; s < parts.size(); ++s) {
    const Tensor& P = parts[s].value();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < widths[s]; ++j) out.at(i, off + j) = P.at(i, j);
    off += widths[s];
  }
  return Var::from_node(make_node(std::move(out), std::move(parents), [m, widths](Node& nd) {
    int off2 = 0;
    for (size_t s = 0; s < nd.parents.size(); ++s) {
      Node& p = *nd.parents[s];
      if (p.requires_grad) {
        Tensor& d = p.ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < widths[s]; ++j) d.at(i, j) += nd.grad.at(i, off2 + j);
      }
      off2 += widths[s];
    }
  }));
}

Var reshape(const Var& a, std::vector<int> shape) {
  Tensor out(std::move(shape), a.value().data());
  return Var::from_node(make_node(std::move(out), {a.node()}, [](Node& nd) {
    Tensor& d = nd.parents[0]->ensure_grad();
    for (int64_t i = 0; i < nd.grad.numel(); ++i) d[i] += nd.grad[i];
  }));
}

void backward(const Var& loss) {
  if (!loss.defined() || loss.value().numel() != 1) {
    throw std::invalid_argument("backward: loss must be scalar");
  }
  Node* root = loss.node().get();
  if (!root->requires_grad) return;  // loss independent of all parameters

  // Iterative post-order DFS; parents end up before children in `order`.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    bool descended = false;
    while (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
        descended = true;
        break;
      }
    }
    if (!descended && (stack.back().second >= stack.back().first->parents.size())) {
      order.push_back(stack.back().first);
      stack.pop_back();
    }
  }

  root->ensure_grad()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) {
      n->ensure_grad();
      n->backprop(*n);
    }
  }
}

GradCheckReport grad_check(const std::function<Var()>& f,
                           const std::vector<std::pair<std::string, Var>>& params,
                           double step, double tolerance) {
  if (step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");
  GradCheckReport report;
  report.tolerance = tolerance;

  for (const auto& [name, p] : params) {
    Var handle = p;
    handle.zero_grad();
  }
  Var loss = f();
  backward(loss);
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const auto& [name, p] : params) analytic.push_back(p.grad());

  auto eval = [&]() { return f().value()[0]; };
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Var p = params[pi].second;
    GradCheckEntry entry;
    entry.name = params[pi].first;
    Tensor& v = p.mutable_value();
    for (int64_t i = 0; i < v.numel(); ++i) {
      const double orig = v[i];
      v[i] = orig + step;
      const double up = eval();
      v[i] = orig - step;
      const double down = eval();
      v[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[pi][i];
      const double rel =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.per_param.push_back(std::move(entry));
  }
  report.pass = report.max_rel_err < tolerance;
  return report;
}

}  // namespace relnet
