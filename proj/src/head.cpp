#include "relnet/head.hpp"

#include <cmath>
#include <stdexcept>

namespace relnet {

void HeadConfig::validate() const {
  if (d_in <= 0 || d_hidden <= 0 || num_classes <= 0) {
    throw std::invalid_argument("head config: dimensions must be positive");
  }
  if (r1 < 0 || r2 < 0) throw std::invalid_argument("head config: r1, r2 must be >= 0");
  if (r1 > 0 || r2 > 0) {
    if (relation.d_f != d_hidden) {
      throw std::invalid_argument("head config: relation d_f (" + std::to_string(relation.d_f) +
                                  ") must equal d_hidden (" + std::to_string(d_hidden) + ")");
    }
    relation.validate();
  }
}

namespace {

Var init_linear(int rows, int cols, uint64_t seed, const std::string& name) {
  Rng rng(Rng::mix(seed, Rng::hash_name(name)));
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  Tensor t({rows, cols});
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
  return Var(std::move(t), true);
}

Var zero_bias(int dim) { return Var(Tensor({1, dim}), true); }

}  // namespace

HeadParams HeadParams::init(const HeadConfig& config, uint64_t seed,
                            const std::string& prefix) {
  config.validate();
  HeadParams p;
  p.fc1_w = init_linear(config.d_hidden, config.d_in, seed, prefix + ".fc1.w");
  p.fc1_b = zero_bias(config.d_hidden);
  p.fc2_w = init_linear(config.d_hidden, config.d_hidden, seed, prefix + ".fc2.w");
  p.fc2_b = zero_bias(config.d_hidden);
  p.cls_w = init_linear(config.num_classes + 1, config.d_hidden, seed, prefix + ".cls.w");
  p.cls_b = zero_bias(config.num_classes + 1);
  p.box_w = init_linear(4, config.d_hidden, seed, prefix + ".box.w");
  p.box_b = zero_bias(4);
  for (int i = 0; i < config.r1; ++i) {
    p.rm1.push_back(
        RelationParams::init(config.relation, seed, prefix + ".rm1." + std::to_string(i)));
  }
  for (int i = 0; i < config.r2; ++i) {
    p.rm2.push_back(
        RelationParams::init(config.relation, seed, prefix + ".rm2." + std::to_string(i)));
  }
  return p;
}

void HeadParams::collect(const std::string& prefix,
                         std::vector<std::pair<std::string, Var>>& out) const {
  out.emplace_back(prefix + ".fc1.w", fc1_w);
  out.emplace_back(prefix + ".fc1.b", fc1_b);
  out.emplace_back(prefix + ".fc2.w", fc2_w);
  out.emplace_back(prefix + ".fc2.b", fc2_b);
  out.emplace_back(prefix + ".cls.w", cls_w);
  out.emplace_back(prefix + ".cls.b", cls_b);
  out.emplace_back(prefix + ".box.w", box_w);
  out.emplace_back(prefix + ".box.b", box_b);
  for (size_t i = 0; i < rm1.size(); ++i) rm1[i].collect(prefix + ".rm1." + std::to_string(i), out);
  for (size_t i = 0; i < rm2.size(); ++i) rm2[i].collect(prefix + ".rm2." + std::to_string(i), out);
}

int64_t HeadParams::learnable_count() const {
  std::vector<std::pair<std::string, Var>> all;
  collect("h", all);
  int64_t n = 0;
  for (const auto& [name, v] : all) n += v.value().numel();
  return n;
}

HeadOutput head_forward(const Var& roi_features, const std::vector<Box>& boxes,
                        const HeadParams& params, const HeadConfig& config) {
  config.validate();
  const Tensor& f = roi_features.value();
  if (f.rank() != 2 || f.cols() != config.d_in) {
    throw std::invalid_argument("head_forward: features " + f.shape_str() +
                                " do not match d_in=" + std::to_string(config.d_in));
  }
  if (f.rows() != static_cast<int>(boxes.size())) {
    throw std::invalid_argument("head_forward: " + std::to_string(f.rows()) +
                                " feature rows vs " + std::to_string(boxes.size()) + " boxes");
  }

  const Tensor* pair_embed = nullptr;
  Tensor pair_embed_storage;
  if ((config.r1 > 0 || config.r2 > 0) && config.relation.geo_mode == GeoMode::kOurs) {
    pair_embed_storage = pair_geometry_embedding(boxes, config.relation.d_g,
                                                 config.relation.wave_base, config.relation.eps);
    pair_embed = &pair_embed_storage;
  }

  Var h = relu(add_row_broadcast(matmul(roi_features, transpose(params.fc1_w)), params.fc1_b));
  for (const RelationParams& rm : params.rm1) {
    h = relation_module_forward({h, boxes}, rm, config.relation, pair_embed);
  }
  h = relu(add_row_broadcast(matmul(h, transpose(params.fc2_w)), params.fc2_b));
  for (const RelationParams& rm : params.rm2) {
    h = relation_module_forward({h, boxes}, rm, config.relation, pair_embed);
  }

  HeadOutput out;
  out.final_features = h;
  out.class_logits = add_row_broadcast(matmul(h, transpose(params.cls_w)), params.cls_b);
  out.class_scores = softmax_rows(out.class_logits);
  out.box_deltas = add_row_broadcast(matmul(h, transpose(params.box_w)), params.box_b);
  return out;
}

Var recognition_loss(const HeadOutput& output, const std::vector<int>& labels,
                     const Tensor& regression_targets) {
  const Tensor& logits = output.class_logits.value();
  const int n = logits.rows(), c1 = logits.cols();
  if (static_cast<int>(labels.size()) != n) {
    throw std::invalid_argument("recognition_loss: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(n) + " proposals");
  }
  std::vector<int64_t> label_idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (labels[static_cast<size_t>(i)] < 0 || labels[static_cast<size_t>(i)] >= c1) {
      throw std::invalid_argument("recognition_loss: label " +
                                  std::to_string(labels[static_cast<size_t>(i)]) +
                                  " out of range [0, " + std::to_string(c1 - 1) + "]");
    }
    label_idx[static_cast<size_t>(i)] =
        static_cast<int64_t>(i) * c1 + labels[static_cast<size_t>(i)];
  }

  // Cross entropy from logits via a stable log-softmax.
  Var shifted = sub_rowmax_const(output.class_logits);
  Var log_norm = vlog(row_sum(vexp(shifted)));            // [N × 1]
  Var log_probs = sub_col_broadcast(shifted, log_norm);   // [N × (C+1)]
  Var ce = neg(mean_all(pick(log_probs, std::move(label_idx))));

  int fg = 0;
  for (int v : labels)
    if (v > 0) ++fg;
  if (fg == 0) return ce;

  if (regression_targets.rank() != 2 || regression_targets.rows() != n ||
      regression_targets.cols() != 4) {
    throw std::invalid_argument("recognition_loss: regression targets " +
                                regression_targets.shape_str() + " must be [" +
                                std::to_string(n) + "x4]");
  }
  Tensor fg_mask({n, 4});
  for (int i = 0; i < n; ++i) {
    if (labels[static_cast<size_t>(i)] > 0) {
      for (int j = 0; j < 4; ++j) fg_mask.at(i, j) = 1.0;
    }
  }
  Var residual = sub(output.box_deltas, constant(regression_targets));
  Var masked = mul(huber(residual), constant(std::move(fg_mask)));
  Var box_loss = scale(sum_all(masked), 1.0 / static_cast<double>(fg));
  return add(ce, box_loss);
}

}  // namespace relnet
