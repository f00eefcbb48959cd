#include "relnet/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "relnet/threads.hpp"

namespace relnet {

void DedupConfig::validate() const {
  if (d_feat <= 0 || d_fused <= 0) {
    throw std::invalid_argument("dedup config: dimensions must be positive");
  }
  if (rank_dim <= 0 || rank_dim % 2 != 0) {
    throw std::invalid_argument("dedup config: rank_dim must be even and positive");
  }
  if (relation.d_f != d_fused) {
    throw std::invalid_argument("dedup config: relation d_f (" + std::to_string(relation.d_f) +
                                ") must equal d_fused (" + std::to_string(d_fused) + ")");
  }
  relation.validate();
  if (eta_set.empty()) throw std::invalid_argument("dedup config: eta_set must be non-empty");
  for (size_t i = 0; i < eta_set.size(); ++i) {
    if (eta_set[i] <= 0.0 || eta_set[i] >= 1.0) {
      throw std::invalid_argument("dedup config: eta values must lie in (0,1)");
    }
    if (i > 0 && eta_set[i] <= eta_set[i - 1]) {
      throw std::invalid_argument("dedup config: eta_set must be strictly increasing");
    }
  }
  if (n_cap < 1) throw std::invalid_argument("dedup config: n_cap must be >= 1");
}

namespace {

Var init_matrix(int rows, int cols, uint64_t seed, const std::string& name) {
  Rng rng(Rng::mix(seed, Rng::hash_name(name)));
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  Tensor t({rows, cols});
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
  return Var(std::move(t), true);
}

}  // namespace

DedupParams DedupParams::init(const DedupConfig& config, uint64_t seed,
                              const std::string& prefix) {
  config.validate();
  DedupParams p;
  p.w_f = init_matrix(config.d_fused, config.d_feat, seed, prefix + ".W_f");
  p.w_fr = init_matrix(config.d_fused, config.rank_dim, seed, prefix + ".W_fR");
  p.relation = RelationParams::init(config.relation, seed, prefix + ".rm");
  p.w_s = init_matrix(static_cast<int>(config.eta_set.size()), config.d_fused,
                      seed, prefix + ".W_s");
  return p;
}

void DedupParams::collect(const std::string& prefix,
                          std::vector<std::pair<std::string, Var>>& out) const {
  out.emplace_back(prefix + ".W_f", w_f);
  out.emplace_back(prefix + ".W_fR", w_fr);
  relation.collect(prefix + ".rm", out);
  out.emplace_back(prefix + ".W_s", w_s);
}

Tensor rank_embed(const std::vector<double>& scores, int rank_dim, double wave_base) {
  const int n = static_cast<int>(scores.size());
  if (n < 1) throw std::invalid_argument("rank_embed: need at least one detection");
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&scores](int a, int b) {
    return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
  });
  Tensor out({n, rank_dim});
  for (int pos = 0; pos < n; ++pos) {
    const int det = order[static_cast<size_t>(pos)];
    const std::vector<double> e = sinusoid_embed(static_cast<double>(pos + 1), rank_dim, wave_base);
    for (int j = 0; j < rank_dim; ++j) out.at(det, j) = e[static_cast<size_t>(j)];
  }
  return out;
}

Var dedup_fused_features(const DedupInput& input, const DedupParams& params,
                         const DedupConfig& config) {
  config.validate();
  const int n = static_cast<int>(input.boxes.size());
  if (n < 1) throw std::invalid_argument("dedup_forward: need at least one detection");
  if (n > config.n_cap) {
    throw std::invalid_argument("dedup_forward: " + std::to_string(n) +
                                " detections exceed n_cap=" + std::to_string(config.n_cap) +
                                "; caller must truncate to the top n_cap by score");
  }
  const Tensor& f = input.features.value();
  if (f.rank() != 2 || f.rows() != n || f.cols() != config.d_feat) {
    throw std::invalid_argument("dedup_forward: features " + f.shape_str() + " do not match " +
                                std::to_string(n) + " detections with d_feat=" +
                                std::to_string(config.d_feat));
  }
  if (static_cast<int>(input.scores.size()) != n) {
    throw std::invalid_argument("dedup_forward: score/box count mismatch");
  }
  Var ranks = constant(rank_embed(input.scores, config.rank_dim, config.relation.wave_base));
  return add(matmul(input.features, transpose(params.w_f)),
             matmul(ranks, transpose(params.w_fr)));  // [N × d_fused]
}

Var dedup_forward(const DedupInput& input, const DedupParams& params,
                  const DedupConfig& config, const Tensor* pair_embed) {
  Var fused = dedup_fused_features(input, params, config);
  Var related = relation_module_forward({fused, input.boxes}, params.relation, config.relation,
                                        pair_embed);
  return sigmoid(matmul(related, transpose(params.w_s)));  // [N × K]
}

std::vector<double> final_scores(const std::vector<double>& s0,
                                 const std::vector<std::vector<double>>& s1_rows) {
  if (s0.size() != s1_rows.size()) {
    throw std::invalid_argument("final_scores: " + std::to_string(s0.size()) + " scores vs " +
                                std::to_string(s1_rows.size()) + " s1 rows");
  }
  std::vector<double> out(s0.size());
  for (size_t i = 0; i < s0.size(); ++i) {
    const std::vector<double>& row = s1_rows[i];
    if (row.empty()) throw std::invalid_argument("final_scores: empty s1 row");
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) /
                        static_cast<double>(row.size());
    out[i] = s0[i] * mean;
  }
  return out;
}

std::vector<int> assign_labels(const std::vector<Box>& det_boxes,
                               const std::vector<double>& det_scores,
                               const std::vector<Box>& gt_boxes, double eta) {
  if (eta <= 0.0 || eta >= 1.0) throw std::invalid_argument("assign_labels: eta must be in (0,1)");
  if (det_boxes.size() != det_scores.size()) {
    throw std::invalid_argument("assign_labels: box/score count mismatch");
  }
  const int n = static_cast<int>(det_boxes.size());
  std::vector<int> labels(static_cast<size_t>(n), 0);
  if (gt_boxes.empty()) return labels;

  // Match every detection to its max-IoU ground truth (ties: lowest index).
  std::vector<int> matched_gt(static_cast<size_t>(n), -1);
  for (int d = 0; d < n; ++d) {
    double best = 0.0;
    int best_gt = -1;
    for (size_t g = 0; g < gt_boxes.size(); ++g) {
      const double v = iou(det_boxes[static_cast<size_t>(d)], gt_boxes[g]);
      if (v > best) {
        best = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0 && best >= eta) matched_gt[static_cast<size_t>(d)] = best_gt;
  }

  // Per ground truth, the matched detection with the highest score is correct.
  for (size_t g = 0; g < gt_boxes.size(); ++g) {
    int winner = -1;
    for (int d = 0; d < n; ++d) {
      if (matched_gt[static_cast<size_t>(d)] != static_cast<int>(g)) continue;
      if (winner < 0 ||
          det_scores[static_cast<size_t>(d)] > det_scores[static_cast<size_t>(winner)]) {
        winner = d;
      }
    }
    if (winner >= 0) labels[static_cast<size_t>(winner)] = 1;
  }
  return labels;
}

Tensor assign_labels_all(const std::vector<Box>& det_boxes,
                         const std::vector<double>& det_scores,
                         const std::vector<Box>& gt_boxes,
                         const std::vector<double>& eta_set) {
  const int n = static_cast<int>(det_boxes.size());
  const int k = static_cast<int>(eta_set.size());
  Tensor labels({n, k});
  for (int j = 0; j < k; ++j) {
    const std::vector<int> col =
        assign_labels(det_boxes, det_scores, gt_boxes, eta_set[static_cast<size_t>(j)]);
    for (int i = 0; i < n; ++i) labels.at(i, j) = static_cast<double>(col[static_cast<size_t>(i)]);
  }
  return labels;
}

Var dedup_loss(const Var& s0_column, const Var& s1, const Tensor& labels) {
  const Tensor& s1v = s1.value();
  if (s1v.rank() != 2) throw std::invalid_argument("dedup_loss: s1 must be rank-2");
  check_same_shape(s1v, labels, "dedup_loss");
  const Tensor& s0v = s0_column.value();
  if (s0v.rank() != 2 || s0v.cols() != 1 || s0v.rows() != s1v.rows()) {
    throw std::invalid_argument("dedup_loss: s0 " + s0v.shape_str() + " must be [" +
                                std::to_string(s1v.rows()) + "x1]");
  }
  Tensor pos = labels;
  Tensor neg_mask({labels.rows(), labels.cols()});
  for (int64_t i = 0; i < labels.numel(); ++i) neg_mask[i] = 1.0 - labels[i];

  Var p = clamp(mul_col_broadcast(s1, s0_column), 1e-12, 1.0 - 1e-12);
  Var one_minus_p = add_scalar(neg(p), 1.0);
  Var term_pos = mul(vlog(p), constant(std::move(pos)));
  Var term_neg = mul(vlog(one_minus_p), constant(std::move(neg_mask)));
  return neg(mean_all(add(term_pos, term_neg)));
}

std::vector<ScoredDetection> dedup_inference(const std::vector<Detection>& detections,
                                             const DedupParams& params,
                                             const DedupConfig& config) {
  config.validate();
  std::vector<ScoredDetection> out;
  out.reserve(detections.size());
  for (const Detection& d : detections) out.push_back({d, 0.0, 0.0});

  std::map<int, std::vector<int>> by_class;
  for (size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].score > config.prune_threshold) {
      by_class[detections[i].class_id].push_back(static_cast<int>(i));
    }
  }

  std::vector<std::vector<int>> groups;
  groups.reserve(by_class.size());
  for (auto& [cls, idx] : by_class) {
    // Cap at the top n_cap by score, ties by input order.
    if (static_cast<int>(idx.size()) > config.n_cap) {
      std::stable_sort(idx.begin(), idx.end(), [&detections](int a, int b) {
        return detections[static_cast<size_t>(a)].score >
               detections[static_cast<size_t>(b)].score;
      });
      idx.resize(static_cast<size_t>(config.n_cap));
      std::sort(idx.begin(), idx.end());
    }
    groups.push_back(std::move(idx));
  }

  parallel_for(static_cast<int64_t>(groups.size()), [&](int64_t gi) {
    const std::vector<int>& idx = groups[static_cast<size_t>(gi)];
    const int n = static_cast<int>(idx.size());
    DedupInput input;
    Tensor feats({n, config.d_feat});
    input.scores.resize(static_cast<size_t>(n));
    input.boxes.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      const Detection& d = detections[static_cast<size_t>(idx[static_cast<size_t>(i)])];
      if (static_cast<int>(d.feature.size()) != config.d_feat) {
        throw std::invalid_argument("dedup_inference: feature dim " +
                                    std::to_string(d.feature.size()) + " != d_feat=" +
                                    std::to_string(config.d_feat));
      }
      for (int j = 0; j < config.d_feat; ++j) feats.at(i, j) = d.feature[static_cast<size_t>(j)];
      input.scores[static_cast<size_t>(i)] = d.score;
      input.boxes[static_cast<size_t>(i)] = d.box;
    }
    input.features = constant(std::move(feats));
    const Tensor s1 = dedup_forward(input, params, config).value();
    const int k = s1.cols();
    for (int i = 0; i < n; ++i) {
      double mean = 0.0;
      for (int j = 0; j < k; ++j) mean += s1.at(i, j);
      mean /= static_cast<double>(k);
      ScoredDetection& sd = out[static_cast<size_t>(idx[static_cast<size_t>(i)])];
      sd.s1 = mean;
      sd.final_score = sd.detection.score * mean;
    }
  });
  return out;
}

}  // namespace relnet
