#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relnet/detection.hpp"
#include "relnet/relation.hpp"

namespace relnet {

// Learned duplicate removal: rank embedding + feature fusion, one relation
// module over the fused features, then a per-threshold binary classifier.
// The final score of a detection is s0 * s1.
struct DedupConfig {
  int d_feat = 1024;   // incoming appearance feature dim
  int d_fused = 128;   // fused feature dim (= relation.d_f)
  int rank_dim = 128;  // rank embedding dim, even
  RelationConfig relation{16, 64, 64, 128, GeoMode::kOurs};
  std::vector<double> eta_set = {0.5, 0.6, 0.7, 0.8, 0.9};
  int n_cap = 100;               // max detections per class
  double prune_threshold = 0.01; // s0 cutoff at inference

  void validate() const;
};

struct DedupParams {
  Var w_f;   // [d_fused × d_feat]
  Var w_fr;  // [d_fused × rank_dim]
  RelationParams relation;
  Var w_s;   // [|eta_set| × d_fused]

  static DedupParams init(const DedupConfig& config, uint64_t seed,
                          const std::string& name_prefix = "dedup");
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Var>>& out) const;
};

// One class's detections, decomposed for the network. scores drive the rank
// feature only (gradients do not flow through the sort); in end-to-end
// training `features` carries gradients back into the head.
struct DedupInput {
  Var features;                // [N × d_feat]
  std::vector<double> scores;  // s0, used for ranking
  std::vector<Box> boxes;
};

// Rank feature: detections are ranked by s0 descending (stable on input
// order); row n is the sinusoid embedding of detection n's rank in [1, N].
Tensor rank_embed(const std::vector<double>& scores, int rank_dim,
                  double wave_base = kWaveBase);

// Rank-fused appearance features entering the relation module: [N × d_fused]
// rows of W_f * feature + W_fR * rank_embed.
Var dedup_fused_features(const DedupInput& input, const DedupParams& params,
                         const DedupConfig& config);

// Returns per-detection, per-eta probabilities s1 in (0,1), shape [N × K].
Var dedup_forward(const DedupInput& input, const DedupParams& params,
                  const DedupConfig& config, const Tensor* pair_embed = nullptr);

// Elementwise s0 * mean_over_eta(s1) for plain score vectors.
std::vector<double> final_scores(const std::vector<double>& s0,
                                 const std::vector<std::vector<double>>& s1_rows);

// Duplicate-vs-correct labels at one IoU threshold eta: every detection whose
// best-IoU ground truth clears eta is matched to it; per ground truth the
// matched detection with the highest s0 is correct (1), everything else 0.
std::vector<int> assign_labels(const std::vector<Box>& det_boxes,
                               const std::vector<double>& det_scores,
                               const std::vector<Box>& gt_boxes, double eta);

// [N × K] 0/1 tensor, one column per eta in config order.
Tensor assign_labels_all(const std::vector<Box>& det_boxes,
                         const std::vector<double>& det_scores,
                         const std::vector<Box>& gt_boxes,
                         const std::vector<double>& eta_set);

// Mean over detections and eta heads of the binary cross entropy on the
// final score s0*s1, probabilities clamped to [1e-12, 1-1e-12].
Var dedup_loss(const Var& s0_column, const Var& s1, const Tensor& labels);

struct ScoredDetection {
  Detection detection;
  double s1 = 0.0;          // averaged over eta heads; 0 if pruned
  double final_score = 0.0; // s0 * s1
};

// Per-class inference: prune s0 <= prune_threshold, cap at top n_cap by s0,
// run the network, multiply scores. Pruned detections keep final_score 0.
// Output order matches input order.
std::vector<ScoredDetection> dedup_inference(const std::vector<Detection>& detections,
                                             const DedupParams& params,
                                             const DedupConfig& config);

}  // namespace relnet
