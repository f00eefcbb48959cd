#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relnet/relation.hpp"

namespace relnet {

// Instance recognition head: fc -> relu -> (RM x r1) -> fc -> relu ->
// (RM x r2) -> linear class scores + class-agnostic box deltas. With
// r1 = r2 = 0 this is the plain two-fc baseline.
struct HeadConfig {
  int d_in = 256;
  int d_hidden = 1024;
  int r1 = 1;
  int r2 = 1;
  int num_classes = 80;  // foreground classes; scores cover num_classes + 1
  RelationConfig relation;

  void validate() const;
};

struct HeadParams {
  Var fc1_w, fc1_b;           // [d_hidden × d_in], [1 × d_hidden]
  Var fc2_w, fc2_b;           // [d_hidden × d_hidden], [1 × d_hidden]
  Var cls_w, cls_b;           // [(C+1) × d_hidden], [1 × (C+1)]
  Var box_w, box_b;           // [4 × d_hidden], [1 × 4]
  std::vector<RelationParams> rm1;  // r1 stacked modules, independent weights
  std::vector<RelationParams> rm2;  // r2 stacked modules

  static HeadParams init(const HeadConfig& config, uint64_t seed,
                         const std::string& name_prefix = "head");
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Var>>& out) const;
  int64_t learnable_count() const;
};

struct HeadOutput {
  Var class_logits;  // [N × (C+1)]
  Var class_scores;  // softmax rows of the logits
  Var box_deltas;    // [N × 4]
  Var final_features;  // [N × d_hidden], the features after the last stage
};

HeadOutput head_forward(const Var& roi_features, const std::vector<Box>& boxes,
                        const HeadParams& params, const HeadConfig& config);

// Softmax cross entropy averaged over all proposals plus smooth-L1 box loss
// averaged over foreground proposals. labels[i] in [0, C], 0 = background;
// regression_targets row i is consulted only when labels[i] > 0.
Var recognition_loss(const HeadOutput& output, const std::vector<int>& labels,
                     const Tensor& regression_targets);

}  // namespace relnet
