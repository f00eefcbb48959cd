#pragma once

#include <string>
#include <vector>

#include "relnet/baselines.hpp"
#include "relnet/dedup.hpp"
#include "relnet/detection.hpp"

namespace relnet {

// A final-scored detection as consumed by the evaluator.
struct ScoredBox {
  Box box;
  int class_id = 0;
  double score = 0.0;
};

struct ClassAp {
  int class_id = 0;
  std::vector<double> ap_per_threshold;
};

struct EvalReport {
  double map = 0.0;    // mean over classes and thresholds
  double map50 = 0.0;  // mean over classes at IoU 0.5 (-1 if not evaluated)
  double map75 = 0.0;
  std::vector<ClassAp> per_class;
  std::vector<double> iou_thresholds;
};

// COCO-style thresholds 0.5:0.05:0.95.
std::vector<double> default_iou_thresholds();

// 101-point interpolated average precision, mean over classes that have at
// least one ground truth. Detections are sorted by score descending with a
// content-based tie order, so the result is independent of input order.
EvalReport evaluate_map(const std::vector<Scene>& scenes,
                        const std::vector<std::vector<ScoredBox>>& final_detections,
                        const std::vector<double>& iou_thresholds = default_iou_thresholds());

std::string eval_report_to_json(const EvalReport& report);

// Per-scene duplicate-removal pipelines producing evaluator input.
std::vector<std::vector<ScoredBox>> raw_detections_all(const std::vector<Scene>& scenes);
std::vector<std::vector<ScoredBox>> apply_nms_all(const std::vector<Scene>& scenes,
                                                  const NmsConfig& config);
std::vector<std::vector<ScoredBox>> apply_soft_nms_all(const std::vector<Scene>& scenes,
                                                       const SoftNmsConfig& config);
// Learned dedup; detections whose final score is 0 (pruned) are omitted.
std::vector<std::vector<ScoredBox>> apply_dedup_all(const std::vector<Scene>& scenes,
                                                    const DedupParams& params,
                                                    const DedupConfig& config);

}  // namespace relnet
