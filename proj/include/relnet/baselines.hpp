#pragma once

#include <vector>

#include "relnet/detection.hpp"

namespace relnet {

struct NmsConfig {
  double iou_threshold = 0.5;  // N_t
};

struct SoftNmsConfig {
  double sigma = 0.5;          // Gaussian rescoring parameter
  double score_floor = 1e-4;   // detections rescored below this are dropped
};

// Greedy NMS over one class's detections: repeatedly keep the highest-scored
// remaining detection, discard the rest with IoU > N_t against it. Ties by
// input order. Returns kept indices in selection order.
std::vector<int> nms(const std::vector<Box>& boxes, const std::vector<double>& scores,
                     const NmsConfig& config);

struct RescoredDetection {
  int index = 0;    // into the input
  double score = 0.0;
};

// Gaussian SoftNMS: iteratively select the max-score detection, decay every
// remaining score by exp(-IoU^2 / sigma), drop those below score_floor.
// Returns all selected detections with their final scores, in selection order.
std::vector<RescoredDetection> soft_nms(const std::vector<Box>& boxes,
                                        const std::vector<double>& scores,
                                        const SoftNmsConfig& config);

}  // namespace relnet
