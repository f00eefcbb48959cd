#pragma once

#include <vector>

#include "relnet/geometry.hpp"

namespace relnet {

struct GroundTruth {
  Box box;
  int class_id = 0;

  bool operator==(const GroundTruth&) const = default;
};

// One candidate detection: box, claimed class, original classification score
// s0, and an appearance feature vector.
struct Detection {
  Box box;
  int class_id = 0;
  double score = 0.0;
  std::vector<double> feature;

  bool operator==(const Detection&) const = default;
};

// Unit of training/evaluation data.
struct Scene {
  std::vector<GroundTruth> ground_truths;
  std::vector<Detection> detections;

  bool operator==(const Scene&) const = default;
};

}  // namespace relnet
