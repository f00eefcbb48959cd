#include "relnet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace relnet {

std::vector<int> nms(const std::vector<Box>& boxes, const std::vector<double>& scores,
                     const NmsConfig& config) {
  if (config.iou_threshold <= 0.0 || config.iou_threshold >= 1.0) {
    throw std::invalid_argument("nms: iou_threshold must be in (0,1)");
  }
  if (boxes.size() != scores.size()) throw std::invalid_argument("nms: box/score count mismatch");
  const int n = static_cast<int>(boxes.size());
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&scores](int a, int b) {
    return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
  });

  std::vector<int> kept;
  std::vector<bool> suppressed(static_cast<size_t>(n), false);
  for (size_t i = 0; i < order.size(); ++i) {
    const int d = order[i];
    if (suppressed[static_cast<size_t>(d)]) continue;
    kept.push_back(d);
    for (size_t j = i + 1; j < order.size(); ++j) {
      const int e = order[j];
      if (suppressed[static_cast<size_t>(e)]) continue;
      if (iou(boxes[static_cast<size_t>(d)], boxes[static_cast<size_t>(e)]) >
          config.iou_threshold) {
        suppressed[static_cast<size_t>(e)] = true;
      }
    }
  }
  return kept;
}

std::vector<RescoredDetection> soft_nms(const std::vector<Box>& boxes,
                                        const std::vector<double>& scores,
                                        const SoftNmsConfig& config) {
  if (config.sigma <= 0.0) throw std::invalid_argument("soft_nms: sigma must be positive");
  if (boxes.size() != scores.size()) {
    throw std::invalid_argument("soft_nms: box/score count mismatch");
  }
  std::vector<int> remaining(boxes.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<double> current = scores;

  std::vector<RescoredDetection> selected;
  while (!remaining.empty()) {
    // Max-score remaining, ties by input order.
    size_t best = 0;
    for (size_t i = 1; i < remaining.size(); ++i) {
      if (current[static_cast<size_t>(remaining[i])] >
          current[static_cast<size_t>(remaining[best])]) {
        best = i;
      }
    }
    const int d = remaining[best];
    selected.push_back({d, current[static_cast<size_t>(d)]});
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));

    std::vector<int> survivors;
    survivors.reserve(remaining.size());
    for (int e : remaining) {
      const double v = iou(boxes[static_cast<size_t>(d)], boxes[static_cast<size_t>(e)]);
      current[static_cast<size_t>(e)] *= std::exp(-(v * v) / config.sigma);
      if (current[static_cast<size_t>(e)] >= config.score_floor) survivors.push_back(e);
    }
    remaining = std::move(survivors);
  }
  return selected;
}

}  // namespace relnet
