#include "relnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "relnet/threads.hpp"

namespace relnet {

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

namespace {

struct FlatDetection {
  int scene = 0;
  Box box;
  double score = 0.0;
};

// 101-point interpolated AP for one (class, threshold).
double average_precision(std::vector<FlatDetection> dets,
                         const std::vector<std::vector<Box>>& gt_by_scene, int npos,
                         double threshold) {
  if (npos == 0) return 0.0;
  if (dets.empty()) return 0.0;
  std::sort(dets.begin(), dets.end(), [](const FlatDetection& a, const FlatDetection& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.scene, a.box.cx, a.box.cy, a.box.w, a.box.h) <
           std::tie(b.scene, b.box.cx, b.box.cy, b.box.w, b.box.h);
  });

  std::vector<std::vector<bool>> gt_used(gt_by_scene.size());
  for (size_t s = 0; s < gt_by_scene.size(); ++s) {
    gt_used[s].assign(gt_by_scene[s].size(), false);
  }

  std::vector<double> precision, recall;
  precision.reserve(dets.size());
  recall.reserve(dets.size());
  int tp = 0, fp = 0;
  for (const FlatDetection& d : dets) {
    const std::vector<Box>& gts = gt_by_scene[static_cast<size_t>(d.scene)];
    double best = 0.0;
    int best_gt = -1;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[static_cast<size_t>(d.scene)][g]) continue;
      const double v = iou(d.box, gts[g]);
      if (v > best) {
        best = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0 && best >= threshold) {
      gt_used[static_cast<size_t>(d.scene)][static_cast<size_t>(best_gt)] = true;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(npos));
  }

  // p_interp(r) = max precision over entries with recall >= r; those entries
  // form a suffix that grows leftward as r decreases.
  double ap = 0.0;
  double running_max = 0.0;
  int64_t i = static_cast<int64_t>(precision.size()) - 1;
  for (int point = 100; point >= 0; --point) {
    const double r = static_cast<double>(point) / 100.0;
    while (i >= 0 && recall[static_cast<size_t>(i)] >= r - 1e-12) {
      running_max = std::max(running_max, precision[static_cast<size_t>(i)]);
      --i;
    }
    ap += running_max;
  }
  return ap / 101.0;
}

}  // namespace

EvalReport evaluate_map(const std::vector<Scene>& scenes,
                        const std::vector<std::vector<ScoredBox>>& final_detections,
                        const std::vector<double>& iou_thresholds) {
  if (scenes.size() != final_detections.size()) {
    throw std::invalid_argument("evaluate_map: " + std::to_string(scenes.size()) +
                                " scenes vs " + std::to_string(final_detections.size()) +
                                " detection lists");
  }
  if (iou_thresholds.empty()) throw std::invalid_argument("evaluate_map: no IoU thresholds");

  // Classes with at least one ground truth take part in the mean.
  std::set<int> class_set;
  for (const Scene& s : scenes) {
    for (const GroundTruth& gt : s.ground_truths) class_set.insert(gt.class_id);
  }
  if (class_set.empty()) {
    throw std::invalid_argument("evaluate_map: no ground truths in any scene");
  }
  const std::vector<int> classes(class_set.begin(), class_set.end());

  struct PerClass {
    std::vector<std::vector<Box>> gt_by_scene;
    std::vector<FlatDetection> dets;
    int npos = 0;
  };
  std::map<int, PerClass> data;
  for (int c : classes) data[c].gt_by_scene.resize(scenes.size());
  for (size_t s = 0; s < scenes.size(); ++s) {
    for (const GroundTruth& gt : scenes[s].ground_truths) {
      PerClass& pc = data[gt.class_id];
      pc.gt_by_scene[s].push_back(gt.box);
      ++pc.npos;
    }
    for (const ScoredBox& d : final_detections[s]) {
      auto it = data.find(d.class_id);
      if (it == data.end()) continue;  // class never appears as ground truth
      it->second.dets.push_back({static_cast<int>(s), d.box, d.score});
    }
  }

  EvalReport report;
  report.iou_thresholds = iou_thresholds;
  report.per_class.resize(classes.size());
  const int t_count = static_cast<int>(iou_thresholds.size());
  parallel_for(static_cast<int64_t>(classes.size()), [&](int64_t ci) {
    const int c = classes[static_cast<size_t>(ci)];
    const PerClass& pc = data.at(c);
    ClassAp entry;
    entry.class_id = c;
    entry.ap_per_threshold.resize(static_cast<size_t>(t_count));
    for (int t = 0; t < t_count; ++t) {
      entry.ap_per_threshold[static_cast<size_t>(t)] =
          average_precision(pc.dets, pc.gt_by_scene, pc.npos,
                            iou_thresholds[static_cast<size_t>(t)]);
    }
    report.per_class[static_cast<size_t>(ci)] = std::move(entry);
  });

  double total = 0.0;
  for (const ClassAp& entry : report.per_class) {
    for (double ap : entry.ap_per_threshold) total += ap;
  }
  report.map = total / static_cast<double>(classes.size() * t_count);

  auto mean_at = [&](double threshold) {
    for (int t = 0; t < t_count; ++t) {
      if (std::abs(iou_thresholds[static_cast<size_t>(t)] - threshold) < 1e-9) {
        double sum = 0.0;
        for (const ClassAp& entry : report.per_class) {
          sum += entry.ap_per_threshold[static_cast<size_t>(t)];
        }
        return sum / static_cast<double>(classes.size());
      }
    }
    return -1.0;
  };
  report.map50 = mean_at(0.5);
  report.map75 = mean_at(0.75);
  return report;
}

std::string eval_report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["map"] = report.map;
  j["map50"] = report.map50;
  j["map75"] = report.map75;
  nlohmann::json per_class = nlohmann::json::array();
  for (const ClassAp& entry : report.per_class) {
    per_class.push_back({{"class_id", entry.class_id},
                         {"ap_per_threshold", entry.ap_per_threshold}});
  }
  j["per_class"] = per_class;
  return j.dump(2) + "\n";
}

std::vector<std::vector<ScoredBox>> raw_detections_all(const std::vector<Scene>& scenes) {
  std::vector<std::vector<ScoredBox>> out(scenes.size());
  for (size_t s = 0; s < scenes.size(); ++s) {
    for (const Detection& d : scenes[s].detections) {
      out[s].push_back({d.box, d.class_id, d.score});
    }
  }
  return out;
}

namespace {

std::map<int, std::vector<int>> group_by_class(const std::vector<Detection>& dets) {
  std::map<int, std::vector<int>> by_class;
  for (size_t i = 0; i < dets.size(); ++i) {
    by_class[dets[i].class_id].push_back(static_cast<int>(i));
  }
  return by_class;
}

}  // namespace

std::vector<std::vector<ScoredBox>> apply_nms_all(const std::vector<Scene>& scenes,
                                                  const NmsConfig& config) {
  std::vector<std::vector<ScoredBox>> out(scenes.size());
  parallel_for(static_cast<int64_t>(scenes.size()), [&](int64_t s) {
    const std::vector<Detection>& dets = scenes[static_cast<size_t>(s)].detections;
    for (const auto& [cls, idx] : group_by_class(dets)) {
      std::vector<Box> boxes;
      std::vector<double> scores;
      for (int i : idx) {
        boxes.push_back(dets[static_cast<size_t>(i)].box);
        scores.push_back(dets[static_cast<size_t>(i)].score);
      }
      for (int kept : nms(boxes, scores, config)) {
        const Detection& d = dets[static_cast<size_t>(idx[static_cast<size_t>(kept)])];
        out[static_cast<size_t>(s)].push_back({d.box, d.class_id, d.score});
      }
    }
  });
  return out;
}

std::vector<std::vector<ScoredBox>> apply_soft_nms_all(const std::vector<Scene>& scenes,
                                                       const SoftNmsConfig& config) {
  std::vector<std::vector<ScoredBox>> out(scenes.size());
  parallel_for(static_cast<int64_t>(scenes.size()), [&](int64_t s) {
    const std::vector<Detection>& dets = scenes[static_cast<size_t>(s)].detections;
    for (const auto& [cls, idx] : group_by_class(dets)) {
      std::vector<Box> boxes;
      std::vector<double> scores;
      for (int i : idx) {
        boxes.push_back(dets[static_cast<size_t>(i)].box);
        scores.push_back(dets[static_cast<size_t>(i)].score);
      }
      for (const RescoredDetection& r : soft_nms(boxes, scores, config)) {
        const Detection& d = dets[static_cast<size_t>(idx[static_cast<size_t>(r.index)])];
        out[static_cast<size_t>(s)].push_back({d.box, d.class_id, r.score});
      }
    }
  });
  return out;
}

std::vector<std::vector<ScoredBox>> apply_dedup_all(const std::vector<Scene>& scenes,
                                                    const DedupParams& params,
                                                    const DedupConfig& config) {
  std::vector<std::vector<ScoredBox>> out(scenes.size());
  parallel_for(static_cast<int64_t>(scenes.size()), [&](int64_t s) {
    const std::vector<ScoredDetection> scored =
        dedup_inference(scenes[static_cast<size_t>(s)].detections, params, config);
    for (const ScoredDetection& sd : scored) {
      if (sd.final_score > 0.0) {
        out[static_cast<size_t>(s)].push_back(
            {sd.detection.box, sd.detection.class_id, sd.final_score});
      }
    }
  });
  return out;
}

}  // namespace relnet
