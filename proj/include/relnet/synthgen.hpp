#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relnet/detection.hpp"

namespace relnet {

// Synthetic detection scenes: ground truths are sampled boxes; each spawns a
// cloud of jittered duplicate detections whose score is a noisy increasing
// function of IoU and whose feature mixes a class prototype (scaled by
// localization quality), projected box geometry, and noise. Background
// detections carry no prototype. Everything is a pure function of the seed.
struct GenConfig {
  uint64_t seed = 17;        // scene sampling
  uint64_t world_seed = 7;   // class prototypes + feature projection, shared
                             // across train/eval splits of one dataset family
  int num_scenes = 100;
  int num_classes = 4;       // class ids 1..num_classes (0 = background label)
  double scene_w = 128.0;
  double scene_h = 128.0;
  int gt_min = 1;
  int gt_max = 4;
  int duplicates_per_gt = 6;
  int background_count = 6;
  double cluster_prob = 0.5;  // chance a ground truth spawns near the previous one
  double cluster_offset = 0.45; // center distance of clustered spawns, x anchor size
  double pos_jitter = 0.35;    // duplicate center offset, fraction of box size
  double size_jitter = 0.25;   // duplicate log-size noise
  double score_slope = 0.9;    // s0 = clamp(slope*IoU + offset + noise, 0, 1)
  double score_offset = 0.05;
  double score_noise = 0.05;
  int d_in = 64;               // appearance feature dimension
  double proto_scale = 1.0;
  double box_mix = 0.5;
  double feat_noise = 0.3;
  double bg_score_lo = 0.02;
  double bg_score_hi = 0.30;

  void validate() const;
};

std::vector<Scene> generate(const GenConfig& config);

// JSON-lines scene file, one scene per line:
//   {"scene_id":i,"gts":[{"box":[cx,cy,w,h],"class":c},...],
//    "dets":[{"box":[...],"class":c,"score":s,"feat":[...]},...]}
// Reals are written as shortest round-trip decimals; read(write(s)) == s.
void write_scenes(const std::vector<Scene>& scenes, const std::string& path);
std::vector<Scene> read_scenes(const std::string& path);

std::string scenes_to_string(const std::vector<Scene>& scenes);
std::vector<Scene> scenes_from_string(const std::string& text);

}  // namespace relnet
