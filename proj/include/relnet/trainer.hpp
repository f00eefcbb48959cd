#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "relnet/dedup.hpp"
#include "relnet/detection.hpp"
#include "relnet/head.hpp"

namespace relnet {

struct TrainConfig {
  double lr = 2e-3;
  double lr_drop_factor = 0.1;
  double lr_drop_at = 2.0 / 3.0;  // fraction of iterations after which lr drops
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int iterations = 8000;
  uint64_t seed = 1;
  double recognition_loss_weight = 1.0;
  double dedup_loss_weight = 1.0;
  int log_interval = 100;

  void validate() const;
};

double lr_at(const TrainConfig& config, int iteration);

// v <- momentum*v + grad + weight_decay*param; param <- param - lr*v
struct SgdState {
  std::map<std::string, Tensor> velocity;
};
void sgd_step(const std::vector<std::pair<std::string, Var>>& params, SgdState& state,
              double lr, double momentum, double weight_decay);

using LossLog = std::vector<std::pair<int, double>>;  // (iteration, loss)

// --- checkpoints ----------------------------------------------------------

// Versioned binary container: magic, version, JSON header (kind, config
// snapshot, iteration, tensor directory), then row-major little-endian
// doubles, then an FNV-1a checksum of the payload.
struct Checkpoint {
  uint32_t version = 1;
  std::string kind;         // "head" | "dedup" | "e2e"
  std::string config_json;  // snapshot of the configs used in training
  int64_t iteration = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint checkpoint_from_params(const std::string& kind, const std::string& config_json,
                                  int64_t iteration,
                                  const std::vector<std::pair<std::string, Var>>& params);
// Copies tensors into existing parameter Vars; names and shapes must match
// exactly.
void load_params_from_checkpoint(const Checkpoint& ckpt,
                                 const std::vector<std::pair<std::string, Var>>& params);

// --- training loops --------------------------------------------------------

// Proposals overlapping a ground truth with IoU >= 0.5 are foreground.
constexpr double kForegroundIou = 0.5;

struct SceneTargets {
  std::vector<int> labels;     // 0 = background, else ground-truth class
  Tensor regression_targets;   // [N x 4], rows valid only for foreground
};
SceneTargets make_recognition_targets(const Scene& scene);

// Per-class duplicate/correct loss over one scene's detections, averaged
// over all detection boxes and eta heads across classes.
Var scene_dedup_loss(const std::vector<Detection>& detections,
                     const std::vector<GroundTruth>& ground_truths,
                     const DedupParams& params, const DedupConfig& config);

// Training runs are resumable: a checkpoint carries parameters, optimizer
// velocity, and the iteration counter, and the scene schedule is a pure
// function of (seed, iteration), so a run stopped early (stop_after) and
// resumed reproduces the uninterrupted one bit for bit.
struct DedupTrainResult {
  DedupParams params;
  LossLog loss_log;
  SgdState state;
};
DedupTrainResult train_dedup(const std::vector<Scene>& scenes, const DedupConfig& config,
                             const TrainConfig& train, const Checkpoint* resume = nullptr,
                             int stop_after = -1);

struct HeadTrainResult {
  HeadParams params;
  LossLog loss_log;
  SgdState state;
};
HeadTrainResult train_head(const std::vector<Scene>& scenes, const HeadConfig& config,
                           const TrainConfig& train, const Checkpoint* resume = nullptr,
                           int stop_after = -1);

// Joint loss = recognition_loss_weight * recognition +
// dedup_loss_weight * dedup. Gradients reach the head both through the
// shared features and through the s0*s1 product; duplicate labels are
// recomputed from the current head outputs every iteration.
struct E2eTrainResult {
  HeadParams head;
  DedupParams dedup;
  LossLog loss_log;
  SgdState state;
};
E2eTrainResult train_end_to_end(const std::vector<Scene>& scenes, const HeadConfig& head_config,
                                const DedupConfig& dedup_config, const TrainConfig& train,
                                const Checkpoint* resume = nullptr, int stop_after = -1);

// Scene index used at one iteration; pure function of the seed.
int scene_index_at(uint64_t seed, int iteration, int scene_count);

// Optimizer velocity is checkpointed alongside parameters under this prefix.
Checkpoint make_training_checkpoint(const std::string& kind, const std::string& config_json,
                                    int64_t iteration,
                                    const std::vector<std::pair<std::string, Var>>& params,
                                    const SgdState& state);

// --- head-based detection pipeline -----------------------------------------

// Re-scores scenes through the head: every proposal spawns one detection per
// foreground class with the head's class probability as s0 and the head's
// final hidden features as appearance feature; boxes stay the proposal boxes.
std::vector<Scene> head_rescored_scenes(const std::vector<Scene>& scenes,
                                        const HeadParams& params, const HeadConfig& config);

}  // namespace relnet
