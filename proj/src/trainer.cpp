#include "relnet/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "relnet/rng.hpp"
#include "relnet/threads.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace relnet {

void TrainConfig::validate() const {
  if (lr <= 0.0) throw std::invalid_argument("train config: lr must be positive");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("train config: momentum must be in [0,1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("train config: weight_decay must be >= 0");
  if (iterations < 0) throw std::invalid_argument("train config: iterations must be >= 0");
  if (lr_drop_factor <= 0.0 || lr_drop_at < 0.0 || lr_drop_at > 1.0) {
    throw std::invalid_argument("train config: invalid lr schedule");
  }
  if (log_interval < 1) throw std::invalid_argument("train config: log_interval must be >= 1");
}

double lr_at(const TrainConfig& config, int iteration) {
  const int drop_point =
      static_cast<int>(std::floor(config.lr_drop_at * static_cast<double>(config.iterations)));
  return iteration < drop_point ? config.lr : config.lr * config.lr_drop_factor;
}

void sgd_step(const std::vector<std::pair<std::string, Var>>& params, SgdState& state,
              double lr, double momentum, double weight_decay) {
  for (const auto& [name, var] : params) {
    Var p = var;
    Tensor& value = p.mutable_value();
    const Tensor& grad = p.grad();
    check_same_shape(value, grad, "sgd_step");
    auto [it, inserted] = state.velocity.try_emplace(name, Tensor::zeros(value.shape()));
    Tensor& v = it->second;
    check_same_shape(value, v, "sgd_step");
    for (int64_t i = 0; i < value.numel(); ++i) {
      v[i] = momentum * v[i] + grad[i] + weight_decay * value[i];
      value[i] -= lr * v[i];
    }
  }
}

// --- checkpoints ----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'R', 'E', 'L', 'N', 'E', 'T', 'C', 'K'};

uint64_t fnv1a(const char* data, size_t len) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json header;
  header["kind"] = ckpt.kind;
  header["config"] = ckpt.config_json.empty()
                         ? nlohmann::json(nullptr)
                         : nlohmann::json::parse(ckpt.config_json);
  header["iteration"] = ckpt.iteration;
  nlohmann::json dir = nlohmann::json::array();
  for (const auto& [name, tensor] : ckpt.tensors) {
    dir.push_back({{"name", name}, {"shape", tensor.shape()}});
  }
  header["tensors"] = dir;
  const std::string header_str = header.dump();

  std::string payload;
  for (const auto& [name, tensor] : ckpt.tensors) {
    const size_t bytes = static_cast<size_t>(tensor.numel()) * sizeof(double);
    const size_t off = payload.size();
    payload.resize(off + bytes);
    std::memcpy(payload.data() + off, tensor.data().data(), bytes);
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_raw(out, ckpt.version);
  const uint64_t header_len = header_str.size();
  write_raw(out, header_len);
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  const uint64_t checksum = fnv1a(payload.data(), payload.size());
  write_raw(out, checksum);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint integrity error: bad magic in " + path);
  }
  Checkpoint ckpt;
  read_raw(in, ckpt.version);
  if (!in) throw std::runtime_error("checkpoint integrity error: truncated header");
  if (ckpt.version != 1) {
    throw std::runtime_error("checkpoint version mismatch: got " +
                             std::to_string(ckpt.version) + ", expected 1");
  }
  uint64_t header_len = 0;
  read_raw(in, header_len);
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("checkpoint integrity error: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("checkpoint integrity error: bad header: ") + e.what());
  }
  ckpt.kind = header.at("kind").get<std::string>();
  ckpt.config_json = header.at("config").is_null() ? "" : header.at("config").dump();
  ckpt.iteration = header.at("iteration").get<int64_t>();

  size_t payload_bytes = 0;
  std::vector<std::pair<std::string, std::vector<int>>> dir;
  for (const auto& entry : header.at("tensors")) {
    const auto shape = entry.at("shape").get<std::vector<int>>();
    int64_t numel = 1;
    for (int d : shape) {
      if (d <= 0) throw std::runtime_error("checkpoint integrity error: bad tensor shape");
      numel *= d;
    }
    payload_bytes += static_cast<size_t>(numel) * sizeof(double);
    dir.emplace_back(entry.at("name").get<std::string>(), shape);
  }

  std::string payload(payload_bytes, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(payload_bytes));
  if (!in || in.gcount() != static_cast<std::streamsize>(payload_bytes)) {
    throw std::runtime_error("checkpoint integrity error: tensor payload truncated");
  }
  uint64_t checksum = 0;
  read_raw(in, checksum);
  if (!in) throw std::runtime_error("checkpoint integrity error: missing checksum");
  in.peek();
  if (!in.eof()) throw std::runtime_error("checkpoint integrity error: trailing bytes");
  if (checksum != fnv1a(payload.data(), payload.size())) {
    throw std::runtime_error("checkpoint integrity error: checksum mismatch");
  }

  size_t off = 0;
  for (const auto& [name, shape] : dir) {
    Tensor t(shape);
    const size_t bytes = static_cast<size_t>(t.numel()) * sizeof(double);
    std::memcpy(t.data().data(), payload.data() + off, bytes);
    off += bytes;
    ckpt.tensors.emplace_back(name, std::move(t));
  }
  return ckpt;
}

Checkpoint checkpoint_from_params(const std::string& kind, const std::string& config_json,
                                  int64_t iteration,
                                  const std::vector<std::pair<std::string, Var>>& params) {
  Checkpoint ckpt;
  ckpt.kind = kind;
  ckpt.config_json = config_json;
  ckpt.iteration = iteration;
  for (const auto& [name, var] : params) ckpt.tensors.emplace_back(name, var.value());
  return ckpt;
}

namespace {
constexpr const char* kVelocityPrefix = "opt.velocity.";
}

void load_params_from_checkpoint(const Checkpoint& ckpt,
                                 const std::vector<std::pair<std::string, Var>>& params) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, tensor] : ckpt.tensors) by_name[name] = &tensor;
  for (const auto& [name, var] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw std::runtime_error("checkpoint missing tensor '" + name + "'");
    }
    Var p = var;
    if (!p.value().same_shape(*it->second)) {
      throw std::runtime_error("checkpoint tensor '" + name + "' has shape " +
                               it->second->shape_str() + ", expected " +
                               p.value().shape_str());
    }
    p.mutable_value() = *it->second;
    by_name.erase(it);
  }
  for (const auto& [name, tensor] : by_name) {
    if (name.rfind(kVelocityPrefix, 0) != 0) {
      throw std::runtime_error("checkpoint has unused tensor '" + name + "'");
    }
  }
}

Checkpoint make_training_checkpoint(const std::string& kind, const std::string& config_json,
                                    int64_t iteration,
                                    const std::vector<std::pair<std::string, Var>>& params,
                                    const SgdState& state) {
  Checkpoint ckpt = checkpoint_from_params(kind, config_json, iteration, params);
  for (const auto& [name, v] : state.velocity) {
    ckpt.tensors.emplace_back(kVelocityPrefix + name, v);
  }
  return ckpt;
}

namespace {

// Restores parameters, optimizer velocity, and the iteration counter.
int resume_from(const Checkpoint& ckpt,
                const std::vector<std::pair<std::string, Var>>& params, SgdState& state) {
  load_params_from_checkpoint(ckpt, params);
  for (const auto& [name, tensor] : ckpt.tensors) {
    if (name.rfind(kVelocityPrefix, 0) == 0) {
      state.velocity[name.substr(std::string(kVelocityPrefix).size())] = tensor;
    }
  }
  return static_cast<int>(ckpt.iteration);
}

}  // namespace

int scene_index_at(uint64_t seed, int iteration, int scene_count) {
  Rng rng(Rng::mix(Rng::mix(seed, Rng::hash_name("scene_order")),
                   static_cast<uint64_t>(iteration)));
  return rng.uniform_int(0, scene_count - 1);
}

// --- training ----------------------------------------------------------------

SceneTargets make_recognition_targets(const Scene& scene) {
  const int n = static_cast<int>(scene.detections.size());
  SceneTargets targets;
  targets.labels.assign(static_cast<size_t>(n), 0);
  targets.regression_targets = Tensor({std::max(n, 1), 4});
  for (int i = 0; i < n; ++i) {
    const Detection& det = scene.detections[static_cast<size_t>(i)];
    double best = 0.0;
    int best_gt = -1;
    for (size_t g = 0; g < scene.ground_truths.size(); ++g) {
      const double v = iou(det.box, scene.ground_truths[g].box);
      if (v > best) {
        best = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0 && best >= kForegroundIou) {
      const GroundTruth& gt = scene.ground_truths[static_cast<size_t>(best_gt)];
      targets.labels[static_cast<size_t>(i)] = gt.class_id;
      const std::array<double, 4> delta = encode_box_delta(det.box, gt.box);
      for (int j = 0; j < 4; ++j) targets.regression_targets.at(i, j) = delta[static_cast<size_t>(j)];
    }
  }
  return targets;
}

namespace {

Tensor features_of(const std::vector<Detection>& dets, int d_feat) {
  Tensor f({static_cast<int>(dets.size()), d_feat});
  for (size_t i = 0; i < dets.size(); ++i) {
    if (static_cast<int>(dets[i].feature.size()) != d_feat) {
      throw std::invalid_argument("detection feature dim " +
                                  std::to_string(dets[i].feature.size()) + " != " +
                                  std::to_string(d_feat));
    }
    for (int j = 0; j < d_feat; ++j) f.at(static_cast<int>(i), j) = dets[i].feature[static_cast<size_t>(j)];
  }
  return f;
}

struct ClassGroup {
  int class_id = 0;
  std::vector<int> indices;  // top n_cap by score, ascending input order
};

std::vector<ClassGroup> class_groups(const std::vector<Detection>& dets, int n_cap) {
  std::map<int, std::vector<int>> by_class;
  for (size_t i = 0; i < dets.size(); ++i) {
    by_class[dets[i].class_id].push_back(static_cast<int>(i));
  }
  std::vector<ClassGroup> groups;
  for (auto& [cls, idx] : by_class) {
    if (static_cast<int>(idx.size()) > n_cap) {
      std::stable_sort(idx.begin(), idx.end(), [&dets](int a, int b) {
        return dets[static_cast<size_t>(a)].score > dets[static_cast<size_t>(b)].score;
      });
      idx.resize(static_cast<size_t>(n_cap));
      std::sort(idx.begin(), idx.end());
    }
    groups.push_back({cls, std::move(idx)});
  }
  return groups;
}

}  // namespace

Var scene_dedup_loss(const std::vector<Detection>& detections,
                     const std::vector<GroundTruth>& ground_truths,
                     const DedupParams& params, const DedupConfig& config) {
  const int k = static_cast<int>(config.eta_set.size());
  Var total;
  int64_t count = 0;
  for (const ClassGroup& group : class_groups(detections, config.n_cap)) {
    DedupInput input;
    std::vector<Detection> dets;
    dets.reserve(group.indices.size());
    for (int i : group.indices) dets.push_back(detections[static_cast<size_t>(i)]);
    input.features = constant(features_of(dets, config.d_feat));
    for (const Detection& d : dets) {
      input.scores.push_back(d.score);
      input.boxes.push_back(d.box);
    }
    std::vector<Box> gt_boxes;
    for (const GroundTruth& gt : ground_truths) {
      if (gt.class_id == group.class_id) gt_boxes.push_back(gt.box);
    }
    const Tensor labels =
        assign_labels_all(input.boxes, input.scores, gt_boxes, config.eta_set);

    Tensor s0({static_cast<int>(dets.size()), 1});
    for (size_t i = 0; i < dets.size(); ++i) s0.at(static_cast<int>(i), 0) = dets[i].score;

    Var s1 = dedup_forward(input, params, config);
    const int64_t terms = static_cast<int64_t>(dets.size()) * k;
    Var contribution = scale(dedup_loss(constant(std::move(s0)), s1, labels),
                             static_cast<double>(terms));
    total = total.defined() ? add(total, contribution) : contribution;
    count += terms;
  }
  if (!total.defined()) {
    throw std::invalid_argument("scene_dedup_loss: scene has no detections");
  }
  return scale(total, 1.0 / static_cast<double>(count));
}

DedupTrainResult train_dedup(const std::vector<Scene>& scenes, const DedupConfig& config,
                             const TrainConfig& train, const Checkpoint* resume,
                             int stop_after) {
  config.validate();
  train.validate();
  if (scenes.empty()) throw std::invalid_argument("train_dedup: empty training set");

  DedupTrainResult result;
  result.params = DedupParams::init(config, train.seed, "dedup");
  std::vector<std::pair<std::string, Var>> named;
  result.params.collect("dedup", named);

  int start = 0;
  if (resume) start = resume_from(*resume, named, result.state);
  const int stop = stop_after >= 0 ? std::min(stop_after, train.iterations) : train.iterations;
  for (int iter = start; iter < stop; ++iter) {
    const Scene& scene = scenes[static_cast<size_t>(
        scene_index_at(train.seed, iter, static_cast<int>(scenes.size())))];
    for (auto& [name, v] : named) v.zero_grad();
    Var loss = scene_dedup_loss(scene.detections, scene.ground_truths, result.params, config);
    backward(loss);
    sgd_step(named, result.state, lr_at(train, iter), train.momentum, train.weight_decay);
    if (iter % train.log_interval == 0 || iter + 1 == stop) {
      result.loss_log.emplace_back(iter, loss.value()[0]);
    }
  }
  return result;
}

HeadTrainResult train_head(const std::vector<Scene>& scenes, const HeadConfig& config,
                           const TrainConfig& train, const Checkpoint* resume,
                           int stop_after) {
  config.validate();
  train.validate();
  if (scenes.empty()) throw std::invalid_argument("train_head: empty training set");

  HeadTrainResult result;
  result.params = HeadParams::init(config, train.seed, "head");
  std::vector<std::pair<std::string, Var>> named;
  result.params.collect("head", named);

  int start = 0;
  if (resume) start = resume_from(*resume, named, result.state);
  const int stop = stop_after >= 0 ? std::min(stop_after, train.iterations) : train.iterations;
  for (int iter = start; iter < stop; ++iter) {
    const Scene& scene = scenes[static_cast<size_t>(
        scene_index_at(train.seed, iter, static_cast<int>(scenes.size())))];
    if (scene.detections.empty()) continue;
    for (auto& [name, v] : named) v.zero_grad();

    std::vector<Box> boxes;
    for (const Detection& d : scene.detections) boxes.push_back(d.box);
    const SceneTargets targets = make_recognition_targets(scene);
    HeadOutput out = head_forward(constant(features_of(scene.detections, config.d_in)), boxes,
                                  result.params, config);
    Var loss = scale(recognition_loss(out, targets.labels, targets.regression_targets),
                     train.recognition_loss_weight);
    backward(loss);
    sgd_step(named, result.state, lr_at(train, iter), train.momentum, train.weight_decay);
    if (iter % train.log_interval == 0 || iter + 1 == stop) {
      result.loss_log.emplace_back(iter, loss.value()[0]);
    }
  }
  return result;
}

namespace {

// Detection sets the head implies for one scene: per foreground class, every
// proposal with the head's class probability and final hidden features. The
// head contributes scores and features; boxes stay the proposal boxes, so
// the duplicate-removal geometry does not depend on head parameters.
struct HeadDetections {
  Var features;   // [N x d_hidden]
  Tensor scores;  // [N x (C+1)] values
};

HeadDetections head_detections(const HeadOutput& out) {
  return {out.final_features, out.class_scores.value()};
}

}  // namespace

E2eTrainResult train_end_to_end(const std::vector<Scene>& scenes, const HeadConfig& head_config,
                                const DedupConfig& dedup_config, const TrainConfig& train,
                                const Checkpoint* resume, int stop_after) {
  head_config.validate();
  train.validate();
  if (train.dedup_loss_weight != 0.0) {
    dedup_config.validate();
    if (dedup_config.d_feat != head_config.d_hidden) {
      throw std::invalid_argument("train_end_to_end: dedup d_feat (" +
                                  std::to_string(dedup_config.d_feat) +
                                  ") must equal head d_hidden (" +
                                  std::to_string(head_config.d_hidden) + ")");
    }
  }
  if (scenes.empty()) throw std::invalid_argument("train_end_to_end: empty training set");

  E2eTrainResult result;
  result.head = HeadParams::init(head_config, train.seed, "head");
  std::vector<std::pair<std::string, Var>> named;
  result.head.collect("head", named);
  const bool with_dedup = train.dedup_loss_weight != 0.0;
  if (with_dedup) {
    result.dedup = DedupParams::init(dedup_config, train.seed, "dedup");
    result.dedup.collect("dedup", named);
  }

  const int k = static_cast<int>(dedup_config.eta_set.size());
  int start = 0;
  if (resume) start = resume_from(*resume, named, result.state);
  const int stop = stop_after >= 0 ? std::min(stop_after, train.iterations) : train.iterations;
  for (int iter = start; iter < stop; ++iter) {
    const Scene& scene = scenes[static_cast<size_t>(
        scene_index_at(train.seed, iter, static_cast<int>(scenes.size())))];
    if (scene.detections.empty()) continue;
    for (auto& [name, v] : named) v.zero_grad();

    std::vector<Box> proposals;
    for (const Detection& d : scene.detections) proposals.push_back(d.box);
    const SceneTargets targets = make_recognition_targets(scene);
    HeadOutput out = head_forward(constant(features_of(scene.detections, head_config.d_in)),
                                  proposals, result.head, head_config);
    Var loss = scale(recognition_loss(out, targets.labels, targets.regression_targets),
                     train.recognition_loss_weight);

    if (with_dedup) {
      const HeadDetections hd = head_detections(out);
      const int n_all = static_cast<int>(proposals.size());
      const int c1 = hd.scores.cols();
      const int d_hidden = hd.features.value().cols();
      Var dedup_total;
      int64_t terms = 0;
      for (int cls = 1; cls < c1; ++cls) {
        // Top n_cap proposals by this class's score, in ascending input order.
        std::vector<int> keep(static_cast<size_t>(n_all));
        std::iota(keep.begin(), keep.end(), 0);
        if (n_all > dedup_config.n_cap) {
          std::stable_sort(keep.begin(), keep.end(), [&](int a, int b) {
            return hd.scores.at(a, cls) > hd.scores.at(b, cls);
          });
          keep.resize(static_cast<size_t>(dedup_config.n_cap));
          std::sort(keep.begin(), keep.end());
        }
        const int n = static_cast<int>(keep.size());

        std::vector<double> s0_values(static_cast<size_t>(n));
        std::vector<int64_t> score_idx(static_cast<size_t>(n));
        std::vector<Box> boxes(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
          const int src = keep[static_cast<size_t>(i)];
          s0_values[static_cast<size_t>(i)] = hd.scores.at(src, cls);
          score_idx[static_cast<size_t>(i)] = static_cast<int64_t>(src) * c1 + cls;
          boxes[static_cast<size_t>(i)] = proposals[static_cast<size_t>(src)];
        }
        std::vector<Box> gt_boxes;
        for (const GroundTruth& gt : scene.ground_truths) {
          if (gt.class_id == cls) gt_boxes.push_back(gt.box);
        }
        // Labels follow the current head scores, so the correct-detection
        // assignment can move while training.
        const Tensor labels = assign_labels_all(boxes, s0_values, gt_boxes, dedup_config.eta_set);

        DedupInput input;
        if (n == n_all) {
          input.features = hd.features;
        } else {
          std::vector<int64_t> feat_idx;
          feat_idx.reserve(static_cast<size_t>(n) * d_hidden);
          for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d_hidden; ++j) {
              feat_idx.push_back(static_cast<int64_t>(keep[static_cast<size_t>(i)]) * d_hidden + j);
            }
          }
          input.features = reshape(pick(hd.features, std::move(feat_idx)), {n, d_hidden});
        }
        input.scores = s0_values;
        input.boxes = boxes;
        Var s1 = dedup_forward(input, result.dedup, dedup_config);
        Var s0_col = reshape(pick(out.class_scores, std::move(score_idx)), {n, 1});
        Var class_loss = dedup_loss(s0_col, s1, labels);
        const int64_t class_terms = static_cast<int64_t>(n) * k;
        Var contribution = scale(class_loss, static_cast<double>(class_terms));
        dedup_total = dedup_total.defined() ? add(dedup_total, contribution) : contribution;
        terms += class_terms;
      }
      if (dedup_total.defined()) {
        loss = add(loss, scale(dedup_total,
                               train.dedup_loss_weight / static_cast<double>(terms)));
      }
    }

    backward(loss);
    sgd_step(named, result.state, lr_at(train, iter), train.momentum, train.weight_decay);
    if (iter % train.log_interval == 0 || iter + 1 == stop) {
      result.loss_log.emplace_back(iter, loss.value()[0]);
    }
  }
  return result;
}

std::vector<Scene> head_rescored_scenes(const std::vector<Scene>& scenes,
                                        const HeadParams& params, const HeadConfig& config) {
  std::vector<Scene> out(scenes.size());
  parallel_for(static_cast<int64_t>(scenes.size()), [&](int64_t si) {
    const Scene& scene = scenes[static_cast<size_t>(si)];
    Scene rescored;
    rescored.ground_truths = scene.ground_truths;
    if (!scene.detections.empty()) {
      std::vector<Box> proposals;
      for (const Detection& d : scene.detections) proposals.push_back(d.box);
      HeadOutput ho = head_forward(constant(features_of(scene.detections, config.d_in)),
                                   proposals, params, config);
      const HeadDetections hd = head_detections(ho);
      const Tensor& feats = hd.features.value();
      const int n = static_cast<int>(proposals.size());
      const int c1 = hd.scores.cols();
      for (int cls = 1; cls < c1; ++cls) {
        for (int i = 0; i < n; ++i) {
          Detection det;
          det.box = proposals[static_cast<size_t>(i)];
          det.class_id = cls;
          det.score = hd.scores.at(i, cls);
          det.feature.resize(static_cast<size_t>(feats.cols()));
          for (int j = 0; j < feats.cols(); ++j) {
            det.feature[static_cast<size_t>(j)] = feats.at(i, j);
          }
          rescored.detections.push_back(std::move(det));
        }
      }
    }
    out[static_cast<size_t>(si)] = std::move(rescored);
  });
  return out;
}

}  // namespace relnet
