#include "relnet/config.hpp"

#include <fstream>
#include <stdexcept>

namespace relnet {

nlohmann::json to_json(const RelationConfig& c) {
  return {{"num_heads", c.num_heads}, {"d_k", c.d_k},   {"d_g", c.d_g},
          {"d_f", c.d_f},             {"geo_mode", geo_mode_name(c.geo_mode)},
          {"eps", c.eps},             {"wave_base", c.wave_base}};
}

nlohmann::json to_json(const HeadConfig& c) {
  return {{"d_in", c.d_in},   {"d_hidden", c.d_hidden},
          {"r1", c.r1},       {"r2", c.r2},
          {"num_classes", c.num_classes}, {"relation", to_json(c.relation)}};
}

nlohmann::json to_json(const DedupConfig& c) {
  return {{"d_feat", c.d_feat},       {"d_fused", c.d_fused},
          {"rank_dim", c.rank_dim},   {"relation", to_json(c.relation)},
          {"eta_set", c.eta_set},     {"n_cap", c.n_cap},
          {"prune_threshold", c.prune_threshold}};
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"lr_drop_factor", c.lr_drop_factor},
          {"lr_drop_at", c.lr_drop_at},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"iterations", c.iterations},
          {"seed", c.seed},
          {"recognition_loss_weight", c.recognition_loss_weight},
          {"dedup_loss_weight", c.dedup_loss_weight},
          {"log_interval", c.log_interval}};
}

nlohmann::json to_json(const GenConfig& c) {
  return {{"seed", c.seed},
          {"world_seed", c.world_seed},
          {"num_scenes", c.num_scenes},
          {"num_classes", c.num_classes},
          {"scene_w", c.scene_w},
          {"scene_h", c.scene_h},
          {"gt_min", c.gt_min},
          {"gt_max", c.gt_max},
          {"duplicates_per_gt", c.duplicates_per_gt},
          {"background_count", c.background_count},
          {"cluster_prob", c.cluster_prob},
          {"cluster_offset", c.cluster_offset},
          {"pos_jitter", c.pos_jitter},
          {"size_jitter", c.size_jitter},
          {"score_slope", c.score_slope},
          {"score_offset", c.score_offset},
          {"score_noise", c.score_noise},
          {"d_in", c.d_in},
          {"proto_scale", c.proto_scale},
          {"box_mix", c.box_mix},
          {"feat_noise", c.feat_noise},
          {"bg_score_lo", c.bg_score_lo},
          {"bg_score_hi", c.bg_score_hi}};
}

RelationConfig relation_config_from_json(const nlohmann::json& j, RelationConfig c) {
  c.num_heads = j.value("num_heads", c.num_heads);
  c.d_k = j.value("d_k", c.d_k);
  c.d_g = j.value("d_g", c.d_g);
  c.d_f = j.value("d_f", c.d_f);
  if (j.contains("geo_mode")) c.geo_mode = geo_mode_from_name(j.at("geo_mode").get<std::string>());
  c.eps = j.value("eps", c.eps);
  c.wave_base = j.value("wave_base", c.wave_base);
  return c;
}

HeadConfig head_config_from_json(const nlohmann::json& j, HeadConfig c) {
  c.d_in = j.value("d_in", c.d_in);
  c.d_hidden = j.value("d_hidden", c.d_hidden);
  c.r1 = j.value("r1", c.r1);
  c.r2 = j.value("r2", c.r2);
  c.num_classes = j.value("num_classes", c.num_classes);
  if (j.contains("relation")) c.relation = relation_config_from_json(j.at("relation"), c.relation);
  return c;
}

DedupConfig dedup_config_from_json(const nlohmann::json& j, DedupConfig c) {
  c.d_feat = j.value("d_feat", c.d_feat);
  c.d_fused = j.value("d_fused", c.d_fused);
  c.rank_dim = j.value("rank_dim", c.rank_dim);
  if (j.contains("relation")) c.relation = relation_config_from_json(j.at("relation"), c.relation);
  if (j.contains("eta_set")) c.eta_set = j.at("eta_set").get<std::vector<double>>();
  c.n_cap = j.value("n_cap", c.n_cap);
  c.prune_threshold = j.value("prune_threshold", c.prune_threshold);
  return c;
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  c.lr = j.value("lr", c.lr);
  c.lr_drop_factor = j.value("lr_drop_factor", c.lr_drop_factor);
  c.lr_drop_at = j.value("lr_drop_at", c.lr_drop_at);
  c.momentum = j.value("momentum", c.momentum);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.iterations = j.value("iterations", c.iterations);
  c.seed = j.value("seed", c.seed);
  c.recognition_loss_weight = j.value("recognition_loss_weight", c.recognition_loss_weight);
  c.dedup_loss_weight = j.value("dedup_loss_weight", c.dedup_loss_weight);
  c.log_interval = j.value("log_interval", c.log_interval);
  return c;
}

GenConfig gen_config_from_json(const nlohmann::json& j, GenConfig c) {
  c.seed = j.value("seed", c.seed);
  c.world_seed = j.value("world_seed", c.world_seed);
  c.num_scenes = j.value("num_scenes", c.num_scenes);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.scene_w = j.value("scene_w", c.scene_w);
  c.scene_h = j.value("scene_h", c.scene_h);
  c.gt_min = j.value("gt_min", c.gt_min);
  c.gt_max = j.value("gt_max", c.gt_max);
  c.duplicates_per_gt = j.value("duplicates_per_gt", c.duplicates_per_gt);
  c.background_count = j.value("background_count", c.background_count);
  c.cluster_prob = j.value("cluster_prob", c.cluster_prob);
  c.cluster_offset = j.value("cluster_offset", c.cluster_offset);
  c.pos_jitter = j.value("pos_jitter", c.pos_jitter);
  c.size_jitter = j.value("size_jitter", c.size_jitter);
  c.score_slope = j.value("score_slope", c.score_slope);
  c.score_offset = j.value("score_offset", c.score_offset);
  c.score_noise = j.value("score_noise", c.score_noise);
  c.d_in = j.value("d_in", c.d_in);
  c.proto_scale = j.value("proto_scale", c.proto_scale);
  c.box_mix = j.value("box_mix", c.box_mix);
  c.feat_noise = j.value("feat_noise", c.feat_noise);
  c.bg_score_lo = j.value("bg_score_lo", c.bg_score_lo);
  c.bg_score_hi = j.value("bg_score_hi", c.bg_score_hi);
  return c;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
}

}  // namespace relnet
