#include "relnet/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "relnet/rng.hpp"
#include "relnet/threads.hpp"

namespace relnet {

void GenConfig::validate() const {
  if (num_scenes < 0 || num_classes < 1) {
    throw std::invalid_argument("gen config: need num_scenes >= 0 and num_classes >= 1");
  }
  if (scene_w <= 0.0 || scene_h <= 0.0) {
    throw std::invalid_argument("gen config: scene size must be positive");
  }
  if (gt_min < 0 || gt_max < gt_min) {
    throw std::invalid_argument("gen config: invalid gt_per_scene range");
  }
  if (duplicates_per_gt < 0 || background_count < 0) {
    throw std::invalid_argument("gen config: counts must be >= 0");
  }
  if (d_in < 1) throw std::invalid_argument("gen config: d_in must be >= 1");
  if (bg_score_lo < 0.0 || bg_score_hi > 1.0 || bg_score_hi < bg_score_lo) {
    throw std::invalid_argument("gen config: invalid background score range");
  }
}

namespace {

// Class prototypes and the geometry-projection matrix depend only on the
// master seed, so all scenes share them.
std::vector<std::vector<double>> make_prototypes(const GenConfig& cfg) {
  std::vector<std::vector<double>> protos(static_cast<size_t>(cfg.num_classes + 1));
  for (int c = 1; c <= cfg.num_classes; ++c) {
    Rng rng(Rng::mix(cfg.world_seed, Rng::hash_name("proto." + std::to_string(c))));
    std::vector<double> p(static_cast<size_t>(cfg.d_in));
    for (double& v : p) v = rng.normal(0.0, cfg.proto_scale / std::sqrt(cfg.d_in));
    protos[static_cast<size_t>(c)] = std::move(p);
  }
  return protos;
}

std::vector<std::array<double, 4>> make_geometry_projection(const GenConfig& cfg) {
  Rng rng(Rng::mix(cfg.world_seed, Rng::hash_name("geom_proj")));
  std::vector<std::array<double, 4>> proj(static_cast<size_t>(cfg.d_in));
  for (auto& row : proj) {
    for (double& v : row) v = rng.normal(0.0, 1.0);
  }
  return proj;
}

Box clip_to_scene(Box b, double w, double h) {
  b.w = std::min(b.w, w);
  b.h = std::min(b.h, h);
  b.cx = std::clamp(b.cx, b.w / 2.0, w - b.w / 2.0);
  b.cy = std::clamp(b.cy, b.h / 2.0, h - b.h / 2.0);
  return b;
}

std::vector<double> make_feature(const GenConfig& cfg, const Box& box, int class_id,
                                 double quality, Rng& rng,
                                 const std::vector<std::vector<double>>& protos,
                                 const std::vector<std::array<double, 4>>& proj) {
  const std::array<double, 4> geom = {box.cx / cfg.scene_w, box.cy / cfg.scene_h,
                                      std::log(box.w / cfg.scene_w),
                                      std::log(box.h / cfg.scene_h)};
  std::vector<double> f(static_cast<size_t>(cfg.d_in));
  for (int i = 0; i < cfg.d_in; ++i) {
    double v = 0.0;
    if (class_id >= 1) {
      // prototype strength tracks localization quality
      v += (0.5 + 0.5 * quality) * protos[static_cast<size_t>(class_id)][static_cast<size_t>(i)];
    }
    double g = 0.0;
    for (int j = 0; j < 4; ++j) g += proj[static_cast<size_t>(i)][static_cast<size_t>(j)] * geom[static_cast<size_t>(j)];
    v += cfg.box_mix * g / 2.0;
    v += rng.normal(0.0, cfg.feat_noise);
    f[static_cast<size_t>(i)] = v;
  }
  return f;
}

Scene generate_scene(const GenConfig& cfg, int scene_index,
                     const std::vector<std::vector<double>>& protos,
                     const std::vector<std::array<double, 4>>& proj) {
  Rng rng(Rng::mix(cfg.seed, static_cast<uint64_t>(scene_index)));
  Scene scene;

  const int num_gt = cfg.gt_min + (cfg.gt_max > cfg.gt_min
                                       ? rng.uniform_int(0, cfg.gt_max - cfg.gt_min)
                                       : 0);
  for (int g = 0; g < num_gt; ++g) {
    Box b;
    b.w = rng.uniform(0.08, 0.25) * cfg.scene_w;
    b.h = rng.uniform(0.08, 0.25) * cfg.scene_h;
    // Clustered spawns share the anchor's class: crowded same-class
    // instances are the case plain suppression handles worst.
    const bool clustered = g > 0 && rng.uniform() < cfg.cluster_prob;
    int class_id;
    if (clustered) {
      const GroundTruth& prev = scene.ground_truths.back();
      b.w = prev.box.w * std::exp(rng.normal(0.0, 0.15));
      b.h = prev.box.h * std::exp(rng.normal(0.0, 0.15));
      b.cx = prev.box.cx + rng.normal(0.0, cfg.cluster_offset * prev.box.w);
      b.cy = prev.box.cy + rng.normal(0.0, cfg.cluster_offset * prev.box.h);
      class_id = prev.class_id;
    } else {
      b.cx = rng.uniform(0.0, cfg.scene_w);
      b.cy = rng.uniform(0.0, cfg.scene_h);
      class_id = rng.uniform_int(1, cfg.num_classes);
    }
    b = clip_to_scene(b, cfg.scene_w, cfg.scene_h);
    scene.ground_truths.push_back({b, class_id});
  }

  for (const GroundTruth& gt : scene.ground_truths) {
    for (int d = 0; d < cfg.duplicates_per_gt; ++d) {
      // Quadratic skew towards tiny jitter so each object usually has at
      // least one near-perfect proposal.
      const double u = rng.uniform() * rng.uniform();
      Box b = gt.box;
      b.cx += rng.normal(0.0, u * cfg.pos_jitter * gt.box.w);
      b.cy += rng.normal(0.0, u * cfg.pos_jitter * gt.box.h);
      b.w *= std::exp(rng.normal(0.0, u * cfg.size_jitter));
      b.h *= std::exp(rng.normal(0.0, u * cfg.size_jitter));
      b = clip_to_scene(b, cfg.scene_w, cfg.scene_h);
      const double quality = iou(b, gt.box);
      const double s0 = std::clamp(
          cfg.score_slope * quality + cfg.score_offset + rng.normal(0.0, cfg.score_noise),
          0.0, 1.0);
      Detection det;
      det.box = b;
      det.class_id = gt.class_id;
      det.score = s0;
      det.feature = make_feature(cfg, b, gt.class_id, quality, rng, protos, proj);
      scene.detections.push_back(std::move(det));
    }
  }

  for (int d = 0; d < cfg.background_count; ++d) {
    Box b;
    b.w = rng.uniform(0.08, 0.25) * cfg.scene_w;
    b.h = rng.uniform(0.08, 0.25) * cfg.scene_h;
    b.cx = rng.uniform(0.0, cfg.scene_w);
    b.cy = rng.uniform(0.0, cfg.scene_h);
    b = clip_to_scene(b, cfg.scene_w, cfg.scene_h);
    Detection det;
    det.box = b;
    det.class_id = rng.uniform_int(1, cfg.num_classes);
    det.score = rng.uniform(cfg.bg_score_lo, cfg.bg_score_hi);
    det.feature = make_feature(cfg, b, 0, 0.0, rng, protos, proj);
    scene.detections.push_back(std::move(det));
  }
  return scene;
}

}  // namespace

std::vector<Scene> generate(const GenConfig& config) {
  config.validate();
  const auto protos = make_prototypes(config);
  const auto proj = make_geometry_projection(config);
  std::vector<Scene> scenes(static_cast<size_t>(config.num_scenes));
  parallel_for(config.num_scenes, [&](int64_t i) {
    scenes[static_cast<size_t>(i)] =
        generate_scene(config, static_cast<int>(i), protos, proj);
  });
  return scenes;
}

namespace {

nlohmann::json box_to_json(const Box& b) {
  return nlohmann::json::array({b.cx, b.cy, b.w, b.h});
}

Box box_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw std::runtime_error("box must be [cx,cy,w,h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

}  // namespace

std::string scenes_to_string(const std::vector<Scene>& scenes) {
  std::ostringstream out;
  for (size_t i = 0; i < scenes.size(); ++i) {
    const Scene& s = scenes[i];
    nlohmann::json j;
    j["scene_id"] = i;
    nlohmann::json gts = nlohmann::json::array();
    for (const GroundTruth& gt : s.ground_truths) {
      gts.push_back({{"box", box_to_json(gt.box)}, {"class", gt.class_id}});
    }
    j["gts"] = gts;
    nlohmann::json dets = nlohmann::json::array();
    for (const Detection& d : s.detections) {
      dets.push_back({{"box", box_to_json(d.box)},
                      {"class", d.class_id},
                      {"score", d.score},
                      {"feat", d.feature}});
    }
    j["dets"] = dets;
    out << j.dump() << "\n";
  }
  return out.str();
}

std::vector<Scene> scenes_from_string(const std::string& text) {
  std::vector<Scene> scenes;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      Scene s;
      for (const auto& g : j.at("gts")) {
        s.ground_truths.push_back({box_from_json(g.at("box")), g.at("class").get<int>()});
      }
      for (const auto& d : j.at("dets")) {
        Detection det;
        det.box = box_from_json(d.at("box"));
        det.class_id = d.at("class").get<int>();
        det.score = d.at("score").get<double>();
        det.feature = d.at("feat").get<std::vector<double>>();
        s.detections.push_back(std::move(det));
      }
      scenes.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw std::runtime_error("scene file parse error at line " + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  return scenes;
}

void write_scenes(const std::vector<Scene>& scenes, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << scenes_to_string(scenes);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Scene> read_scenes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenes_from_string(buf.str());
}

}  // namespace relnet
