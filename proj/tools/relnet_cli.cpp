// relnet: synthetic detection scenes, geometry-aware attention training,
// duplicate removal, and COCO-style evaluation from one binary.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "relnet/benchmark.hpp"
#include "relnet/config.hpp"
#include "relnet/eval.hpp"
#include "relnet/trainer.hpp"

namespace {

constexpr const char* kToolVersion = "relnet 0.1.0";

using nlohmann::json;
using namespace relnet;

std::string comma_format(int64_t v) {
  std::string digits = std::to_string(v);
  std::string out;
  int count = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (count && count % 3 == 0) out.push_back(',');
    out.push_back(*it);
    ++count;
  }
  return {out.rbegin(), out.rend()};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Reproducibility record written next to every output file. Deliberately
// timestamp-free so reruns are byte-identical.
void write_manifest(const std::string& output_path, const std::string& subcommand,
                    const json& resolved, const std::vector<std::string>& inputs) {
  json m;
  m["tool"] = kToolVersion;
  m["subcommand"] = subcommand;
  m["config"] = resolved;
  m["inputs"] = inputs;
  m["output"] = output_path;
  write_text(output_path + ".manifest.json", m.dump(2) + "\n");
}

json maybe_load_config(const std::string& path) {
  if (path.empty()) return json::object();
  return load_json_file(path);
}

json section(const json& root, const char* name) {
  return root.contains(name) ? root.at(name) : json::object();
}

int infer_d_feat(const std::vector<Scene>& scenes) {
  for (const Scene& s : scenes) {
    if (!s.detections.empty()) return static_cast<int>(s.detections[0].feature.size());
  }
  throw std::runtime_error("scene file has no detections; cannot infer feature dimension");
}

int infer_num_classes(const std::vector<Scene>& scenes) {
  int max_class = 0;
  for (const Scene& s : scenes) {
    for (const GroundTruth& gt : s.ground_truths) max_class = std::max(max_class, gt.class_id);
    for (const Detection& d : s.detections) max_class = std::max(max_class, d.class_id);
  }
  if (max_class < 1) throw std::runtime_error("scene file has no classes");
  return max_class;
}

std::string loss_log_to_text(const LossLog& log) {
  std::string out = "# iteration loss\n";
  for (const auto& [iter, loss] : log) {
    out += std::to_string(iter) + " " + json(loss).dump() + "\n";
  }
  return out;
}

// --- train helpers ---------------------------------------------------------

HeadParams head_params_from_checkpoint(const Checkpoint& ckpt, HeadConfig& config_out) {
  const json cfg = json::parse(ckpt.config_json);
  if (!cfg.contains("head")) throw std::runtime_error("checkpoint carries no head config");
  config_out = head_config_from_json(cfg.at("head"));
  const uint64_t seed = cfg.contains("train")
                            ? train_config_from_json(cfg.at("train")).seed
                            : 1;
  HeadParams params = HeadParams::init(config_out, seed, "head");
  std::vector<std::pair<std::string, Var>> named;
  params.collect("head", named);
  load_params_from_checkpoint(ckpt, named);
  return params;
}

DedupParams dedup_params_from_checkpoint(const Checkpoint& ckpt, DedupConfig& config_out) {
  const json cfg = json::parse(ckpt.config_json);
  if (!cfg.contains("dedup")) throw std::runtime_error("checkpoint carries no dedup config");
  config_out = dedup_config_from_json(cfg.at("dedup"));
  const uint64_t seed = cfg.contains("train")
                            ? train_config_from_json(cfg.at("train")).seed
                            : 1;
  DedupParams params = DedupParams::init(config_out, seed, "dedup");
  std::vector<std::pair<std::string, Var>> named;
  params.collect("dedup", named);
  if (ckpt.kind == "e2e") {
    // e2e checkpoints also hold head tensors; pull just the dedup ones.
    std::vector<std::pair<std::string, Var>> all = named;
    HeadConfig head_cfg = head_config_from_json(cfg.at("head"));
    HeadParams head = HeadParams::init(head_cfg, seed, "head");
    head.collect("head", all);
    load_params_from_checkpoint(ckpt, all);
  } else {
    load_params_from_checkpoint(ckpt, named);
  }
  return params;
}

// --- subcommands ------------------------------------------------------------

struct GenArgs {
  std::string config_path;
  std::string out;
  std::optional<uint64_t> seed;
  std::optional<int> scenes;
};

int cmd_gen(const GenArgs& args) {
  GenConfig cfg = gen_config_from_json(section(maybe_load_config(args.config_path), "gen"));
  if (args.seed) cfg.seed = *args.seed;
  if (args.scenes) cfg.num_scenes = *args.scenes;
  cfg.validate();
  write_scenes(generate(cfg), args.out);
  write_manifest(args.out, "gen", {{"gen", to_json(cfg)}},
                 args.config_path.empty() ? std::vector<std::string>{}
                                          : std::vector<std::string>{args.config_path});
  std::cout << "wrote " << cfg.num_scenes << " scenes to " << args.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string mode;
  std::string data;
  std::string config_path;
  std::string out;
  std::string head_ckpt;
  std::optional<int> iterations;
  std::optional<uint64_t> seed;
};

int cmd_train(const TrainArgs& args) {
  const json file_cfg = maybe_load_config(args.config_path);
  TrainConfig train = train_config_from_json(section(file_cfg, "train"));
  if (args.iterations) train.iterations = *args.iterations;
  if (args.seed) train.seed = *args.seed;

  std::vector<Scene> scenes = read_scenes(args.data);
  if (scenes.empty()) throw std::runtime_error("no scenes in " + args.data);
  std::vector<std::string> inputs = {args.data};
  if (!args.config_path.empty()) inputs.push_back(args.config_path);

  json resolved;
  Checkpoint ckpt;
  LossLog loss_log;

  if (args.mode == "dedup") {
    DedupConfig base = desk_dedup(infer_d_feat(scenes));
    if (!args.head_ckpt.empty()) {
      HeadConfig head_cfg;
      HeadParams head = head_params_from_checkpoint(load_checkpoint(args.head_ckpt), head_cfg);
      scenes = head_rescored_scenes(scenes, head, head_cfg);
      base = desk_dedup(head_cfg.d_hidden);
      inputs.push_back(args.head_ckpt);
    }
    DedupConfig cfg = dedup_config_from_json(section(file_cfg, "dedup"), base);
    resolved = {{"dedup", to_json(cfg)}, {"train", to_json(train)}};
    DedupTrainResult result = train_dedup(scenes, cfg, train);
    loss_log = result.loss_log;
    std::vector<std::pair<std::string, Var>> named;
    result.params.collect("dedup", named);
    ckpt = make_training_checkpoint("dedup", resolved.dump(), train.iterations, named,
                                    result.state);
  } else if (args.mode == "head") {
    HeadConfig cfg = head_config_from_json(
        section(file_cfg, "head"), desk_head(infer_d_feat(scenes), infer_num_classes(scenes)));
    resolved = {{"head", to_json(cfg)}, {"train", to_json(train)}};
    HeadTrainResult result = train_head(scenes, cfg, train);
    loss_log = result.loss_log;
    std::vector<std::pair<std::string, Var>> named;
    result.params.collect("head", named);
    ckpt = make_training_checkpoint("head", resolved.dump(), train.iterations, named,
                                    result.state);
  } else if (args.mode == "e2e") {
    HeadConfig head_cfg = head_config_from_json(
        section(file_cfg, "head"), desk_head(infer_d_feat(scenes), infer_num_classes(scenes)));
    DedupConfig dedup_cfg =
        dedup_config_from_json(section(file_cfg, "dedup"), desk_dedup(head_cfg.d_hidden));
    resolved = {{"head", to_json(head_cfg)},
                {"dedup", to_json(dedup_cfg)},
                {"train", to_json(train)}};
    E2eTrainResult result = train_end_to_end(scenes, head_cfg, dedup_cfg, train);
    loss_log = result.loss_log;
    std::vector<std::pair<std::string, Var>> named;
    result.head.collect("head", named);
    if (train.dedup_loss_weight != 0.0) result.dedup.collect("dedup", named);
    ckpt = make_training_checkpoint("e2e", resolved.dump(), train.iterations, named,
                                    result.state);
  } else {
    throw CLI::ValidationError("--mode must be one of head|dedup|e2e");
  }

  save_checkpoint(ckpt, args.out);
  write_text(args.out + ".loss.txt", loss_log_to_text(loss_log));
  write_manifest(args.out, "train", resolved, inputs);
  std::cout << "trained " << args.mode << " for " << train.iterations << " iterations; final loss "
            << (loss_log.empty() ? 0.0 : loss_log.back().second) << "\n";
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string method;
  std::string ckpt;
  std::string head_ckpt;
  std::string out;
  std::vector<double> params;
};

int cmd_eval(const EvalArgs& args) {
  std::vector<Scene> scenes = read_scenes(args.data);
  if (scenes.empty()) throw std::runtime_error("no scenes in " + args.data);
  std::vector<std::string> inputs = {args.data};

  // A head checkpoint (or an e2e checkpoint) turns raw proposals into
  // head-scored detections first.
  std::optional<Checkpoint> learned_ckpt;
  if (!args.ckpt.empty()) {
    learned_ckpt = load_checkpoint(args.ckpt);
    inputs.push_back(args.ckpt);
  }
  std::string head_source;
  if (!args.head_ckpt.empty()) {
    head_source = args.head_ckpt;
  } else if (learned_ckpt && learned_ckpt->kind == "e2e") {
    head_source = args.ckpt;
  }
  if (!head_source.empty()) {
    HeadConfig head_cfg;
    HeadParams head = head_params_from_checkpoint(load_checkpoint(head_source), head_cfg);
    scenes = head_rescored_scenes(scenes, head, head_cfg);
    if (head_source == args.head_ckpt) inputs.push_back(args.head_ckpt);
  }

  struct Row {
    std::string method;
    std::string parameter;
    EvalReport report;
    std::string out_path;
  };
  std::vector<Row> rows;

  auto out_path_for = [&](const std::string& tag, size_t count) {
    if (count <= 1) return args.out;
    const size_t dot = args.out.rfind('.');
    const std::string stem = dot == std::string::npos ? args.out : args.out.substr(0, dot);
    const std::string ext = dot == std::string::npos ? ".json" : args.out.substr(dot);
    return stem + "_" + tag + ext;
  };

  if (args.method == "nms") {
    std::vector<double> sweep = args.params.empty() ? std::vector<double>{0.5} : args.params;
    for (double nt : sweep) {
      Row row;
      row.method = "nms";
      row.parameter = json(nt).dump();
      row.report = evaluate_map(scenes, apply_nms_all(scenes, {nt}));
      row.out_path = out_path_for("nt" + row.parameter, sweep.size());
      rows.push_back(std::move(row));
    }
  } else if (args.method == "softnms") {
    std::vector<double> sweep = args.params.empty() ? std::vector<double>{0.5} : args.params;
    for (double sigma : sweep) {
      Row row;
      row.method = "softnms";
      row.parameter = json(sigma).dump();
      row.report = evaluate_map(scenes, apply_soft_nms_all(scenes, {sigma, 1e-4}));
      row.out_path = out_path_for("sigma" + row.parameter, sweep.size());
      rows.push_back(std::move(row));
    }
  } else if (args.method == "learned") {
    if (!learned_ckpt) throw CLI::ValidationError("--dedup learned requires --ckpt");
    if (!args.params.empty()) {
      throw CLI::ValidationError("--dedup learned takes no --param (eta set comes from the checkpoint)");
    }
    DedupConfig cfg;
    DedupParams params = dedup_params_from_checkpoint(*learned_ckpt, cfg);
    Row row;
    row.method = "learned";
    json etas = cfg.eta_set;
    row.parameter = "eta" + etas.dump();
    row.report = evaluate_map(scenes, apply_dedup_all(scenes, params, cfg));
    row.out_path = args.out;
    rows.push_back(std::move(row));
  } else if (args.method == "none") {
    Row row;
    row.method = "none";
    row.parameter = "-";
    row.report = evaluate_map(scenes, raw_detections_all(scenes));
    row.out_path = args.out;
    rows.push_back(std::move(row));
  } else {
    throw CLI::ValidationError("--dedup must be one of nms|softnms|learned|none");
  }

  std::printf("%-8s %-16s %8s %8s %8s\n", "method", "parameter", "mAP", "mAP50", "mAP75");
  for (const Row& row : rows) {
    std::printf("%-8s %-16s %8.4f %8.4f %8.4f\n", row.method.c_str(), row.parameter.c_str(),
                row.report.map, row.report.map50, row.report.map75);
    write_text(row.out_path, eval_report_to_json(row.report));
    write_manifest(row.out_path, "eval",
                   {{"method", row.method}, {"parameter", row.parameter}}, inputs);
  }
  return 0;
}

struct CostArgs {
  int num_heads = 16;
  int d_k = 64;
  int d_g = 64;
  int d_f = 1024;
  int64_t n = 300;
};

int cmd_cost(const CostArgs& args) {
  RelationConfig cfg;
  cfg.num_heads = args.num_heads;
  cfg.d_k = args.d_k;
  cfg.d_g = args.d_g;
  cfg.d_f = args.d_f;
  cfg.validate();
  std::cout << "relation module cost model (N_r=" << cfg.num_heads << ", d_k=" << cfg.d_k
            << ", d_g=" << cfg.d_g << ", d_f=" << cfg.d_f << ")\n";
  std::cout << "params: " << comma_format(param_count(cfg)) << "\n";
  std::cout << "flops (N=" << args.n << "): " << comma_format(flop_count(cfg, args.n)) << "\n";
  return 0;
}

struct GradcheckArgs {
  std::string module = "all";
  uint64_t seed = 1;
};

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

std::vector<Box> random_boxes(int n, Rng& rng) {
  std::vector<Box> boxes;
  for (int i = 0; i < n; ++i) {
    boxes.push_back({rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0), rng.uniform(2.0, 20.0),
                     rng.uniform(2.0, 20.0)});
  }
  return boxes;
}

bool report_module(const std::string& name, const GradCheckReport& report, bool verbose) {
  std::printf("%-22s max rel err %.3e  %s\n", name.c_str(), report.max_rel_err,
              report.pass ? "PASS" : "FAIL");
  if (verbose) {
    for (const auto& entry : report.per_param) {
      std::printf("    %-28s %.3e\n", entry.name.c_str(), entry.max_rel_err);
    }
  }
  return report.pass;
}

int cmd_gradcheck(const GradcheckArgs& args) {
  const bool verbose = args.module != "all";
  bool all_pass = true;
  Rng rng(args.seed);

  if (args.module == "relation" || args.module == "all") {
    for (GeoMode mode : {GeoMode::kOurs, GeoMode::kNone, GeoMode::kUnary}) {
      RelationConfig cfg;
      cfg.num_heads = 2;
      cfg.d_k = 8;
      cfg.d_g = 16;
      cfg.d_f = 16;
      cfg.geo_mode = mode;
      RelationParams params = RelationParams::init(cfg, args.seed, "rm");
      ObjectSet objs{Var(random_tensor({5, cfg.d_f}, rng), true), random_boxes(5, rng)};
      std::vector<std::pair<std::string, Var>> named;
      params.collect("rm", named);
      named.emplace_back("features", objs.features);
      auto f = [&]() {
        Var out = relation_module_forward(objs, params, cfg);
        return mean_all(mul(out, out));
      };
      all_pass &= report_module(std::string("relation/") + geo_mode_name(mode),
                                grad_check(f, named), verbose);
    }
  }
  if (args.module == "head" || args.module == "all") {
    HeadConfig cfg = desk_head(8, 3);
    cfg.d_hidden = 16;
    cfg.relation.d_f = 16;
    cfg.relation.num_heads = 2;
    cfg.relation.d_k = 8;
    cfg.relation.d_g = 16;
    HeadParams params = HeadParams::init(cfg, args.seed, "head");
    const int n = 5;
    Var feats = constant(random_tensor({n, cfg.d_in}, rng));
    std::vector<Box> boxes = random_boxes(n, rng);
    const std::vector<int> labels = {1, 0, 2, 3, 0};
    Tensor targets = random_tensor({n, 4}, rng, -0.5, 0.5);
    std::vector<std::pair<std::string, Var>> named;
    params.collect("head", named);
    auto f = [&]() {
      return recognition_loss(head_forward(feats, boxes, params, cfg), labels, targets);
    };
    all_pass &= report_module("head/r1=r2=1+loss", grad_check(f, named), verbose);
  }
  if (args.module == "dedup" || args.module == "all") {
    DedupConfig cfg = desk_dedup(8);
    cfg.d_fused = 16;
    cfg.rank_dim = 8;
    cfg.relation.d_f = 16;
    cfg.relation.num_heads = 2;
    cfg.relation.d_k = 8;
    cfg.relation.d_g = 16;
    DedupParams params = DedupParams::init(cfg, args.seed, "dedup");
    const int n = 6;
    DedupInput input;
    input.features = constant(random_tensor({n, cfg.d_feat}, rng));
    for (int i = 0; i < n; ++i) input.scores.push_back(rng.uniform(0.05, 0.95));
    input.boxes = random_boxes(n, rng);
    Tensor labels({n, static_cast<int>(cfg.eta_set.size())});
    labels.at(0, 0) = 1.0;
    labels.at(3, 2) = 1.0;
    Tensor s0({n, 1});
    for (int i = 0; i < n; ++i) s0.at(i, 0) = input.scores[static_cast<size_t>(i)];
    std::vector<std::pair<std::string, Var>> named;
    params.collect("dedup", named);
    auto f = [&]() {
      return dedup_loss(constant(s0), dedup_forward(input, params, cfg), labels);
    };
    all_pass &= report_module("dedup/forward+loss", grad_check(f, named), verbose);
  }
  if (args.module == "losses" || args.module == "all") {
    // BCE gradient identity: dL/ds1 = s0/(1 - s0 s1) for label-0 terms.
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const double s0 = rng.uniform(0.001, 0.999);
      const double s1v = rng.uniform(0.001, 0.999);
      Var s1(Tensor({1, 1}, {s1v}), true);
      Var loss = dedup_loss(constant(Tensor({1, 1}, {s0})), s1, Tensor({1, 1}, {0.0}));
      s1.zero_grad();
      backward(loss);
      worst = std::max(worst, std::abs(s1.grad()[0] - s0 / (1.0 - s0 * s1v)));
    }
    const bool pass = worst < 1e-10;
    std::printf("%-22s max abs err %.3e  %s\n", "losses/bce-identity", worst,
                pass ? "PASS" : "FAIL");
    all_pass &= pass;
  }
  if (args.module != "relation" && args.module != "head" && args.module != "dedup" &&
      args.module != "losses" && args.module != "all") {
    throw CLI::ValidationError("--module must be one of relation|head|dedup|losses|all");
  }
  return all_pass ? 0 : 1;
}

struct InspectArgs {
  std::string ckpt;
  std::string data;
  std::string out;
  int scene = 0;
  int class_id = -1;
  int topk = 10;
};

int cmd_inspect(const InspectArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.ckpt);
  DedupConfig cfg;
  DedupParams params = dedup_params_from_checkpoint(ckpt, cfg);
  const std::vector<Scene> scenes = read_scenes(args.data);
  if (args.scene < 0 || args.scene >= static_cast<int>(scenes.size())) {
    throw std::runtime_error("scene index " + std::to_string(args.scene) + " out of range (" +
                             std::to_string(scenes.size()) + " scenes)");
  }
  const Scene& scene = scenes[static_cast<size_t>(args.scene)];

  // Pick the requested class, or the first class with at least two detections.
  std::map<int, std::vector<int>> by_class;
  for (size_t i = 0; i < scene.detections.size(); ++i) {
    by_class[scene.detections[i].class_id].push_back(static_cast<int>(i));
  }
  int cls = args.class_id;
  if (cls < 0) {
    for (const auto& [c, idx] : by_class) {
      if (idx.size() >= 2) {
        cls = c;
        break;
      }
    }
  }
  if (cls < 0 || !by_class.count(cls)) {
    throw std::runtime_error("no usable class in scene " + std::to_string(args.scene));
  }

  const std::vector<int>& idx = by_class[cls];
  DedupInput input;
  Tensor feats({static_cast<int>(idx.size()), cfg.d_feat});
  for (size_t i = 0; i < idx.size(); ++i) {
    const Detection& d = scene.detections[static_cast<size_t>(idx[i])];
    for (int j = 0; j < cfg.d_feat; ++j) feats.at(static_cast<int>(i), j) = d.feature[static_cast<size_t>(j)];
    input.scores.push_back(d.score);
    input.boxes.push_back(d.box);
  }
  input.features = constant(std::move(feats));

  std::string dump;
  if (args.topk > 0) {
    Var fused = dedup_fused_features(input, params, cfg);
    ObjectSet objs{fused, input.boxes};
    for (const RelationPair& p : top_relation_pairs(objs, params.relation, cfg.relation,
                                                    args.topk)) {
      const Box& bn = input.boxes[static_cast<size_t>(p.n)];
      const Box& bm = input.boxes[static_cast<size_t>(p.m)];
      json record = {{"n", p.n},
                     {"m", p.m},
                     {"head", p.head},
                     {"weight", p.weight},
                     {"box_n", {bn.cx, bn.cy, bn.w, bn.h}},
                     {"box_m", {bm.cx, bm.cy, bm.w, bm.h}}};
      dump += record.dump() + "\n";
    }
  }
  if (args.out.empty()) {
    std::cout << dump;
  } else {
    write_text(args.out, dump);
    write_manifest(args.out, "inspect",
                   {{"scene", args.scene}, {"class", cls}, {"topk", args.topk}},
                   {args.ckpt, args.data});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometry-aware attention for detection post-processing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "Generate synthetic detection scenes");
  gen->add_option("--config", gen_args.config_path, "JSON config file (section \"gen\")");
  gen->add_option("--out", gen_args.out, "Output scene file (JSON lines)")->required();
  gen->add_option("--seed", gen_args.seed, "Override the generator seed");
  gen->add_option("--scenes", gen_args.scenes, "Override the scene count");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train head, dedup, or both end to end");
  train->add_option("--mode", train_args.mode, "head|dedup|e2e")->required();
  train->add_option("--data", train_args.data, "Training scene file")->required();
  train->add_option("--config", train_args.config_path, "JSON config file");
  train->add_option("--out", train_args.out, "Output checkpoint path")->required();
  train->add_option("--head-ckpt", train_args.head_ckpt,
                    "Frozen head checkpoint; dedup trains on its outputs");
  train->add_option("--iterations", train_args.iterations, "Override iteration count");
  train->add_option("--seed", train_args.seed, "Override the training seed");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a duplicate-removal method");
  eval->add_option("--data", eval_args.data, "Scene file with ground truths")->required();
  eval->add_option("--dedup", eval_args.method, "nms|softnms|learned|none")->required();
  eval->add_option("--ckpt", eval_args.ckpt, "Checkpoint for --dedup learned");
  eval->add_option("--head-ckpt", eval_args.head_ckpt,
                   "Head checkpoint: evaluate on head-rescored detections");
  eval->add_option("--out", eval_args.out, "Output report path")->required();
  eval->add_option("--param", eval_args.params,
                   "Method parameter sweep (N_t for nms, sigma for softnms)")
      ->delimiter(',');

  CostArgs cost_args;
  CLI::App* cost = app.add_subcommand("cost", "Print the relation module cost model");
  cost->add_option("--nr", cost_args.num_heads, "Relation head count");
  cost->add_option("--dk", cost_args.d_k, "Key dimension");
  cost->add_option("--dg", cost_args.d_g, "Geometry embedding dimension");
  cost->add_option("--df", cost_args.d_f, "Feature dimension");
  cost->add_option("--n", cost_args.n, "Object count for the FLOP estimate");

  GradcheckArgs grad_args;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--module", grad_args.module, "relation|head|dedup|losses|all");
  gradcheck->add_option("--seed", grad_args.seed, "Instance seed");

  InspectArgs inspect_args;
  CLI::App* inspect = app.add_subcommand("inspect", "Dump the strongest relation weights");
  inspect->add_option("--ckpt", inspect_args.ckpt, "Dedup or e2e checkpoint")->required();
  inspect->add_option("--data", inspect_args.data, "Scene file")->required();
  inspect->add_option("--out", inspect_args.out, "Dump path (default: stdout)");
  inspect->add_option("--scene", inspect_args.scene, "Scene index");
  inspect->add_option("--class", inspect_args.class_id, "Class id (default: first usable)");
  inspect->add_option("--topk", inspect_args.topk, "Number of pairs to dump");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_args);
    if (train->parsed()) return cmd_train(train_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (cost->parsed()) return cmd_cost(cost_args);
    if (gradcheck->parsed()) return cmd_gradcheck(grad_args);
    if (inspect->parsed()) return cmd_inspect(inspect_args);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
