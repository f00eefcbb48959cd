#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "relnet/eval.hpp"
#include "relnet/config.hpp"
#include "relnet/relation.hpp"
#include "relnet/synthgen.hpp"

namespace py = pybind11;
using namespace relnet;

namespace {

Box box_from_seq(py::handle seq) {
  const auto v = seq.cast<std::vector<double>>();
  if (v.size() != 4) throw std::invalid_argument("box must be (cx, cy, w, h)");
  return {v[0], v[1], v[2], v[3]};
}

std::vector<Box> boxes_from_array(const py::array_t<double>& arr) {
  const auto buf = arr.unchecked<2>();
  if (buf.shape(1) != 4) throw std::invalid_argument("boxes must have shape [N, 4]");
  std::vector<Box> boxes;
  boxes.reserve(static_cast<size_t>(buf.shape(0)));
  for (py::ssize_t i = 0; i < buf.shape(0); ++i) {
    boxes.push_back({buf(i, 0), buf(i, 1), buf(i, 2), buf(i, 3)});
  }
  return boxes;
}

Tensor tensor_from_array(const py::array_t<double>& arr) {
  const auto buf = arr.unchecked<2>();
  Tensor t({static_cast<int>(buf.shape(0)), static_cast<int>(buf.shape(1))});
  for (py::ssize_t i = 0; i < buf.shape(0); ++i)
    for (py::ssize_t j = 0; j < buf.shape(1); ++j) t.at(static_cast<int>(i), static_cast<int>(j)) = buf(i, j);
  return t;
}

py::array_t<double> array_from_tensor(const Tensor& t) {
  py::array_t<double> out({t.rows(), t.cols()});
  auto buf = out.mutable_unchecked<2>();
  for (int i = 0; i < t.rows(); ++i)
    for (int j = 0; j < t.cols(); ++j) buf(i, j) = t.at(i, j);
  return out;
}

// Relation module with owned parameters, for experimenting from Python.
class RelationModule {
 public:
  RelationModule(int d_f, int num_heads, int d_k, int d_g, const std::string& geo_mode,
                 uint64_t seed) {
    config_.d_f = d_f;
    config_.num_heads = num_heads;
    config_.d_k = d_k;
    config_.d_g = d_g;
    config_.geo_mode = geo_mode_from_name(geo_mode);
    config_.validate();
    params_ = RelationParams::init(config_, seed, "rm");
  }

  py::array_t<double> forward(const py::array_t<double>& features,
                              const py::array_t<double>& boxes) const {
    ObjectSet objs{constant(tensor_from_array(features)), boxes_from_array(boxes)};
    return array_from_tensor(relation_module_forward(objs, params_, config_).value());
  }

  std::vector<py::dict> top_pairs(const py::array_t<double>& features,
                                  const py::array_t<double>& boxes, int k) const {
    ObjectSet objs{constant(tensor_from_array(features)), boxes_from_array(boxes)};
    std::vector<py::dict> out;
    for (const RelationPair& p : top_relation_pairs(objs, params_, config_, k)) {
      py::dict d;
      d["n"] = p.n;
      d["m"] = p.m;
      d["head"] = p.head;
      d["weight"] = p.weight;
      out.push_back(std::move(d));
    }
    return out;
  }

  int64_t parameter_count() const { return param_count(config_); }
  int64_t flops(int64_t n) const { return flop_count(config_, n); }

 private:
  RelationConfig config_;
  RelationParams params_;
};

GenConfig gen_config_from_dict(const py::dict& d) {
  const nlohmann::json j = nlohmann::json::parse(py::str(py::module_::import("json")
                                                             .attr("dumps")(d))
                                                     .cast<std::string>());
  return gen_config_from_json(j);
}

py::dict report_to_dict(const EvalReport& r) {
  py::dict out;
  out["map"] = r.map;
  out["map50"] = r.map50;
  out["map75"] = r.map75;
  py::list per_class;
  for (const ClassAp& c : r.per_class) {
    py::dict entry;
    entry["class_id"] = c.class_id;
    entry["ap_per_threshold"] = c.ap_per_threshold;
    per_class.append(std::move(entry));
  }
  out["per_class"] = per_class;
  return out;
}

}  // namespace

PYBIND11_MODULE(_relnet, m) {
  m.doc() = "Geometry-aware attention and learned duplicate removal, C++ core bindings";

  m.def("iou", [](py::handle a, py::handle b) { return iou(box_from_seq(a), box_from_seq(b)); },
        py::arg("box_a"), py::arg("box_b"),
        "Intersection over union of two (cx, cy, w, h) boxes");

  m.def(
      "rel_geom",
      [](py::handle m_box, py::handle n_box, double eps) {
        const RelGeom4 g = rel_geom(box_from_seq(m_box), box_from_seq(n_box), eps);
        return std::vector<double>(g.begin(), g.end());
      },
      py::arg("box_m"), py::arg("box_n"), py::arg("eps") = kGeomClampEps,
      "Translation/scale-invariant relative geometry 4-vector");

  m.def("sinusoid_embed", &sinusoid_embed, py::arg("x"), py::arg("dim"),
        py::arg("wave_base") = kWaveBase);

  m.def(
      "embed_geom",
      [](const std::vector<double>& g, int d_g, double wave_base) {
        if (g.size() != 4) throw std::invalid_argument("relative geometry must have 4 entries");
        return embed_geom({g[0], g[1], g[2], g[3]}, d_g, wave_base);
      },
      py::arg("rel_geom"), py::arg("d_g"), py::arg("wave_base") = kWaveBase);

  m.def(
      "nms",
      [](const py::array_t<double>& boxes, const std::vector<double>& scores, double iou_threshold) {
        return nms(boxes_from_array(boxes), scores, {iou_threshold});
      },
      py::arg("boxes"), py::arg("scores"), py::arg("iou_threshold") = 0.5,
      "Greedy NMS; returns kept indices in selection order");

  m.def(
      "soft_nms",
      [](const py::array_t<double>& boxes, const std::vector<double>& scores, double sigma,
         double score_floor) {
        std::vector<std::pair<int, double>> out;
        for (const RescoredDetection& r : soft_nms(boxes_from_array(boxes), scores,
                                                   {sigma, score_floor})) {
          out.emplace_back(r.index, r.score);
        }
        return out;
      },
      py::arg("boxes"), py::arg("scores"), py::arg("sigma") = 0.5,
      py::arg("score_floor") = 1e-4, "Gaussian SoftNMS; returns (index, rescored) pairs");

  m.def(
      "param_count",
      [](int num_heads, int d_k, int d_g, int d_f) {
        RelationConfig c;
        c.num_heads = num_heads;
        c.d_k = d_k;
        c.d_g = d_g;
        c.d_f = d_f;
        return param_count(c);
      },
      py::arg("num_heads") = 16, py::arg("d_k") = 64, py::arg("d_g") = 64,
      py::arg("d_f") = 1024);

  m.def(
      "flop_count",
      [](int64_t n, int num_heads, int d_k, int d_g, int d_f) {
        RelationConfig c;
        c.num_heads = num_heads;
        c.d_k = d_k;
        c.d_g = d_g;
        c.d_f = d_f;
        return flop_count(c, n);
      },
      py::arg("n") = 300, py::arg("num_heads") = 16, py::arg("d_k") = 64, py::arg("d_g") = 64,
      py::arg("d_f") = 1024);

  py::class_<RelationModule>(m, "RelationModule")
      .def(py::init<int, int, int, int, const std::string&, uint64_t>(), py::arg("d_f"),
           py::arg("num_heads") = 16, py::arg("d_k") = 64, py::arg("d_g") = 64,
           py::arg("geo_mode") = "ours", py::arg("seed") = 0)
      .def("forward", &RelationModule::forward, py::arg("features"), py::arg("boxes"))
      .def("top_pairs", &RelationModule::top_pairs, py::arg("features"), py::arg("boxes"),
           py::arg("k") = 10)
      .def_property_readonly("parameter_count", &RelationModule::parameter_count)
      .def("flops", &RelationModule::flops, py::arg("n"));

  m.def(
      "generate_scenes",
      [](const py::dict& config) { return scenes_to_string(generate(gen_config_from_dict(config))); },
      py::arg("config") = py::dict(),
      "Generate synthetic scenes, returned as the JSON-lines scene format");

  m.def(
      "evaluate_scenes",
      [](const std::string& jsonl, const std::string& method, double parameter) {
        const std::vector<Scene> scenes = scenes_from_string(jsonl);
        std::vector<std::vector<ScoredBox>> finals;
        if (method == "none") {
          finals = raw_detections_all(scenes);
        } else if (method == "nms") {
          finals = apply_nms_all(scenes, {parameter});
        } else if (method == "softnms") {
          finals = apply_soft_nms_all(scenes, {parameter, 1e-4});
        } else {
          throw std::invalid_argument("method must be none|nms|softnms");
        }
        return report_to_dict(evaluate_map(scenes, finals));
      },
      py::arg("scenes_jsonl"), py::arg("method") = "none", py::arg("parameter") = 0.5,
      "COCO-style mAP of a duplicate-removal method over a scene set");

  m.attr("__version__") = "0.1.0";
}
