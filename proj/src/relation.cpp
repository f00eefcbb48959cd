#include "relnet/relation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace relnet {

const char* geo_mode_name(GeoMode m) {
  switch (m) {
    case GeoMode::kOurs: return "ours";
    case GeoMode::kNone: return "none";
    case GeoMode::kUnary: return "unary";
  }
  return "?";
}

GeoMode geo_mode_from_name(const std::string& name) {
  if (name == "ours") return GeoMode::kOurs;
  if (name == "none") return GeoMode::kNone;
  if (name == "unary") return GeoMode::kUnary;
  throw std::invalid_argument("unknown geo mode '" + name + "' (ours|none|unary)");
}

void RelationConfig::validate() const {
  if (num_heads <= 0 || d_k <= 0 || d_g <= 0 || d_f <= 0) {
    throw std::invalid_argument("relation config: dimensions must be positive");
  }
  if (d_f % num_heads != 0) {
    throw std::invalid_argument("relation config: d_f (" + std::to_string(d_f) +
                                ") must be divisible by num_heads (" +
                                std::to_string(num_heads) + ")");
  }
  if (d_g % 8 != 0) {
    throw std::invalid_argument("relation config: d_g (" + std::to_string(d_g) +
                                ") must be divisible by 8");
  }
  if (eps <= 0.0) throw std::invalid_argument("relation config: eps must be positive");
  if (wave_base <= 1.0) throw std::invalid_argument("relation config: wave_base must be > 1");
}

namespace {

Var init_matrix(int rows, int cols, uint64_t seed, const std::string& name) {
  Rng rng(Rng::mix(seed, Rng::hash_name(name)));
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  Tensor t({rows, cols});
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
  return Var(std::move(t), true);
}

}  // namespace

RelationParams RelationParams::init(const RelationConfig& config, uint64_t seed,
                                    const std::string& name_prefix) {
  config.validate();
  RelationParams params;
  params.heads.resize(static_cast<size_t>(config.num_heads));
  const int d_v = config.d_f / config.num_heads;
  for (int r = 0; r < config.num_heads; ++r) {
    const std::string base = name_prefix + ".h" + std::to_string(r);
    Head& h = params.heads[static_cast<size_t>(r)];
    h.w_k = init_matrix(config.d_k, config.d_f, seed, base + ".W_K");
    h.w_q = init_matrix(config.d_k, config.d_f, seed, base + ".W_Q");
    h.w_v = init_matrix(d_v, config.d_f, seed, base + ".W_V");
    h.w_g = init_matrix(1, config.d_g, seed, base + ".W_G");
  }
  if (config.geo_mode == GeoMode::kUnary) {
    params.w_u = init_matrix(config.d_f, config.d_g, seed, name_prefix + ".W_U");
  }
  return params;
}

void RelationParams::collect(const std::string& prefix,
                             std::vector<std::pair<std::string, Var>>& out) const {
  for (size_t r = 0; r < heads.size(); ++r) {
    const std::string base = prefix + ".h" + std::to_string(r);
    out.emplace_back(base + ".W_K", heads[r].w_k);
    out.emplace_back(base + ".W_Q", heads[r].w_q);
    out.emplace_back(base + ".W_V", heads[r].w_v);
    out.emplace_back(base + ".W_G", heads[r].w_g);
  }
  if (w_u.defined()) out.emplace_back(prefix + ".W_U", w_u);
}

int64_t RelationParams::learnable_count() const {
  int64_t n = 0;
  for (const Head& h : heads) {
    n += h.w_k.value().numel() + h.w_q.value().numel() + h.w_v.value().numel() +
         h.w_g.value().numel();
  }
  if (w_u.defined()) n += w_u.value().numel();
  return n;
}

void ObjectSet::validate(const RelationConfig& config) const {
  if (boxes.empty()) throw std::invalid_argument("object set: need at least one object");
  const Tensor& f = features.value();
  if (f.rank() != 2 || f.rows() != static_cast<int>(boxes.size()) || f.cols() != config.d_f) {
    throw std::invalid_argument("object set: features " + f.shape_str() + " do not match " +
                                std::to_string(boxes.size()) + " boxes with d_f=" +
                                std::to_string(config.d_f));
  }
}

Var appearance_weights(const ObjectSet& objs, const RelationParams::Head& head,
                       const RelationConfig& config) {
  // K = F W_K^T, Q = F W_Q^T; entry (m, n) = K_m · Q_n / sqrt(d_k).
  Var keys = matmul(objs.features, transpose(head.w_k));
  Var queries = matmul(objs.features, transpose(head.w_q));
  return scale(matmul(keys, transpose(queries)), 1.0 / std::sqrt(static_cast<double>(config.d_k)));
}

Var geometry_weights(const ObjectSet& objs, const RelationParams::Head& head,
                     const RelationConfig& config, const Tensor* pair_embed) {
  if (config.geo_mode != GeoMode::kOurs) {
    throw std::invalid_argument("geometry_weights: only defined in geo mode 'ours', not '" +
                                std::string(geo_mode_name(config.geo_mode)) + "'");
  }
  const int n = objs.size();
  Tensor local;
  if (!pair_embed) {
    local = pair_geometry_embedding(objs.boxes, config.d_g, config.wave_base, config.eps);
    pair_embed = &local;
  }
  Var embedded = constant(*pair_embed);                    // [N² × d_g]
  Var gates = relu(matmul(embedded, transpose(head.w_g))); // [N² × 1]
  return reshape(gates, {n, n});
}

Var relation_weights(const Var& appearance, const Var& geometry) {
  check_same_shape(appearance.value(), geometry.value(), "relation_weights");
  for (int64_t i = 0; i < geometry.value().numel(); ++i) {
    if (geometry.value()[i] < 0.0) {
      throw std::invalid_argument("relation_weights: geometry weights must be nonnegative");
    }
  }
  Var shifted = sub_colmax_const(appearance);
  return safe_col_normalize(mul(geometry, vexp(shifted)));
}

namespace {

// Unary mode: absolute geometry of each box, sinusoid-embedded and projected
// to d_f, folded into the appearance features.
ObjectSet apply_unary_embedding(const ObjectSet& objs, const RelationParams& params,
                                const RelationConfig& config) {
  if (!params.w_u.defined()) {
    throw std::invalid_argument("relation params: unary mode requires W_U");
  }
  const int n = objs.size();
  Tensor self_embed({n, config.d_g});
  for (int i = 0; i < n; ++i) {
    const Box& b = objs.boxes[i];
    const RelGeom4 raw = {b.cx, b.cy, b.w, b.h};
    const std::vector<double> e = embed_geom(raw, config.d_g, config.wave_base);
    for (int j = 0; j < config.d_g; ++j) self_embed.at(i, j) = e[static_cast<size_t>(j)];
  }
  ObjectSet working = objs;
  working.features =
      add(objs.features, matmul(constant(std::move(self_embed)), transpose(params.w_u)));
  return working;
}

}  // namespace

Var relation_module_forward(const ObjectSet& objs, const RelationParams& params,
                            const RelationConfig& config, const Tensor* pair_embed) {
  config.validate();
  objs.validate(config);
  if (static_cast<int>(params.heads.size()) != config.num_heads) {
    throw std::invalid_argument("relation params: expected " + std::to_string(config.num_heads) +
                                " heads, got " + std::to_string(params.heads.size()));
  }
  const int n = objs.size();

  ObjectSet working = objs;
  if (config.geo_mode == GeoMode::kUnary) {
    working = apply_unary_embedding(objs, params, config);
  }

  Tensor local_embed;
  if (config.geo_mode == GeoMode::kOurs && !pair_embed) {
    local_embed = pair_geometry_embedding(objs.boxes, config.d_g, config.wave_base, config.eps);
    pair_embed = &local_embed;
  }

  std::vector<Var> head_outputs;
  head_outputs.reserve(params.heads.size());
  Var ones_gate;
  if (config.geo_mode != GeoMode::kOurs) ones_gate = constant(Tensor::full({n, n}, 1.0));
  for (const RelationParams::Head& head : params.heads) {
    Var omega_a = appearance_weights(working, head, config);
    Var omega_g = config.geo_mode == GeoMode::kOurs
                      ? geometry_weights(working, head, config, pair_embed)
                      : ones_gate;
    Var weights = relation_weights(omega_a, omega_g);           // [N × N]
    Var values = matmul(working.features, transpose(head.w_v)); // [N × d_f/N_r]
    head_outputs.push_back(matmul(transpose(weights), values));
  }
  return add(working.features, concat_cols(head_outputs));
}

int64_t param_count(const RelationConfig& config) {
  const int64_t nr = config.num_heads, df = config.d_f, dk = config.d_k, dg = config.d_g;
  return nr * (2 * df * dk + dg) + df * df;
}

int64_t flop_count(const RelationConfig& config, int64_t n_objects) {
  if (n_objects < 1) throw std::invalid_argument("flop_count: need at least one object");
  config.validate();
  const int64_t n = n_objects, nr = config.num_heads, df = config.d_f, dk = config.d_k,
                dg = config.d_g;
  return n * df * (2 * nr * dk + df) + n * n * nr * (dg + dk + df / nr + 1);
}

std::vector<RelationPair> top_relation_pairs(const ObjectSet& objs,
                                             const RelationParams& params,
                                             const RelationConfig& config, int k) {
  if (k < 1) throw std::invalid_argument("top_relation_pairs: k must be >= 1");
  config.validate();
  objs.validate(config);
  const int n = objs.size();

  ObjectSet working = objs;
  if (config.geo_mode == GeoMode::kUnary) {
    working = apply_unary_embedding(objs, params, config);
  }

  Tensor pair_embed;
  if (config.geo_mode == GeoMode::kOurs) {
    pair_embed = pair_geometry_embedding(objs.boxes, config.d_g, config.wave_base, config.eps);
  }

  std::vector<RelationPair> pairs;
  pairs.reserve(static_cast<size_t>(n) * n * params.heads.size());
  for (size_t r = 0; r < params.heads.size(); ++r) {
    Var omega_a = appearance_weights(working, params.heads[r], config);
    Var omega_g = config.geo_mode == GeoMode::kOurs
                      ? geometry_weights(working, params.heads[r], config, &pair_embed)
                      : constant(Tensor::full({n, n}, 1.0));
    const Tensor w = relation_weights(omega_a, omega_g).value();
    for (int m = 0; m < n; ++m) {
      for (int col = 0; col < n; ++col) {
        if (m == col) continue;
        pairs.push_back({col, m, static_cast<int>(r), w.at(m, col)});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const RelationPair& a, const RelationPair& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return std::tie(a.n, a.m, a.head) < std::tie(b.n, b.m, b.head);
  });
  if (static_cast<int>(pairs.size()) > k) pairs.resize(static_cast<size_t>(k));
  return pairs;
}

}  // namespace relnet
