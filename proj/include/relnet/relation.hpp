#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relnet/autodiff.hpp"
#include "relnet/geometry.hpp"
#include "relnet/rng.hpp"

namespace relnet {

// Geometric-weight variants: "ours" gates attention by embedded relative
// geometry, "none" uses a constant 1 gate, "unary" folds an absolute-geometry
// embedding into the appearance features and then behaves like "none".
enum class GeoMode { kOurs, kNone, kUnary };

const char* geo_mode_name(GeoMode m);
GeoMode geo_mode_from_name(const std::string& name);

struct RelationConfig {
  int num_heads = 16;    // N_r
  int d_k = 64;          // key/query projection dim
  int d_g = 64;          // geometry embedding dim, divisible by 8
  int d_f = 1024;        // appearance feature dim, divisible by num_heads
  GeoMode geo_mode = GeoMode::kOurs;
  double eps = kGeomClampEps;
  double wave_base = kWaveBase;

  void validate() const;  // throws std::invalid_argument
};

// Learnable weights of one relation module: {W_K, W_Q, W_V, W_G} per head,
// plus a geometry-to-feature projection W_U in unary mode.
struct RelationParams {
  struct Head {
    Var w_k;  // [d_k × d_f]
    Var w_q;  // [d_k × d_f]
    Var w_v;  // [(d_f/N_r) × d_f]
    Var w_g;  // [1 × d_g]
  };
  std::vector<Head> heads;
  Var w_u;  // [d_f × d_g], unary mode only

  static RelationParams init(const RelationConfig& config, uint64_t seed,
                             const std::string& name_prefix);
  void collect(const std::string& prefix,
               std::vector<std::pair<std::string, Var>>& out) const;
  int64_t learnable_count() const;
};

// N objects: appearance features as rows of a [N × d_f] tensor plus one box
// per object.
struct ObjectSet {
  Var features;
  std::vector<Box> boxes;

  int size() const { return static_cast<int>(boxes.size()); }
  void validate(const RelationConfig& config) const;
};

// Per-head appearance weights, entry (m, n) = dot(W_K f^m, W_Q f^n) / sqrt(d_k).
Var appearance_weights(const ObjectSet& objs, const RelationParams::Head& head,
                       const RelationConfig& config);

// Per-head geometry weights, entry (m, n) = relu(W_G · embed(rel_geom(box_m, box_n))).
// Only valid in "ours" mode. pair_embed, when given, must be
// pair_geometry_embedding(boxes, d_g) and is shared across heads.
Var geometry_weights(const ObjectSet& objs, const RelationParams::Head& head,
                     const RelationConfig& config, const Tensor* pair_embed = nullptr);

// Normalizes the gated exponentials over contributors: column n holds
// ω_G^{mn} exp(ω_A^{mn}) / Σ_k ω_G^{kn} exp(ω_A^{kn}). A column whose
// denominator vanishes is defined as all-zero.
Var relation_weights(const Var& appearance, const Var& geometry);

// Full module: output(n) = f_A^n + Concat_r[ Σ_m ω^{mn,r} (W_V^r f_A^m) ].
// Same output shape as input.
Var relation_module_forward(const ObjectSet& objs, const RelationParams& params,
                            const RelationConfig& config,
                            const Tensor* pair_embed = nullptr);

// Exact parameter / FLOP counts of one module:
//   space = N_r (2 d_f d_k + d_g) + d_f^2
//   comp  = N d_f (2 N_r d_k + d_f) + N^2 N_r (d_g + d_k + d_f/N_r + 1)
int64_t param_count(const RelationConfig& config);
int64_t flop_count(const RelationConfig& config, int64_t n_objects);

struct RelationPair {
  int n = 0;     // receiver object
  int m = 0;     // contributing object
  int head = 0;
  double weight = 0.0;
};

// The k largest off-diagonal relation weights across heads, sorted by weight
// descending, ties broken by ascending (n, m, head).
std::vector<RelationPair> top_relation_pairs(const ObjectSet& objs,
                                             const RelationParams& params,
                                             const RelationConfig& config, int k);

}  // namespace relnet
