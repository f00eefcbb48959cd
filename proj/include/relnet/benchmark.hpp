#pragma once

#include "relnet/dedup.hpp"
#include "relnet/head.hpp"
#include "relnet/synthgen.hpp"
#include "relnet/trainer.hpp"

namespace relnet {

// Desk-scale defaults shared by the CLI and the acceptance benchmark. The
// paper-scale values (d_f=1024 heads, d_f=128 dedup, N_r=16, ~170k-450k
// iterations) are kept as the type defaults; these run the same pipeline in
// minutes on one CPU.

inline GenConfig benchmark_train_gen() {
  GenConfig g;
  g.seed = 17;
  g.num_scenes = 2000;
  return g;
}

inline GenConfig benchmark_eval_gen() {
  GenConfig g;
  g.seed = 18;
  g.num_scenes = 500;
  return g;
}

inline RelationConfig desk_relation(int d_f) {
  RelationConfig r;
  r.num_heads = 8;
  r.d_k = 32;
  r.d_g = 32;
  r.d_f = d_f;
  return r;
}

inline DedupConfig desk_dedup(int d_feat) {
  DedupConfig d;
  d.d_feat = d_feat;
  d.d_fused = 64;
  d.rank_dim = 64;
  d.relation = desk_relation(64);
  return d;
}

inline HeadConfig desk_head(int d_in, int num_classes) {
  HeadConfig h;
  h.d_in = d_in;
  h.d_hidden = 64;
  h.r1 = 1;
  h.r2 = 1;
  h.num_classes = num_classes;
  h.relation = desk_relation(64);
  h.relation.num_heads = 4;
  h.relation.d_k = 16;
  h.relation.d_g = 16;
  return h;
}

inline TrainConfig benchmark_dedup_train() {
  TrainConfig t;
  t.iterations = 12000;
  t.seed = 1;
  return t;
}

inline TrainConfig benchmark_head_train() {
  TrainConfig t;
  t.iterations = 4000;
  t.seed = 1;
  return t;
}

// Joint training needs a longer schedule: the duplicate classifier only sees
// stable scores once the head has settled.
inline TrainConfig benchmark_e2e_train() {
  TrainConfig t;
  t.iterations = 24000;
  t.seed = 1;
  return t;
}

}  // namespace relnet
