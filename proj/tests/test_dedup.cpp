#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relnet/dedup.hpp"

using namespace relnet;

namespace {

DedupConfig small_dedup() {
  DedupConfig c;
  c.d_feat = 6;
  c.d_fused = 8;
  c.rank_dim = 4;
  c.relation.num_heads = 2;
  c.relation.d_k = 4;
  c.relation.d_g = 16;
  c.relation.d_f = 8;
  c.eta_set = {0.5, 0.7};
  c.n_cap = 16;
  return c;
}

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

DedupInput random_input(const DedupConfig& cfg, int n, Rng& rng) {
  DedupInput input;
  input.features = constant(random_tensor({n, cfg.d_feat}, rng));
  for (int i = 0; i < n; ++i) input.scores.push_back(rng.uniform(0.05, 0.95));
  input.boxes = random_boxes(n, rng);
  return input;
}

}  // namespace

TEST_CASE("rank_embed: single detection gets rank one") {
  const Tensor e = rank_embed({0.7}, 8);
  const std::vector<double> expected = sinusoid_embed(1.0, 8);
  for (int j = 0; j < 8; ++j) CHECK(e.at(0, j) == expected[static_cast<size_t>(j)]);
}

TEST_CASE("rank_embed: equal scores keep input order") {
  const Tensor e = rank_embed({0.5, 0.5, 0.5}, 4);
  for (int rank = 1; rank <= 3; ++rank) {
    const std::vector<double> expected = sinusoid_embed(static_cast<double>(rank), 4);
    for (int j = 0; j < 4; ++j) CHECK(e.at(rank - 1, j) == expected[static_cast<size_t>(j)]);
  }
}

TEST_CASE("rank_embed: permuting distinct scores permutes rows consistently") {
  Rng rng(1);
  std::vector<double> scores = {0.9, 0.2, 0.7, 0.5};
  const Tensor base = rank_embed(scores, 6);
  const std::vector<int> perm = {2, 0, 3, 1};
  std::vector<double> permuted(scores.size());
  for (size_t i = 0; i < perm.size(); ++i) permuted[i] = scores[static_cast<size_t>(perm[i])];
  const Tensor moved = rank_embed(permuted, 6);
  for (size_t i = 0; i < perm.size(); ++i) {
    for (int j = 0; j < 6; ++j) {
      CHECK(moved.at(static_cast<int>(i), j) == base.at(perm[i], j));
    }
  }
}

TEST_CASE("dedup_forward: all-zero parameters give probability one half") {
  DedupConfig cfg = small_dedup();
  Rng rng(2);
  DedupParams params = DedupParams::init(cfg, 3);
  std::vector<std::pair<std::string, Var>> named;
  params.collect("dedup", named);
  for (auto& [name, v] : named) v.mutable_value().fill(0.0);

  DedupInput input = random_input(cfg, 4, rng);
  const Tensor s1 = dedup_forward(input, params, cfg).value();
  CHECK(s1.rows() == 4);
  CHECK(s1.cols() == 2);
  for (int64_t i = 0; i < s1.numel(); ++i) CHECK(s1[i] == doctest::Approx(0.5));
}

TEST_CASE("dedup_forward output shape is N x |eta set| and values lie in (0,1)") {
  DedupConfig cfg = small_dedup();
  Rng rng(3);
  DedupParams params = DedupParams::init(cfg, 4);
  for (int n : {1, 3, 7}) {
    DedupInput input = random_input(cfg, n, rng);
    const Tensor s1 = dedup_forward(input, params, cfg).value();
    CHECK(s1.rows() == n);
    CHECK(s1.cols() == static_cast<int>(cfg.eta_set.size()));
    for (int64_t i = 0; i < s1.numel(); ++i) {
      CHECK(s1[i] > 0.0);
      CHECK(s1[i] < 1.0);
    }
  }
}

TEST_CASE("dedup_forward matches a loop-based reimplementation") {
  DedupConfig cfg = small_dedup();
  Rng rng(4);
  DedupParams params = DedupParams::init(cfg, 5);
  const int n = 4;
  DedupInput input = random_input(cfg, n, rng);
  const Tensor s1 = dedup_forward(input, params, cfg).value();

  // fused = W_f f + W_fR rank
  const Tensor ranks = rank_embed(input.scores, cfg.rank_dim, cfg.relation.wave_base);
  std::vector<std::vector<double>> fused(static_cast<size_t>(n),
                                         std::vector<double>(static_cast<size_t>(cfg.d_fused)));
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < cfg.d_fused; ++r) {
      double s = 0.0;
      for (int j = 0; j < cfg.d_feat; ++j) {
        s += params.w_f.value().at(r, j) * input.features.value().at(i, j);
      }
      for (int j = 0; j < cfg.rank_dim; ++j) s += params.w_fr.value().at(r, j) * ranks.at(i, j);
      fused[static_cast<size_t>(i)][static_cast<size_t>(r)] = s;
    }
  }

  // relation module on the fused features (ours mode), scalar loops
  const int d_v = cfg.d_fused / cfg.relation.num_heads;
  std::vector<std::vector<double>> related = fused;
  for (int r = 0; r < cfg.relation.num_heads; ++r) {
    const auto& head = params.relation.heads[static_cast<size_t>(r)];
    std::vector<std::vector<double>> omega(static_cast<size_t>(n),
                                           std::vector<double>(static_cast<size_t>(n)));
    for (int m = 0; m < n; ++m) {
      for (int q = 0; q < n; ++q) {
        double kq = 0.0;
        for (int a = 0; a < cfg.relation.d_k; ++a) {
          double km = 0.0, qn = 0.0;
          for (int j = 0; j < cfg.d_fused; ++j) {
            km += head.w_k.value().at(a, j) * fused[static_cast<size_t>(m)][static_cast<size_t>(j)];
            qn += head.w_q.value().at(a, j) * fused[static_cast<size_t>(q)][static_cast<size_t>(j)];
          }
          kq += km * qn;
        }
        const std::vector<double> e = embed_geom(
            rel_geom(input.boxes[static_cast<size_t>(m)], input.boxes[static_cast<size_t>(q)]),
            cfg.relation.d_g, cfg.relation.wave_base);
        double gd = 0.0;
        for (int j = 0; j < cfg.relation.d_g; ++j) gd += head.w_g.value().at(0, j) * e[static_cast<size_t>(j)];
        omega[static_cast<size_t>(m)][static_cast<size_t>(q)] =
            std::max(0.0, gd) * std::exp(kq / std::sqrt(double(cfg.relation.d_k)));
      }
    }
    for (int q = 0; q < n; ++q) {
      double denom = 0.0;
      for (int m = 0; m < n; ++m) denom += omega[static_cast<size_t>(m)][static_cast<size_t>(q)];
      for (int dv = 0; dv < d_v; ++dv) {
        double s = 0.0;
        for (int m = 0; m < n; ++m) {
          if (denom <= 0.0) break;
          double vm = 0.0;
          for (int j = 0; j < cfg.d_fused; ++j) {
            vm += head.w_v.value().at(dv, j) * fused[static_cast<size_t>(m)][static_cast<size_t>(j)];
          }
          s += omega[static_cast<size_t>(m)][static_cast<size_t>(q)] / denom * vm;
        }
        related[static_cast<size_t>(q)][static_cast<size_t>(r * d_v + dv)] += s;
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < static_cast<int>(cfg.eta_set.size()); ++k) {
      double logit = 0.0;
      for (int j = 0; j < cfg.d_fused; ++j) {
        logit += params.w_s.value().at(k, j) * related[static_cast<size_t>(i)][static_cast<size_t>(j)];
      }
      const double expected = 1.0 / (1.0 + std::exp(-logit));
      CHECK(s1.at(i, k) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("dedup_forward is permutation equivariant given distinct scores") {
  DedupConfig cfg = small_dedup();
  Rng rng(5);
  DedupParams params = DedupParams::init(cfg, 6);
  const int n = 5;
  DedupInput input = random_input(cfg, n, rng);
  const Tensor base = dedup_forward(input, params, cfg).value();

  const std::vector<int> perm = {3, 1, 4, 0, 2};
  DedupInput moved;
  Tensor pf({n, cfg.d_feat});
  for (int i = 0; i < n; ++i) {
    const int src = perm[static_cast<size_t>(i)];
    for (int j = 0; j < cfg.d_feat; ++j) pf.at(i, j) = input.features.value().at(src, j);
    moved.scores.push_back(input.scores[static_cast<size_t>(src)]);
    moved.boxes.push_back(input.boxes[static_cast<size_t>(src)]);
  }
  moved.features = constant(std::move(pf));
  const Tensor permuted = dedup_forward(moved, params, cfg).value();
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 2; ++k) {
      CHECK(std::abs(permuted.at(i, k) - base.at(perm[static_cast<size_t>(i)], k)) < 1e-9);
    }
  }
}

TEST_CASE("dedup_forward enforces the n_cap precondition") {
  DedupConfig cfg = small_dedup();
  cfg.n_cap = 3;
  Rng rng(6);
  DedupParams params = DedupParams::init(cfg, 7);
  DedupInput input = random_input(cfg, 4, rng);
  CHECK_THROWS_AS(dedup_forward(input, params, cfg), std::invalid_argument);
}

TEST_CASE("final_scores hand cases") {
  CHECK(final_scores({0.0}, {{0.3, 0.9}})[0] == 0.0);
  CHECK(final_scores({0.7}, {{1.0, 1.0, 1.0}})[0] == doctest::Approx(0.7));
  CHECK(final_scores({0.8}, {{0.9, 0.5}})[0] == doctest::Approx(0.56));
  CHECK_THROWS_AS(final_scores({0.5, 0.5}, {{0.5}}), std::invalid_argument);
}

TEST_CASE("assign_labels follows the highest-score-wins rule") {
  // One ground truth; A overlaps with IoU ~0.818, B with IoU 0.6.
  const Box gt{0, 0, 2, 2};
  const Box a{0.2, 0, 2, 2};
  const Box b{0.5, 0, 2, 2};
  CHECK(iou(a, gt) == doctest::Approx(1.8 * 2 / (8 - 1.8 * 2)));
  CHECK(iou(b, gt) == doctest::Approx(0.6));

  // eta = 0.5: both match, B has the higher score and wins.
  std::vector<int> labels = assign_labels({a, b}, {0.9, 0.95}, {gt}, 0.5);
  CHECK(labels[0] == 0);
  CHECK(labels[1] == 1);

  // eta = 0.7: only A clears the threshold.
  labels = assign_labels({a, b}, {0.9, 0.95}, {gt}, 0.7);
  CHECK(labels[0] == 1);
  CHECK(labels[1] == 0);
}

TEST_CASE("assign_labels: no ground truths means all duplicates") {
  Rng rng(7);
  const std::vector<int> labels =
      assign_labels(random_boxes(4, rng), {0.1, 0.2, 0.3, 0.4}, {}, 0.5);
  for (int v : labels) CHECK(v == 0);
}

TEST_CASE("assign_labels emits at most one correct detection per ground truth") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.uniform_int(1, 10);
    const int g = rng.uniform_int(1, 3);
    std::vector<Box> dets = random_boxes(n, rng);
    std::vector<Box> gts = random_boxes(g, rng);
    std::vector<double> scores;
    for (int i = 0; i < n; ++i) scores.push_back(rng.uniform(0.0, 1.0));
    for (double eta : {0.5, 0.7, 0.9}) {
      const std::vector<int> labels = assign_labels(dets, scores, gts, eta);
      int positives = 0;
      for (int v : labels) positives += v;
      CHECK(positives <= g);
    }
  }
}

TEST_CASE("dedup_loss hand values and the published gradient") {
  // y = 0, s0 = 0: -log(1 - 0) = 0
  {
    Var s1(Tensor({1, 1}, {0.7}), true);
    Var loss = dedup_loss(constant(Tensor({1, 1}, {0.0})), s1, Tensor({1, 1}, {0.0}));
    CHECK(loss.value()[0] == doctest::Approx(0.0));
  }
  // y = 1, s0 = 1, s1 = 1: loss 0 up to the probability clamp
  {
    Var s1 = constant(Tensor({1, 1}, {1.0}));
    Var loss = dedup_loss(constant(Tensor({1, 1}, {1.0})), s1, Tensor({1, 1}, {1.0}));
    CHECK(std::abs(loss.value()[0]) < 1e-9);
  }
  // y = 0, s0 = 0.01, s1 = 0.5: value -log(0.995), gradient 0.01/0.995
  {
    Var s1(Tensor({1, 1}, {0.5}), true);
    Var loss = dedup_loss(constant(Tensor({1, 1}, {0.01})), s1, Tensor({1, 1}, {0.0}));
    CHECK(loss.value()[0] == doctest::Approx(-std::log(0.995)).epsilon(1e-12));
    CHECK(loss.value()[0] == doctest::Approx(0.005013).epsilon(1e-4));
    s1.zero_grad();
    backward(loss);
    CHECK(s1.grad()[0] == doctest::Approx(0.01 / 0.995).epsilon(1e-12));
    CHECK(s1.grad()[0] == doctest::Approx(0.010050).epsilon(1e-4));
  }
}

TEST_CASE("analytic dL/ds1 equals s0/(1 - s0 s1) across a random grid") {
  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const double s0 = rng.uniform(0.001, 0.999);
    const double s1v = rng.uniform(0.001, 0.999);
    Var s1(Tensor({1, 1}, {s1v}), true);
    Var loss = dedup_loss(constant(Tensor({1, 1}, {s0})), s1, Tensor({1, 1}, {0.0}));
    s1.zero_grad();
    backward(loss);
    CHECK(std::abs(s1.grad()[0] - s0 / (1.0 - s0 * s1v)) < 1e-10);
  }
}

TEST_CASE("gradients pass through dedup_forward and dedup_loss") {
  DedupConfig cfg = small_dedup();
  Rng rng(10);
  DedupParams params = DedupParams::init(cfg, 11);
  const int n = 4;
  DedupInput input = random_input(cfg, n, rng);
  Tensor labels({n, 2});
  labels.at(0, 0) = 1.0;
  labels.at(2, 1) = 1.0;
  Tensor s0({n, 1});
  for (int i = 0; i < n; ++i) s0.at(i, 0) = input.scores[static_cast<size_t>(i)];

  std::vector<std::pair<std::string, Var>> named;
  params.collect("dedup", named);
  auto loss_fn = [&]() {
    Var s1 = dedup_forward(input, params, cfg);
    return dedup_loss(constant(s0), s1, labels);
  };
  GradCheckReport report = grad_check(loss_fn, named, 1e-5, 1e-4);
  INFO("max rel err ", report.max_rel_err);
  CHECK(report.pass);
}

TEST_CASE("dedup_inference prunes, caps, and multiplies scores") {
  DedupConfig cfg = small_dedup();
  Rng rng(11);
  DedupParams params = DedupParams::init(cfg, 12);

  std::vector<Detection> dets;
  auto make_det = [&](int cls, double score) {
    Detection d;
    d.box = random_boxes(1, rng)[0];
    d.class_id = cls;
    d.score = score;
    const Tensor f = random_tensor({1, cfg.d_feat}, rng);
    d.feature.assign(f.data().begin(), f.data().end());
    return d;
  };

  SUBCASE("everything below the prune threshold yields zero final scores") {
    for (int i = 0; i < 4; ++i) dets.push_back(make_det(1 + i % 2, 0.005));
    const auto out = dedup_inference(dets, params, cfg);
    REQUIRE(out.size() == 4);
    for (const auto& sd : out) {
      CHECK(sd.final_score == 0.0);
      CHECK(sd.s1 == 0.0);
    }
  }

  SUBCASE("a single survivor runs on a one-object set") {
    dets.push_back(make_det(1, 0.8));
    dets.push_back(make_det(1, 0.004));
    const auto out = dedup_inference(dets, params, cfg);
    REQUIRE(out.size() == 2);
    CHECK(out[1].final_score == 0.0);

    DedupInput single;
    Tensor f({1, cfg.d_feat});
    for (int j = 0; j < cfg.d_feat; ++j) f.at(0, j) = dets[0].feature[static_cast<size_t>(j)];
    single.features = constant(std::move(f));
    single.scores = {0.8};
    single.boxes = {dets[0].box};
    const Tensor s1 = dedup_forward(single, params, cfg).value();
    double mean = 0.0;
    for (int k = 0; k < s1.cols(); ++k) mean += s1.at(0, k);
    mean /= s1.cols();
    CHECK(out[0].s1 == doctest::Approx(mean).epsilon(1e-12));
    CHECK(out[0].final_score == doctest::Approx(0.8 * mean).epsilon(1e-12));
  }

  SUBCASE("final score never exceeds s0") {
    for (int i = 0; i < 8; ++i) dets.push_back(make_det(1 + i % 3, rng.uniform(0.02, 0.99)));
    const auto out = dedup_inference(dets, params, cfg);
    for (const auto& sd : out) {
      CHECK(sd.final_score <= sd.detection.score + 1e-15);
      CHECK(sd.final_score >= 0.0);
    }
  }

  SUBCASE("per-class cap keeps the top n_cap by score") {
    cfg.n_cap = 2;
    for (double s : {0.9, 0.3, 0.7, 0.5}) dets.push_back(make_det(1, s));
    const auto out = dedup_inference(dets, params, cfg);
    CHECK(out[0].final_score > 0.0);   // 0.9 kept
    CHECK(out[1].final_score == 0.0);  // 0.3 dropped by the cap
    CHECK(out[2].final_score > 0.0);   // 0.7 kept
    CHECK(out[3].final_score == 0.0);  // 0.5 dropped
  }
}

TEST_CASE("dedup config validation") {
  DedupConfig cfg = small_dedup();
  cfg.eta_set = {0.5, 0.5};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_dedup();
  cfg.eta_set = {0.0, 0.5};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_dedup();
  cfg.d_fused = 12;  // != relation.d_f
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_dedup();
  cfg.rank_dim = 5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
