#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "motion/spl.hpp"
#include "motion/util.hpp"

using namespace motion;
using namespace motion::grad;

namespace {

const char* kChain =
    "a root 0 0 0\n"
    "b a    1 0 0 unit\n"
    "c b    1 0 0\n";

SkeletonSpec body15() {
  return load_skeleton(std::string(MOTION_SHARE_DIR) + "/skeletons/smpl15.skel");
}

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-scale, scale);
  return t;
}

/// Plain-loop two-layer evaluation of one joint from raw weight tensors.
std::vector<double> ref_joint(const std::vector<double>& input, const Tensor& w1,
                              const Tensor& b1, const Tensor& w2, const Tensor& b2) {
  const std::size_t h = w1.dim(1), m = w2.dim(1);
  std::vector<double> hid(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    double acc = b1[j];
    for (std::size_t i = 0; i < input.size(); ++i) acc += input[i] * w1.at(i, j);
    hid[j] = acc > 0.0 ? acc : 0.0;
  }
  std::vector<double> out(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double acc = b2[j];
    for (std::size_t i = 0; i < h; ++i) acc += hid[i] * w2.at(i, j);
    out[j] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("kinematic wiring feeds each joint its parent") {
  const SkeletonSpec skel = parse_skeleton(kChain);
  ParameterStore store(1);
  SplConfig cfg;
  cfg.hierarchy = Hierarchy::Kinematic;
  cfg.feeding = Feeding::Sparse;
  cfg.hidden = 5;
  cfg.joint_size = 2;
  cfg.context_dim = 4;
  const SplLayer spl(skel, cfg, store);

  CHECK(spl.evaluation_order() == std::vector<std::size_t>{0, 1, 2});
  CHECK(spl.fed(0).empty());
  CHECK(spl.fed(1) == std::vector<std::size_t>{0});
  CHECK(spl.fed(2) == std::vector<std::size_t>{1});
  CHECK(spl.input_dim(0) == 4);
  CHECK(spl.input_dim(1) == 6);
  CHECK(spl.input_dim(2) == 6);
  CHECK(store.get("spl.j01.w1").shape() == std::vector<std::size_t>{6, 5});
  CHECK(store.get("spl.j01.w2").shape() == std::vector<std::size_t>{5, 2});
  CHECK(store.names().size() == 12);  // 4 tensors per joint
}

TEST_CASE("dense feeding sees every ancestor") {
  const SkeletonSpec skel = body15();
  ParameterStore store(1);
  SplConfig cfg;
  cfg.feeding = Feeding::Dense;
  cfg.hidden = 3;
  cfg.joint_size = 2;
  cfg.context_dim = 4;
  const SplLayer spl(skel, cfg, store);

  for (std::size_t k = 0; k < skel.joints(); ++k) {
    // Reference: walk the parent chain.
    std::vector<std::size_t> ancestors;
    for (std::ptrdiff_t p = skel.parents[k]; p >= 0;
         p = skel.parents[static_cast<std::size_t>(p)]) {
      ancestors.push_back(static_cast<std::size_t>(p));
    }
    std::reverse(ancestors.begin(), ancestors.end());  // root first
    CHECK(spl.fed(k) == ancestors);
    CHECK(spl.input_dim(k) == 4 + 2 * ancestors.size());
  }
}

TEST_CASE("independent hierarchy ignores the feeding mode") {
  const SkeletonSpec skel = body15();
  SplConfig cfg;
  cfg.hierarchy = Hierarchy::Independent;
  cfg.hidden = 4;
  cfg.joint_size = 3;
  cfg.context_dim = 6;

  ParameterStore sparse_store(9), dense_store(9);
  cfg.feeding = Feeding::Sparse;
  const SplLayer sparse(skel, cfg, sparse_store);
  cfg.feeding = Feeding::Dense;
  const SplLayer dense(skel, cfg, dense_store);

  Rng rng(5);
  const Tensor ctx = random_tensor(rng, {2, 6});
  Tape t1, t2;
  const Var y1 = sparse.forward(t1, sparse_store, t1.leaf(ctx));
  const Var y2 = dense.forward(t2, dense_store, t2.leaf(ctx));
  for (std::size_t k = 0; k < skel.joints(); ++k) {
    CHECK(sparse.fed(k).empty());
    CHECK(dense.fed(k).empty());
  }
  for (std::size_t i = 0; i < t1.value(y1).numel(); ++i) {
    CHECK(t1.value(y1)[i] == t2.value(y2)[i]);
  }
}

TEST_CASE("reverse hierarchy evaluates leaves before parents") {
  const SkeletonSpec skel = parse_skeleton(kChain);
  ParameterStore store(2);
  SplConfig cfg;
  cfg.hierarchy = Hierarchy::Reverse;
  cfg.hidden = 3;
  cfg.joint_size = 2;
  cfg.context_dim = 2;
  const SplLayer spl(skel, cfg, store);

  CHECK(spl.evaluation_order() == std::vector<std::size_t>{2, 1, 0});
  CHECK(spl.fed(2).empty());
  CHECK(spl.fed(1) == std::vector<std::size_t>{2});
  CHECK(spl.fed(0) == std::vector<std::size_t>{1});

  // On the body, a parent with several children sees them all.
  const SkeletonSpec body = body15();
  ParameterStore store2(2);
  const SplLayer rev(body, cfg, store2);
  const std::size_t spine2 = body.index_of("spine2");
  const auto kids = body.children()[spine2];
  CHECK(rev.fed(spine2).size() == kids.size());
  for (std::size_t c : kids) {
    CHECK(std::find(rev.fed(spine2).begin(), rev.fed(spine2).end(), c) !=
          rev.fed(spine2).end());
  }
}

TEST_CASE("random hierarchy is a seeded chain over all joints") {
  const SkeletonSpec skel = body15();
  SplConfig cfg;
  cfg.hierarchy = Hierarchy::Random;
  cfg.hidden = 3;
  cfg.joint_size = 2;
  cfg.context_dim = 2;
  cfg.random_seed = 11;

  ParameterStore s1(1), s2(1), s3(1);
  const SplLayer a(skel, cfg, s1);
  const SplLayer b(skel, cfg, s2);
  cfg.random_seed = 12;
  const SplLayer c(skel, cfg, s3);

  CHECK(a.evaluation_order() == b.evaluation_order());
  CHECK(a.evaluation_order() != c.evaluation_order());
  // A permutation of all joints.
  std::set<std::size_t> seen(a.evaluation_order().begin(), a.evaluation_order().end());
  CHECK(seen.size() == skel.joints());
  // Chain: first has no feed, each next feeds on its predecessor.
  const auto& order = a.evaluation_order();
  CHECK(a.fed(order[0]).empty());
  for (std::size_t i = 1; i < order.size(); ++i) {
    CHECK(a.fed(order[i]) == std::vector<std::size_t>{order[i - 1]});
  }
}

TEST_CASE("forward matches a plain-loop evaluation joint by joint") {
  const SkeletonSpec skel = parse_skeleton(kChain);
  ParameterStore store(33);
  SplConfig cfg;
  cfg.hidden = 5;
  cfg.joint_size = 2;
  cfg.context_dim = 4;
  const SplLayer spl(skel, cfg, store);

  Rng rng(6);
  const Tensor ctx = random_tensor(rng, {3, 4});
  Tape tape;
  const Var out = spl.forward(tape, store, tape.leaf(ctx));
  const Tensor& y = tape.value(out);
  REQUIRE(y.shape() == std::vector<std::size_t>{3, 6});

  for (std::size_t row = 0; row < 3; ++row) {
    std::vector<double> context(4);
    for (std::size_t i = 0; i < 4; ++i) context[i] = ctx.at(row, i);

    const auto pred_a = ref_joint(context, store.get("spl.j00.w1"), store.get("spl.j00.b1"),
                                  store.get("spl.j00.w2"), store.get("spl.j00.b2"));
    std::vector<double> in_b = context;
    in_b.insert(in_b.end(), pred_a.begin(), pred_a.end());
    const auto pred_b = ref_joint(in_b, store.get("spl.j01.w1"), store.get("spl.j01.b1"),
                                  store.get("spl.j01.w2"), store.get("spl.j01.b2"));
    std::vector<double> in_c = context;
    in_c.insert(in_c.end(), pred_b.begin(), pred_b.end());
    const auto pred_c = ref_joint(in_c, store.get("spl.j02.w1"), store.get("spl.j02.b1"),
                                  store.get("spl.j02.w2"), store.get("spl.j02.b2"));

    const std::vector<std::vector<double>> expect{pred_a, pred_b, pred_c};
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t i = 0; i < 2; ++i) {
        CHECK(y.at(row, 2 * k + i) == doctest::Approx(expect[k][i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("independent head equals a block-masked dense layer") {
  const SkeletonSpec skel = body15();
  ParameterStore store(77);
  SplConfig cfg;
  cfg.hierarchy = Hierarchy::Independent;
  cfg.hidden = 6;
  cfg.joint_size = 3;
  cfg.context_dim = 8;
  const SplLayer spl(skel, cfg, store);
  const std::size_t k = skel.joints(), h = cfg.hidden, m = cfg.joint_size,
                    d = cfg.context_dim;

  // Assemble one wide first layer [d x k*h] and a block-diagonal second
  // layer [k*h x k*m]; zeros outside the blocks are the mask.
  Tensor w1({d, k * h}), b1({k * h});
  Tensor w2({k * h, k * m}), b2({k * m});
  for (std::size_t j = 0; j < k; ++j) {
    char name[32];
    std::snprintf(name, sizeof name, "spl.j%02zu", j);
    const Tensor& jw1 = store.get(std::string(name) + ".w1");
    const Tensor& jb1 = store.get(std::string(name) + ".b1");
    const Tensor& jw2 = store.get(std::string(name) + ".w2");
    const Tensor& jb2 = store.get(std::string(name) + ".b2");
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < h; ++c) w1.at(r, j * h + c) = jw1.at(r, c);
    for (std::size_t c = 0; c < h; ++c) b1[j * h + c] = jb1[c];
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < m; ++c) w2.at(j * h + r, j * m + c) = jw2.at(r, c);
    for (std::size_t c = 0; c < m; ++c) b2[j * m + c] = jb2[c];
  }

  Rng rng(8);
  const Tensor ctx = random_tensor(rng, {4, d});
  Tape tape;
  const Var structured = spl.forward(tape, store, tape.leaf(ctx));
  Var wide = tape.bias_add(
      tape.matmul(tape.relu(tape.bias_add(tape.matmul(tape.leaf(ctx), tape.leaf(w1)),
                                          tape.leaf(b1))),
                  tape.leaf(w2)),
      tape.leaf(b2));
  const Tensor& ys = tape.value(structured);
  const Tensor& yw = tape.value(wide);
  REQUIRE(ys.same_shape(yw));
  for (std::size_t i = 0; i < ys.numel(); ++i) {
    CHECK(std::abs(ys[i] - yw[i]) < 1e-12);
  }
}

TEST_CASE("later joints cannot influence earlier predictions") {
  const SkeletonSpec skel = body15();
  for (const Hierarchy h : {Hierarchy::Kinematic, Hierarchy::Random}) {
    for (const Feeding f : {Feeding::Sparse, Feeding::Dense}) {
      CAPTURE(hierarchy_name(h));
      CAPTURE(feeding_name(f));
      ParameterStore store(55);
      SplConfig cfg;
      cfg.hierarchy = h;
      cfg.feeding = f;
      cfg.hidden = 4;
      cfg.joint_size = 3;
      cfg.context_dim = 5;
      cfg.random_seed = 3;
      const SplLayer spl(skel, cfg, store);

      Rng rng(4);
      const Tensor ctx = random_tensor(rng, {2, 5});
      Tape before;
      const Tensor base = before.value(spl.forward(before, store, before.leaf(ctx)));

      // Perturb the last-evaluated joint's output bias; unlike a first-layer
      // weight this cannot hide behind an inactive relu unit.
      const std::size_t last = spl.evaluation_order().back();
      char name[32];
      std::snprintf(name, sizeof name, "spl.j%02zu.b2", last);
      store.get(name)[0] += 0.75;

      Tape after;
      const Tensor changed = after.value(spl.forward(after, store, after.leaf(ctx)));

      const std::size_t m = cfg.joint_size;
      bool last_changed = false;
      for (std::size_t row = 0; row < 2; ++row) {
        for (std::size_t k = 0; k < skel.joints(); ++k) {
          for (std::size_t i = 0; i < m; ++i) {
            const double a = base.at(row, k * m + i);
            const double b = changed.at(row, k * m + i);
            if (k == last) {
              last_changed |= a != b;
            } else {
              CHECK(a == b);  // bit-identical
            }
          }
        }
      }
      CHECK(last_changed);
    }
  }
}

TEST_CASE("per-joint loss equals the scaled full-vector mse") {
  Rng rng(14);
  const std::size_t frames = 7, joints = 5, m = 4;
  std::vector<std::vector<double>> pred(frames), target(frames);
  for (auto& f : pred) {
    f.resize(joints * m);
    for (auto& v : f) v = rng.uniform(-2, 2);
  }
  for (auto& f : target) {
    f.resize(joints * m);
    for (auto& v : f) v = rng.uniform(-2, 2);
  }

  const double loss = per_joint_loss(pred, target, joints);
  double mse = 0.0;
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t i = 0; i < joints * m; ++i) {
      const double d = pred[t][i] - target[t][i];
      mse += d * d;
    }
  mse /= static_cast<double>(frames * joints * m);
  const double scaled = static_cast<double>(frames * joints * m) * mse;
  CHECK(std::abs(loss - scaled) / std::abs(scaled) < 1e-10);

  CHECK(per_joint_loss(pred, pred, joints) == 0.0);
}

TEST_CASE("per-joint loss on a tiny hand example") {
  // Two joints, one frame: residuals (1,0) and (2,2) give 1 + 8.
  const std::vector<std::vector<double>> pred{{1.0, 0.0, 3.0, 4.0}};
  const std::vector<std::vector<double>> target{{0.0, 0.0, 1.0, 2.0}};
  CHECK(per_joint_loss(pred, target, 2) == doctest::Approx(9.0).epsilon(1e-15));
  const std::vector<std::vector<double>> short_target{{0.0, 0.0}};
  CHECK_THROWS_AS(per_joint_loss(pred, short_target, 2), std::invalid_argument);
  CHECK_THROWS_AS(per_joint_loss(pred, {}, 2), std::invalid_argument);
}

TEST_CASE("residual combination adds elementwise") {
  const std::vector<double> input{1.0, 2.0, 3.0};
  const std::vector<double> delta{0.5, -1.0, 0.25};
  const auto out = residual_combine(input, delta);
  CHECK(out == std::vector<double>{1.5, 1.0, 3.25});
  CHECK_THROWS_AS(residual_combine(input, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("configuration is validated") {
  const SkeletonSpec skel = parse_skeleton(kChain);
  ParameterStore store(1);
  SplConfig cfg;
  cfg.hidden = 0;
  cfg.joint_size = 2;
  cfg.context_dim = 2;
  CHECK_THROWS_AS(SplLayer(skel, cfg, store), std::invalid_argument);
  cfg.hidden = 2;
  cfg.context_dim = 0;
  CHECK_THROWS_AS(SplLayer(skel, cfg, store), std::invalid_argument);

  cfg.context_dim = 3;
  ParameterStore ok_store(1);
  const SplLayer spl(skel, cfg, ok_store);
  Tape tape;
  Var bad_ctx = tape.leaf(Tensor({2, 5}));
  CHECK_THROWS_AS(spl.forward(tape, ok_store, bad_ctx), std::invalid_argument);
}

TEST_CASE("hierarchy and feeding names round-trip") {
  for (const char* n : {"kinematic", "independent", "reverse", "random"}) {
    CHECK(std::string(hierarchy_name(hierarchy_from_name(n))) == n);
  }
  for (const char* n : {"sparse", "dense"}) {
    CHECK(std::string(feeding_name(feeding_from_name(n))) == n);
  }
  CHECK_THROWS_AS(hierarchy_from_name("tree"), std::invalid_argument);
  CHECK_THROWS_AS(feeding_from_name("full"), std::invalid_argument);
}
