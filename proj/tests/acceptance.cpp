// Acceptance gate: one [PASS]/[FAIL] line per criterion, nonzero exit when
// any criterion fails. With no arguments all ten run in order into a fresh
// ./acceptance_work directory. A digits-and-commas argument (e.g. "7" or
// "1,2,10") selects a subset and keeps the existing work directory so later
// criteria can reuse earlier artifacts; any other argument names the work
// directory.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "motion/cli.hpp"
#include "motion/config.hpp"
#include "motion/data.hpp"
#include "motion/grad/checkpoint.hpp"
#include "motion/grad/gradcheck.hpp"
#include "motion/grad/layers.hpp"
#include "motion/grad/tape.hpp"
#include "motion/metrics.hpp"
#include "motion/models.hpp"
#include "motion/pose.hpp"
#include "motion/rotmath.hpp"
#include "motion/skeleton.hpp"
#include "motion/spl.hpp"
#include "motion/util.hpp"

namespace fs = std::filesystem;
using namespace motion;
using grad::CellState;
using grad::CellType;
using grad::ParameterStore;
using grad::Tape;
using grad::Tensor;
using grad::Var;

namespace {

fs::path g_work = "acceptance_work";
const std::string kShare = MOTION_SHARE_DIR;

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("acceptance: cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

PoseSequence random_pose(Rng& rng, std::size_t frames, std::size_t joints,
                         double scale = 0.8) {
  PoseSequence seq;
  seq.repr = Representation::AngleAxis;
  seq.joints = joints;
  seq.fps = 60.0;
  seq.frames.assign(frames, std::vector<double>(joints * 3));
  for (auto& f : seq.frames)
    for (auto& v : f) v = rng.uniform(-scale, scale);
  return seq;
}

std::string joint_param(std::size_t k, const char* leaf) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "spl.j%02zu.%s", k, leaf);
  return buf;
}

SkeletonSpec body15() {
  return load_skeleton(kShare + "/skeletons/smpl15.skel");
}

// Pulls one cell out of an evaluation report.
double report_value(const fs::path& csv, const std::string& metric,
                    const std::string& horizon, const std::string& mode) {
  std::ifstream in(csv);
  if (!in) throw std::runtime_error("acceptance: cannot read " + csv.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) f.push_back(cell);
    if (f.size() == 5 && f[0] == metric && f[1] == horizon && f[3] == mode) {
      return std::stod(f[4]);
    }
  }
  throw std::runtime_error("acceptance: " + csv.string() + " has no " + metric +
                           " at " + horizon + " ms (" + mode + ")");
}

std::size_t last_logged_step(const fs::path& log) {
  std::ifstream in(log);
  if (!in) throw std::runtime_error("acceptance: cannot read " + log.string());
  std::string line, last;
  std::getline(in, line);  // header
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return std::stoull(last.substr(0, last.find(',')));
}

// ---------------------------------------------------------------------------
// 1. Rotation algebra round-trips and Euler branch selection.

double wrap_pi(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

bool c01_rotations(std::string& out) {
  Stopwatch sw;
  Rng rng(101);
  const std::size_t n = 10000;
  double err_aa = 0.0, err_quat = 0.0, err_euler = 0.0;
  std::size_t branch_bad = 0;

  for (std::size_t i = 0; i < n; ++i) {
    Vec3 axis{rng.gauss(), rng.gauss(), rng.gauss()};
    while (axis.norm() < 1e-3) axis = {rng.gauss(), rng.gauss(), rng.gauss()};
    axis = axis * (1.0 / axis.norm());
    const double angle = rng.uniform(0.01, kPi - 0.01);

    const Vec3 w = axis * angle;
    const Mat3 r = aa_to_rotmat(w);
    err_aa = std::max(err_aa, (rotmat_to_aa(r) - w).norm());

    const double half = 0.5 * angle;
    const Quat q{std::cos(half), axis.x * std::sin(half), axis.y * std::sin(half),
                 axis.z * std::sin(half)};
    const Quat q2 = rotmat_to_quat(quat_to_rotmat(q));
    err_quat = std::max({err_quat, std::abs(q.w - q2.w), std::abs(q.x - q2.x),
                         std::abs(q.y - q2.y), std::abs(q.z - q2.z)});

    const Vec3 e = rotmat_to_euler_zyx(r);
    const Mat3 r2 = euler_zyx_to_rotmat(e);
    for (std::size_t j = 0; j < 9; ++j)
      err_euler = std::max(err_euler, std::abs(r.m[j] - r2.m[j]));

    // The second z-y-x solution; the returned one must not rotate more.
    if (std::abs(r(2, 0)) < 1.0 - 1e-6) {
      const Vec3 alt{wrap_pi(e.x + kPi), wrap_pi(kPi - e.y), wrap_pi(e.z + kPi)};
      const Mat3 ra = euler_zyx_to_rotmat(alt);
      double rec = 0.0;
      for (std::size_t j = 0; j < 9; ++j) rec = std::max(rec, std::abs(r.m[j] - ra.m[j]));
      const double s = std::abs(e.x) + std::abs(e.y) + std::abs(e.z);
      const double sa = std::abs(alt.x) + std::abs(alt.y) + std::abs(alt.z);
      if (rec > 1e-9 || s > sa + 1e-12) ++branch_bad;
    }
  }

  const double worst = std::max({err_aa, err_quat, err_euler});
  const double secs = sw.seconds();
  out = "aa " + fmt("%.2e", err_aa) + ", quat " + fmt("%.2e", err_quat) + ", euler " +
        fmt("%.2e", err_euler) + " over 10000 draws each, " +
        std::to_string(branch_bad) + " branch misses, " + fmt("%.2f", secs) +
        "s (limits 1e-9, 5s)";
  return worst < 1e-9 && branch_bad == 0 && secs < 5.0;
}

// ---------------------------------------------------------------------------
// 2. Finite-difference gradient exactness.

// Smallest |pre-activation| of every relu unit in the layer, recomputed from
// the stored weights. Finite differences sit on one side of the kink only
// when this margin dwarfs the probe step.
double spl_relu_margin(const SkeletonSpec& skel, const SplLayer& spl,
                       ParameterStore& store, const Tensor& ctx) {
  Tape tape;
  const Tensor out = tape.value(spl.forward(tape, store, tape.leaf(ctx)));
  const std::size_t m = spl.config().joint_size;
  const std::size_t d = spl.config().context_dim;
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < skel.joints(); ++k) {
    const Tensor& w1 = store.get(joint_param(k, "w1"));
    const Tensor& b1 = store.get(joint_param(k, "b1"));
    for (std::size_t row = 0; row < ctx.dim(0); ++row) {
      std::vector<double> x;
      for (std::size_t i = 0; i < d; ++i) x.push_back(ctx.at(row, i));
      for (std::size_t f : spl.fed(k))
        for (std::size_t i = 0; i < m; ++i) x.push_back(out.at(row, f * m + i));
      for (std::size_t u = 0; u < b1.numel(); ++u) {
        double z = b1[u];
        for (std::size_t i = 0; i < x.size(); ++i) z += x[i] * w1.at(i, u);
        margin = std::min(margin, std::abs(z));
      }
    }
  }
  return margin;
}

bool c02_gradients(std::string& out) {
  Stopwatch sw;
  double worst = 0.0;
  std::vector<std::string> failed;

  const auto run = [&](const std::string& label, ParameterStore& store,
                       const std::function<Var(Tape&)>& build) {
    const auto report = grad_check(store, build, 1e-5, 1e-4);
    worst = std::max(worst, report.max_rel_error);
    if (!report.pass) failed.push_back(label);
  };

  {  // Dense layer, quadratic loss.
    ParameterStore store(21);
    const grad::Linear layer(7, 5, "dense");
    layer.register_params(store);
    Rng rng(22);
    const Tensor x = random_tensor(rng, {3, 7});
    run("dense", store, [&](Tape& t) {
      return t.sum(t.square(layer.forward(t, store, t.leaf(x))));
    });
  }

  {  // relu(x W + b); seeds are scanned until no unit sits near the kink.
    for (std::uint64_t seed = 40;; ++seed) {
      ParameterStore store(seed);
      const grad::Linear layer(6, 4, "relu");
      layer.register_params(store);
      Rng rng(derive_seed(seed, 9));
      const Tensor x = random_tensor(rng, {2, 6});
      const Tensor& w = store.get("relu.w");
      const Tensor& b = store.get("relu.b");
      double margin = std::numeric_limits<double>::infinity();
      for (std::size_t row = 0; row < 2; ++row)
        for (std::size_t u = 0; u < 4; ++u) {
          double z = b[u];
          for (std::size_t i = 0; i < 6; ++i) z += x.at(row, i) * w.at(i, u);
          margin = std::min(margin, std::abs(z));
        }
      if (margin <= 1e-3) continue;
      run("relu", store, [&](Tape& t) {
        return t.sum(t.relu(layer.forward(t, store, t.leaf(x))));
      });
      break;
    }
  }

  for (const CellType type : {CellType::Lstm, CellType::Gru}) {
    ParameterStore store(type == CellType::Lstm ? 31 : 32);
    const grad::RecurrentCell cell(type, 6, 5, "cell");
    cell.register_params(store);
    Rng rng(type == CellType::Lstm ? 33 : 34);
    const Tensor x1 = random_tensor(rng, {2, 6});
    const Tensor x2 = random_tensor(rng, {2, 6});
    run(grad::cell_name(type), store, [&](Tape& t) {
      CellState st = cell.initial_state(t, 2);
      st = cell.step(t, store, t.leaf(x1), st);
      st = cell.step(t, store, t.leaf(x2), st);
      return t.sum(t.square(st.h));
    });
  }

  // Full structured head: every hierarchy, both feedings, K = 5, H = 8,
  // D = 16.
  const SkeletonSpec skel = parse_skeleton(
      "a root 0 0 0\n"
      "b a 0 1 0 unit\n"
      "c b 1 0 0\n"
      "d b -1 0 0\n"
      "e a 0 0 1\n");
  std::size_t spl_checks = 0;
  for (const Hierarchy h : {Hierarchy::Kinematic, Hierarchy::Independent,
                            Hierarchy::Reverse, Hierarchy::Random}) {
    for (const Feeding f : {Feeding::Sparse, Feeding::Dense}) {
      SplConfig cfg;
      cfg.hierarchy = h;
      cfg.feeding = f;
      cfg.hidden = 8;
      cfg.joint_size = 3;
      cfg.context_dim = 16;
      cfg.random_seed = 7;
      const std::string label =
          std::string(hierarchy_name(h)) + "/" + feeding_name(f);
      bool placed = false;
      for (std::uint64_t attempt = 0; attempt < 50 && !placed; ++attempt) {
        const std::uint64_t seed = 500 + 97 * attempt + spl_checks;
        ParameterStore store(seed);
        const SplLayer spl(skel, cfg, store);
        Rng rng(derive_seed(seed, 9));
        const Tensor ctx = random_tensor(rng, {2, 16});
        if (spl_relu_margin(skel, spl, store, ctx) <= 1e-3) continue;
        run(label, store, [&](Tape& t) {
          return t.sum(t.square(spl.forward(t, store, t.leaf(ctx))));
        });
        placed = true;
      }
      if (!placed) failed.push_back(label + " (no kink-free draw)");
      ++spl_checks;
    }
  }

  const double secs = sw.seconds();
  out = "dense, relu, lstm, gru and 8 structured-head configs, max rel err " +
        fmt("%.2e", worst) + ", " + fmt("%.1f", secs) + "s (limits 1e-4, 30s)";
  if (!failed.empty()) {
    out += ", failed:";
    for (const auto& f : failed) out += " " + f;
  }
  return failed.empty() && worst < 1e-4 && secs < 30.0;
}

// ---------------------------------------------------------------------------
// 3. Independent head vs masked dense layer, plus hierarchy causality.

bool c03_equivalence(std::string& out) {
  const SkeletonSpec skel = body15();
  const std::size_t k = skel.joints(), h = 6, m = 3, d = 8;

  double max_diff = 0.0;
  std::size_t bitexact = 0, total = 0;
  for (std::size_t draw = 0; draw < 100; ++draw) {
    ParameterStore store(2000 + draw);
    SplConfig cfg;
    cfg.hierarchy = Hierarchy::Independent;
    cfg.hidden = h;
    cfg.joint_size = m;
    cfg.context_dim = d;
    const SplLayer spl(skel, cfg, store);

    // One wide first layer and a block-diagonal second layer; the zeros
    // outside the blocks are the mask.
    Tensor w1({d, k * h}), b1({k * h}), w2({k * h, k * m}), b2({k * m});
    for (std::size_t j = 0; j < k; ++j) {
      const Tensor& jw1 = store.get(joint_param(j, "w1"));
      const Tensor& jb1 = store.get(joint_param(j, "b1"));
      const Tensor& jw2 = store.get(joint_param(j, "w2"));
      const Tensor& jb2 = store.get(joint_param(j, "b2"));
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < h; ++c) w1.at(r, j * h + c) = jw1.at(r, c);
      for (std::size_t c = 0; c < h; ++c) b1[j * h + c] = jb1[c];
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < m; ++c) w2.at(j * h + r, j * m + c) = jw2.at(r, c);
      for (std::size_t c = 0; c < m; ++c) b2[j * m + c] = jb2[c];
    }

    Rng rng(derive_seed(3000 + draw, 1));
    const Tensor ctx = random_tensor(rng, {3, d});
    Tape tape;
    const Tensor& ys = tape.value(spl.forward(tape, store, tape.leaf(ctx)));
    const Var wide = tape.bias_add(
        tape.matmul(tape.relu(tape.bias_add(tape.matmul(tape.leaf(ctx), tape.leaf(w1)),
                                            tape.leaf(b1))),
                    tape.leaf(w2)),
        tape.leaf(b2));
    const Tensor& yw = tape.value(wide);
    for (std::size_t i = 0; i < ys.numel(); ++i, ++total) {
      max_diff = std::max(max_diff, std::abs(ys[i] - yw[i]));
      if (same_bits(ys[i], yw[i])) ++bitexact;
    }
  }

  // Causality: perturbing one joint's output bias must leave every joint
  // outside its subtree bit-identical.
  std::size_t leaks = 0, inert = 0;
  const auto kids = skel.children();
  for (const Feeding f : {Feeding::Sparse, Feeding::Dense}) {
    ParameterStore store(77);
    SplConfig cfg;
    cfg.hierarchy = Hierarchy::Kinematic;
    cfg.feeding = f;
    cfg.hidden = 5;
    cfg.joint_size = m;
    cfg.context_dim = 6;
    const SplLayer spl(skel, cfg, store);
    Rng rng(78);
    const Tensor ctx = random_tensor(rng, {2, 6});
    Tape base_tape;
    const Tensor base = base_tape.value(spl.forward(base_tape, store, base_tape.leaf(ctx)));

    for (std::size_t j = 0; j < k; ++j) {
      std::vector<char> in(k, 0);
      in[j] = 1;
      std::vector<std::size_t> stack{j};
      while (!stack.empty()) {
        const std::size_t cur = stack.back();
        stack.pop_back();
        for (std::size_t c : kids[cur])
          if (!in[c]) {
            in[c] = 1;
            stack.push_back(c);
          }
      }

      Tensor& b2 = store.get(joint_param(j, "b2"));
      b2[0] += 0.75;
      Tape tape;
      const Tensor& bumped = tape.value(spl.forward(tape, store, tape.leaf(ctx)));
      b2[0] -= 0.75;

      bool moved = false;
      for (std::size_t row = 0; row < 2; ++row) {
        for (std::size_t jj = 0; jj < k; ++jj) {
          for (std::size_t c = 0; c < m; ++c) {
            const bool equal = same_bits(base.at(row, jj * m + c), bumped.at(row, jj * m + c));
            if (!in[jj] && !equal) ++leaks;
            if (jj == j && !equal) moved = true;
          }
        }
      }
      if (!moved) ++inert;
    }
  }

  out = "100 draws, max |independent - masked dense| " + fmt("%.2e", max_diff) + " (" +
        std::to_string(bitexact) + "/" + std::to_string(total) +
        " bit-exact), causality leaks " + std::to_string(leaks) +
        ", inert perturbations " + std::to_string(inert) + " (limit 1e-12)";
  return max_diff < 1e-12 && leaks == 0 && inert == 0;
}

// ---------------------------------------------------------------------------
// 4. Joint-wise loss equals frames * width times the flat mean squared error.

bool c04_loss_identity(std::string& out) {
  Rng rng(404);
  double worst = 0.0;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t frames = 1 + rng.below(8);
    const std::size_t joints = 1 + rng.below(6);
    const std::size_t per_joint = std::array<std::size_t, 3>{3, 4, 9}[rng.below(3)];
    const std::size_t width = joints * per_joint;

    std::vector<std::vector<double>> pred(frames, std::vector<double>(width));
    std::vector<std::vector<double>> target = pred;
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t c = 0; c < width; ++c) {
        pred[t][c] = rng.uniform(-2.0, 2.0);
        target[t][c] = rng.uniform(-2.0, 2.0);
      }

    const double structured = per_joint_loss(pred, target, joints);
    double acc = 0.0;  // plain-order flat accumulation as the oracle
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t c = 0; c < width; ++c) {
        const double dv = pred[t][c] - target[t][c];
        acc += dv * dv;
      }
    const double mse = acc / static_cast<double>(frames * width);
    const double expect = static_cast<double>(frames * width) * mse;
    worst = std::max(worst,
                     std::abs(structured - expect) / std::max(std::abs(expect), 1e-300));
  }
  out = "100 random instances, max relative gap " + fmt("%.2e", worst) +
        " (limit 1e-10)";
  return worst < 1e-10;
}

// ---------------------------------------------------------------------------
// 5. Metric identities.

bool c05_metric_identities(std::string& out) {
  const SkeletonSpec skel = normalize_bones(body15());
  Rng rng(55);
  const PoseSequence target = random_pose(rng, 24, skel.joints());
  const PoseSequence pred = random_pose(rng, 24, skel.joints());
  const std::vector<EvalPair> pairs{{pred, target, 24}};
  const std::vector<EvalPair> perfect{{target, target, 24}};
  const std::vector<double> grid = default_pck_grid();
  std::vector<std::string> bad;

  // Equal sequences score zero distance and full coverage.
  for (const std::size_t t : {1u, 7u, 24u}) {
    for (const Accumulate mode : {Accumulate::At, Accumulate::Until}) {
      if (euler_metric(perfect, t, mode) != 0.0) bad.push_back("euler nonzero");
      if (joint_angle_metric(perfect, skel, t, mode) != 0.0)
        bad.push_back("joint_angle nonzero");
      if (positional_metric(perfect, skel, t, mode) != 0.0)
        bad.push_back("positional nonzero");
    }
    if (pck_auc(perfect, skel, t, grid) != 1.0) bad.push_back("pck auc not 1");
  }

  // Coverage can only grow with the threshold.
  double prev = -1.0;
  for (const double rho : grid) {
    const double v = pck(pairs, skel, 12, rho);
    if (v < prev) bad.push_back("pck not monotone in threshold");
    prev = v;
  }

  // Accumulated distance metrics can only grow with the horizon.
  double eu = 0.0, ja = 0.0, po = 0.0;
  for (std::size_t t = 1; t <= 24; ++t) {
    const double e2 = euler_metric(pairs, t, Accumulate::Until);
    const double j2 = joint_angle_metric(pairs, skel, t, Accumulate::Until);
    const double p2 = positional_metric(pairs, skel, t, Accumulate::Until);
    if (e2 < eu || j2 < ja || p2 < po) bad.push_back("until not monotone");
    eu = e2;
    ja = j2;
    po = p2;
  }

  // Two-joint chain whose root rotations differ by 0.3 rad about z while the
  // child locals agree: the offset propagates, so the mean angle gap is 0.3.
  const SkeletonSpec two = parse_skeleton("a root 0 0 0\nb a 0 1 0 unit\n");
  PoseSequence pa, pb;
  pa.repr = pb.repr = Representation::AngleAxis;
  pa.joints = pb.joints = 2;
  pa.fps = pb.fps = 60.0;
  pa.frames = {{0.0, 0.0, 0.1, 0.5, 0.0, 0.0}};
  pb.frames = {{0.0, 0.0, 0.4, 0.5, 0.0, 0.0}};
  const std::vector<EvalPair> offset{{pa, pb, 1}};
  const double angle = joint_angle_metric(offset, two, 1, Accumulate::At);
  if (std::abs(angle - 0.3) > 1e-9) bad.push_back("root-offset chain not 0.3");

  out = "zero and unit identities, threshold and horizon monotonicity, root-offset "
        "chain " +
        fmt("%.12f", angle) + " (expect 0.3 within 1e-9)";
  if (!bad.empty()) {
    out += ", failed:";
    for (const auto& b : bad) out += " [" + b + "]";
  }
  return bad.empty();
}

// ---------------------------------------------------------------------------
// 6. All-zero head reproduces the zero-velocity baseline bit for bit.

bool c06_zero_velocity(std::string& out) {
  const SkeletonSpec skel = body15();
  const SkeletonSpec metric_skel = normalize_bones(skel);
  Rng rng(66);
  std::vector<PoseSequence> corpus{random_pose(rng, 30, skel.joints()),
                                   random_pose(rng, 30, skel.joints())};
  const NormStats stats = NormStats::fit(corpus);
  const PoseSequence seed = random_pose(rng, 12, skel.joints());
  const PoseSequence target = random_pose(rng, 24, skel.joints());
  const std::size_t horizon = 24;

  std::size_t frame_mismatch = 0, metric_mismatch = 0;
  for (const HeadKind head : {HeadKind::Spl, HeadKind::Dense}) {
    ModelConfig cfg;
    cfg.kind = ModelKind::Rnn;
    cfg.cell = CellType::Lstm;
    cfg.units = 24;
    cfg.projection = 12;
    cfg.input_dropout = 0.3;
    cfg.head = head;
    cfg.spl_hidden = 8;
    cfg.dense_hidden = 20;
    cfg.residual = true;

    ParameterStore store(606);
    const SequenceModel model(skel, Representation::AngleAxis, cfg, store);
    // Only the head's final layer must vanish for the delta to be zero.
    for (const auto& name : store.names()) {
      const bool spl_out = name.rfind("spl.", 0) == 0 &&
                           (name.size() > 3 && (name.compare(name.size() - 3, 3, ".w2") == 0 ||
                                                name.compare(name.size() - 3, 3, ".b2") == 0));
      const bool dense_out = name.rfind("head.l2.", 0) == 0;
      if (!spl_out && !dense_out) continue;
      Tensor& t = store.get(name);
      for (std::size_t i = 0; i < t.numel(); ++i) t[i] = 0.0;
    }

    const PoseSequence model_pred = predict(model, store, seed, horizon, stats);
    const PoseSequence base_pred = zero_velocity_predict(seed, horizon);
    for (std::size_t t = 0; t < horizon; ++t)
      for (std::size_t c = 0; c < model_pred.frame_size(); ++c)
        if (!same_bits(model_pred.frames[t][c], base_pred.frames[t][c]))
          ++frame_mismatch;

    const std::vector<EvalPair> pm{{model_pred, target, horizon}};
    const std::vector<EvalPair> pz{{base_pred, target, horizon}};
    const std::vector<double> grid = default_pck_grid();
    for (std::size_t t = 1; t <= horizon; ++t) {
      for (const Accumulate mode : {Accumulate::At, Accumulate::Until}) {
        if (!same_bits(euler_metric(pm, t, mode), euler_metric(pz, t, mode)) ||
            !same_bits(joint_angle_metric(pm, metric_skel, t, mode),
                       joint_angle_metric(pz, metric_skel, t, mode)) ||
            !same_bits(positional_metric(pm, metric_skel, t, mode),
                       positional_metric(pz, metric_skel, t, mode)))
          ++metric_mismatch;
      }
      if (!same_bits(pck_auc(pm, metric_skel, t, grid), pck_auc(pz, metric_skel, t, grid)))
        ++metric_mismatch;
    }
  }

  out = "structured and dense heads, 24 frames x 2 modes x 4 metrics: " +
        std::to_string(frame_mismatch) + " frame and " +
        std::to_string(metric_mismatch) + " metric bit mismatches (limit 0)";
  return frame_mismatch == 0 && metric_mismatch == 0;
}

// ---------------------------------------------------------------------------
// 7. Desk-scale learning bar on the shipped smoke configuration.

ExperimentConfig smoke_config() {
  ExperimentConfig cfg = ExperimentConfig::load(kShare + "/configs/smoke.cfg");
  cfg.set("skeleton", kShare + "/skeletons/smpl15.skel");
  return cfg;
}

void ensure_smoke_data(const ExperimentConfig& cfg, const fs::path& data) {
  if (!fs::exists(data / "manifest.txt")) cmd_synth(cfg, data.string());
}

bool c07_learning_bar(std::string& out) {
  const ExperimentConfig cfg = smoke_config();
  const fs::path root = g_work / "smoke";
  const fs::path data = root / "data";

  Stopwatch gated;
  ensure_smoke_data(cfg, data);
  cmd_train(cfg, data.string(), (root / "train_spl").string());
  cmd_eval(cfg, (root / "train_spl" / "model.ckpt").string(), data.string(),
           (root / "eval_spl").string());
  cmd_eval(cfg, kZeroVelocitySource, data.string(), (root / "eval_zv").string());
  const double gated_secs = gated.seconds();

  const double spl = report_value(root / "eval_spl" / "report.csv", "joint_angle",
                                  "400", "until");
  const double zv = report_value(root / "eval_zv" / "report.csv", "joint_angle",
                                 "400", "until");
  const std::size_t steps = last_logged_step(root / "train_spl" / "train_log.csv");

  // Dense head trained under the identical recipe, reported but not gated.
  ExperimentConfig dense_cfg = cfg;
  dense_cfg.set("head", "dense");
  cmd_train(dense_cfg, data.string(), (root / "train_dense").string());
  cmd_eval(dense_cfg, (root / "train_dense" / "model.ckpt").string(), data.string(),
           (root / "eval_dense").string());
  const double dense = report_value(root / "eval_dense" / "report.csv", "joint_angle",
                                    "400", "until");

  out = "until-400ms joint angle: trained " + fmt("%.4f", spl) + " vs zero-velocity " +
        fmt("%.4f", zv) + " in " + std::to_string(steps) + " steps, " +
        fmt("%.0f", gated_secs) + "s (limits < baseline, 3000 steps, 900s); dense head " +
        fmt("%.4f", dense) + " logged alongside";
  return spl < zv && steps <= 3000 && gated_secs <= 900.0;
}

// ---------------------------------------------------------------------------
// 8. Every hierarchy trains and evaluates through the identical pipeline.

bool c08_hierarchy_ablation(std::string& out) {
  ExperimentConfig cfg = smoke_config();
  // The ablation gates pipeline parity and table shape, not model quality, so
  // each variant trains briefly.
  cfg.set("max_steps", "150");
  const fs::path root = g_work / "smoke";
  const fs::path data = root / "data";
  ensure_smoke_data(cfg, data);

  const std::vector<std::string> modes{"kinematic", "independent", "reverse", "random"};
  std::vector<std::string> eval_dirs;
  for (const auto& mode : modes) {
    cfg.set("hierarchy", mode);
    const fs::path train_dir = root / ("ablate_train_" + mode);
    const fs::path eval_dir = root / ("ablate_eval_" + mode);
    cmd_train(cfg, data.string(), train_dir.string());
    cmd_eval(cfg, (train_dir / "model.ckpt").string(), data.string(), eval_dir.string());
    eval_dirs.push_back(eval_dir.string());
  }
  const fs::path table = root / "ablation.csv";
  cmd_report(eval_dirs, table.string());

  std::ifstream in(table);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') rows.push_back(line);

  std::string expect_header = "model";
  for (const char* metric : {"euler", "joint_angle", "positional", "pck_auc"})
    for (const char* ms : {"100", "200", "300", "400"})
      expect_header += std::string(",") + metric + "_" + ms + "ms";

  std::vector<std::string> bad;
  if (rows.empty() || rows.front() != expect_header) bad.push_back("header shape");
  if (rows.size() != 1 + modes.size()) bad.push_back("row count");
  std::size_t numeric = 0;
  for (std::size_t i = 0; i + 1 < rows.size() && i < modes.size(); ++i) {
    std::stringstream row(rows[i + 1]);
    std::string cell;
    std::getline(row, cell, ',');
    if (cell != "rnn_spl_" + modes[i]) bad.push_back("label " + cell);
    while (std::getline(row, cell, ',')) {
      const double v = std::stod(cell);
      if (std::isfinite(v)) ++numeric;
    }
  }
  if (numeric != 16 * modes.size()) bad.push_back("cell count");

  out = "kinematic/independent/reverse/random through one pipeline, merged table " +
        std::to_string(rows.empty() ? 0 : rows.size() - 1) + " rows x 16 metric cells";
  if (!bad.empty()) {
    out += ", failed:";
    for (const auto& b : bad) out += " [" + b + "]";
  }
  return bad.empty();
}

// ---------------------------------------------------------------------------
// 9. Same seed, same bytes; checkpoints round-trip bit-exactly.

bool c09_determinism(std::string& out) {
  ExperimentConfig cfg = ExperimentConfig::load(kShare + "/configs/tiny.cfg");
  cfg.set("skeleton", kShare + "/skeletons/smpl15.skel");

  const auto run = [&](const fs::path& root) {
    cmd_synth(cfg, (root / "data").string());
    cmd_train(cfg, (root / "data").string(), (root / "train").string());
    cmd_eval(cfg, (root / "train" / "model.ckpt").string(), (root / "data").string(),
             (root / "eval").string());
  };
  const fs::path a = g_work / "repro_a", b = g_work / "repro_b";
  fs::remove_all(a);
  fs::remove_all(b);
  run(a);
  run(b);

  const auto tree = [](const fs::path& root) {
    std::vector<fs::path> rel;
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), root));
    std::sort(rel.begin(), rel.end());
    return rel;
  };
  const auto fa = tree(a), fb = tree(b);
  std::size_t differing = 0, compared = 0;
  bool same_set = fa == fb;
  if (same_set) {
    for (const auto& rel : fa) {
      ++compared;
      if (read_bytes(a / rel) != read_bytes(b / rel)) ++differing;
    }
  }

  // A loaded checkpoint must save back to the identical bytes.
  const fs::path ckpt = a / "train" / "model.ckpt";
  const auto loaded = grad::load_checkpoint(ckpt.string());
  const fs::path rt = g_work / "roundtrip.ckpt";
  grad::save_checkpoint(rt.string(), loaded.store, loaded.meta);
  const bool rt_equal = read_bytes(ckpt) == read_bytes(rt);

  out = "two synth/train/eval runs: " + std::to_string(compared) + " files compared, " +
        std::to_string(differing) + " differ" + (same_set ? "" : " (file sets differ)") +
        "; checkpoint round-trip " + (rt_equal ? "byte-identical" : "differs");
  return same_set && differing == 0 && rt_equal;
}

// ---------------------------------------------------------------------------
// 10. Motion-file fuzzing only ever raises the typed error.

bool c10_fuzzing(std::string& out) {
  Rng rng(1010);
  PoseSequence seq = random_pose(rng, 4, 2);
  seq.fps = 30.0;
  const fs::path base_path = g_work / "fuzz_base.motn";
  fs::create_directories(g_work);
  write_motn(base_path.string(), seq);
  const std::string base = read_bytes(base_path);

  std::size_t parsed = 0, typed = 0, untyped = 0;
  std::string first_untyped;
  for (std::size_t i = 0; i < 1000; ++i) {
    std::vector<unsigned char> bytes(base.begin(), base.end());
    switch (i % 5) {
      case 0:  // truncation
        bytes.resize(rng.below(bytes.size()));
        break;
      case 1:  // bad magic
        bytes[rng.below(4)] ^= static_cast<unsigned char>(1 + rng.below(255));
        break;
      case 2:  // bad representation code
        bytes[5] = static_cast<unsigned char>(3 + rng.below(253));
        break;
      case 3: {  // random bit flips
        const std::size_t flips = 1 + rng.below(8);
        for (std::size_t f = 0; f < flips; ++f)
          bytes[rng.below(bytes.size())] ^= static_cast<unsigned char>(1u << rng.below(8));
        break;
      }
      case 4: {  // unrelated garbage
        bytes.assign(rng.below(64), 0);
        for (auto& v : bytes) v = static_cast<unsigned char>(rng.below(256));
        break;
      }
    }
    try {
      parse_motn(bytes, "fuzz");
      ++parsed;
    } catch (const MotnError&) {
      ++typed;
    } catch (const std::exception& e) {
      ++untyped;
      if (first_untyped.empty()) first_untyped = e.what();
    }
  }

  out = "1000 cases: " + std::to_string(parsed) + " parsed, " + std::to_string(typed) +
        " typed errors, " + std::to_string(untyped) + " untyped (limit 0)";
  if (!first_untyped.empty()) out += ", first untyped: " + first_untyped;
  return untyped == 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  bool filtered = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (!arg.empty() && arg.find_first_not_of("0123456789,") == std::string::npos) {
      filtered = true;
      std::stringstream ss(arg);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) wanted.insert(std::stoi(tok));
    } else {
      g_work = arg;
    }
  }
  if (!filtered) {
    fs::remove_all(g_work);
  }
  fs::create_directories(g_work);

  struct Criterion {
    int id;
    const char* name;
    bool (*fn)(std::string&);
  };
  const Criterion criteria[] = {
      {1, "rotation round-trips", c01_rotations},
      {2, "gradient exactness", c02_gradients},
      {3, "structured-head equivalence and causality", c03_equivalence},
      {4, "loss decomposition identity", c04_loss_identity},
      {5, "metric identities", c05_metric_identities},
      {6, "zero-velocity degeneracy", c06_zero_velocity},
      {7, "desk-scale learning bar", c07_learning_bar},
      {8, "hierarchy ablation parity", c08_hierarchy_ablation},
      {9, "pipeline determinism", c09_determinism},
      {10, "format robustness fuzzing", c10_fuzzing},
  };

  int failures = 0, ran = 0;
  for (const auto& c : criteria) {
    if (filtered && wanted.count(c.id) == 0) continue;
    ++ran;
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& e) {
      detail += detail.empty() ? "" : "; ";
      detail += std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", c.id, c.name, detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %d of %d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
