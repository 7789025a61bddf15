#include "occshape/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <utility>

#include <Eigen/Eigenvalues>

#include "json.hpp"
#include "occshape/kdtree.hpp"
#include "occshape/sampling.hpp"

namespace occshape {

InitConfig InitConfig::for_workspace(const Workspace& ws) {
  InitConfig c;
  c.tau_goal = 2 * ws.voxel();
  c.margin = 2 * ws.finger.radius;
  c.l_min = 2 * ws.finger.radius + 2 * ws.voxel();
  return c;
}

void InitConfig::validate() const {
  if (m < 3 || m > 6) throw ConfigError("m must lie in [3, 6], got " + std::to_string(m));
  if (!(tau_goal > 0)) throw ConfigError("tau_goal must be positive");
  if (!(margin >= 0)) throw ConfigError("margin must be nonnegative");
  if (!(l_min > 0)) throw ConfigError("l_min must be positive");
}

std::string_view to_string(OptimizerKind k) {
  return k == OptimizerKind::Sampling ? "sampling" : "quasi_newton";
}

namespace {

constexpr double kPi = std::numbers::pi;

Vec2 rot90(const Vec2& v) { return {-v.y(), v.x()}; }

// Principal xy axis of the residual set with a skewness-fixed sign; world x
// when the spread is (near) isotropic.
Vec2 principal_axis(const std::vector<Vec2>& pts) {
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= double(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(1);
  if (!(hi > 0) || lo >= (1.0 - 1e-6) * hi) return Vec2::UnitX();
  Vec2 axis = es.eigenvectors().col(1).normalized();
  double skew = 0.0;
  for (const auto& p : pts) skew += std::pow((p - mean).dot(axis), 3);
  if (skew < 0) axis = -axis;
  return axis;
}

struct Slabs {
  double neg_width = 0.0, pos_width = 0.0;
  int m = 3;
  // Region index within the branch: negative side 0..m-1, positive m..2m-1.
  int region(double t) const {
    if (t < 0) {
      const int s = neg_width > 0 ? static_cast<int>(std::floor(-t / neg_width)) : 0;
      return std::min(s, m - 1);
    }
    const int s = pos_width > 0 ? static_cast<int>(std::floor(t / pos_width)) : 0;
    return m + std::min(s, m - 1);
  }
};

}  // namespace

InitResult shape_based_init(const VoxelSet& current, const VoxelSet& goal, const InitConfig& cfg,
                            const Workspace& ws) {
  cfg.validate();
  if (current.empty() || goal.empty()) throw InvalidArgument("initialization needs non-empty sets");
  InitResult res;
  const Vec3 goal_c = goal.centroid();
  const Vec3 shift = goal_c - current.centroid();

  // (a) align, (b) residual s_r.
  std::vector<Vec3> aligned(current.size());
  for (std::size_t i = 0; i < current.size(); ++i) aligned[i] = current.points[i] + shift;
  const auto nn = nearest_all(aligned, goal.points);
  std::vector<std::size_t> residual;
  for (std::size_t i = 0; i < aligned.size(); ++i)
    if (std::sqrt(nn[i].sq_distance) >= cfg.tau_goal) residual.push_back(i);
  res.residual_count = residual.size();
  if (residual.empty()) {
    res.needed = false;
    return res;
  }

  // (c) branch axes and slabs.
  std::vector<Vec2> rxy;
  rxy.reserve(residual.size());
  for (auto i : residual) rxy.push_back(aligned[i].head<2>());
  const Vec2 ax = principal_axis(rxy);
  res.axis_x = ax;
  const std::array<Vec2, 2> axes{ax, rot90(ax)};
  const Vec2 gc = goal_c.head<2>();
  const int m = cfg.m;

  struct Acc {
    Vec3 r_sum = Vec3::Zero();
    Vec3 g_sum = Vec3::Zero();
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -std::numeric_limits<double>::infinity();
  };
  std::vector<Acc> acc(4 * m);
  for (int b = 0; b < 2; ++b) {
    double t_lo = 0.0, t_hi = 0.0;
    for (const auto& p : aligned) {
      const double t = (p.head<2>() - gc).dot(axes[b]);
      t_lo = std::min(t_lo, t);
      t_hi = std::max(t_hi, t);
    }
    for (const auto& p : goal.points) {
      const double t = (p.head<2>() - gc).dot(axes[b]);
      t_lo = std::min(t_lo, t);
      t_hi = std::max(t_hi, t);
    }
    const Slabs slabs{-t_lo / m, t_hi / m, m};
    for (int r = 0; r < 2 * m; ++r) {
      RegionCost rc;
      rc.branch = b == 0 ? Branch::X : Branch::Y;
      rc.side = r < m ? -1 : 1;
      rc.slab = r < m ? r : r - m;
      const double w = r < m ? slabs.neg_width : slabs.pos_width;
      rc.lo = r < m ? -(rc.slab + 1) * w : rc.slab * w;
      rc.hi = r < m ? -rc.slab * w : (rc.slab + 1) * w;
      res.regions.push_back(rc);
    }
    // (d) region costs.
    for (auto i : residual) {
      const double t = (aligned[i].head<2>() - gc).dot(axes[b]);
      const int r = b * 2 * m + slabs.region(t);
      auto& rc = res.regions[r];
      ++rc.count;
      rc.cost += std::sqrt(nn[i].sq_distance);
      acc[r].r_sum += aligned[i];
      acc[r].t_min = std::min(acc[r].t_min, t);
      acc[r].t_max = std::max(acc[r].t_max, t);
    }
    for (const auto& p : goal.points) {
      const int r = b * 2 * m + slabs.region((p.head<2>() - gc).dot(axes[b]));
      ++res.regions[r].goal_count;
      acc[r].g_sum += p;
    }
  }

  // (e) selection: best region per side within each branch.
  struct Pick {
    std::vector<std::size_t> regions;
    double cost = -1.0;
  };
  auto best_of = [&](std::size_t from, std::size_t to, std::size_t skip) {
    std::optional<std::size_t> best;
    for (std::size_t r = from; r < to; ++r) {
      if (r == skip || res.regions[r].count == 0) continue;
      if (!best || res.regions[r].cost > res.regions[*best].cost) best = r;
    }
    return best;
  };
  std::array<Pick, 2> picks;
  for (int b = 0; b < 2; ++b) {
    const std::size_t base = b * 2 * m;
    const auto neg = best_of(base, base + m, SIZE_MAX);
    const auto pos = best_of(base + m, base + 2 * m, SIZE_MAX);
    Pick& p = picks[b];
    if (neg && pos) {
      p.regions = {*neg, *pos};
    } else {
      // One side empty: fall back to the two costliest regions overall.
      const auto first = best_of(base, base + 2 * m, SIZE_MAX);
      if (first) {
        p.regions.push_back(*first);
        if (const auto second = best_of(base, base + 2 * m, *first)) p.regions.push_back(*second);
      }
    }
    p.cost = 0.0;
    for (auto r : p.regions) p.cost += res.regions[r].cost;
  }
  const int win = picks[1].cost > picks[0].cost ? 1 : 0;
  res.branch = win == 0 ? Branch::X : Branch::Y;
  res.selected = picks[win].regions;
  std::sort(res.selected.begin(), res.selected.end());
  const Vec2 axis = axes[win];

  // (f) grasp geometry in the aligned frame.
  auto r_centroid = [&](std::size_t r) { return Vec2((acc[r].r_sum / double(res.regions[r].count)).head<2>()); };
  auto g_centroid = [&](std::size_t r) {
    if (res.regions[r].goal_count == 0) {
      res.substituted_goal_centroid = true;
      return r_centroid(r);
    }
    return Vec2((acc[r].g_sum / double(res.regions[r].goal_count)).head<2>());
  };
  Vec2 c1, c2, g_mid;
  if (res.selected.size() == 2) {
    c1 = r_centroid(res.selected[0]);
    c2 = r_centroid(res.selected[1]);
    g_mid = 0.5 * (g_centroid(res.selected[0]) + g_centroid(res.selected[1]));
  } else {
    const std::size_t r = res.selected[0];
    const Vec2 c = r_centroid(r);
    const double tc = (c - gc).dot(axis);
    c1 = c + (acc[r].t_min - tc) * axis;
    c2 = c + (acc[r].t_max - tc) * axis;
    g_mid = g_centroid(r);
  }
  Vec2 u = c2 - c1;
  const double seg = u.norm();
  u = seg > 1e-12 ? Vec2(u / seg) : axis;
  double t = (g_mid - c1).dot(u);
  if (t < 0.0 || t > seg) {
    res.clamped_center = true;
    t = std::clamp(t, 0.0, seg);
  }
  const Vec2 center = c1 + t * u;

  // Extent along the grasp line of the material inside a corridor around it.
  auto extent = [&](const std::vector<Vec3>& pts, double corridor) {
    double reach = 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : pts) {
      const Vec2 d = p.head<2>() - center;
      if (std::abs(d.dot(rot90(u))) > corridor) continue;
      lo = std::min(lo, d.dot(u));
      hi = std::max(hi, d.dot(u));
      reach = std::max(reach, std::abs(d.dot(u)));
    }
    return std::pair{std::isfinite(lo) ? hi - lo : 0.0, reach};
  };
  const double goal_width = extent(goal.points, 0.5 * ws.voxel()).first;
  // Both fingers open clear of the (aligned) current material.
  const double clearance = 2.0 * (extent(aligned, ws.finger.radius).second + ws.finger.radius + ws.voxel());

  GripperAction& a = res.action;
  const Vec2 world = center - shift.head<2>();
  a.x = world.x();
  a.y = world.y();
  a.z = ws.z_min();
  a.rz = normalize_rz(std::atan2(u.y(), u.x()));
  a.l = std::clamp(std::max(seg + cfg.margin, clearance), cfg.l_min, ws.max_width());
  a.l_end = std::clamp(goal_width + 2 * ws.finger.radius, cfg.l_min, a.l);
  return res;
}

GripperAction random_init(const VoxelSet& current, const InitConfig& cfg, const Workspace& ws,
                          std::uint64_t seed) {
  if (current.empty()) throw InvalidArgument("initialization needs a non-empty set");
  std::mt19937_64 rng(seed);
  Vec2 lo = current.points[0].head<2>(), hi = lo;
  for (const auto& p : current.points) {
    lo = lo.cwiseMin(p.head<2>());
    hi = hi.cwiseMax(p.head<2>());
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GripperAction a;
  a.x = lo.x() + unit(rng) * (hi.x() - lo.x());
  a.y = lo.y() + unit(rng) * (hi.y() - lo.y());
  a.z = ws.z_min();
  a.rz = normalize_rz(-kPi / 2 + unit(rng) * kPi);
  double h = 0.0;
  for (const auto& p : current.points)
    h = std::max(h, std::abs((p.head<2>() - Vec2(a.x, a.y)).dot(a.direction().head<2>())));
  a.l = std::clamp(2 * h + cfg.margin, cfg.l_min, ws.max_width());
  a.l_end = cfg.l_min + unit(rng) * (a.l - cfg.l_min);
  return a;
}

VoxelSet observe(const Scene& scene, const GridSpec& spec, std::size_t k) {
  return fps_downsample(rasterize(scene, spec), k, SemanticClass::Plasticine);
}

GripperAction no_contact_action(const VoxelSet& current, const Workspace& ws) {
  const Vec3 c = current.centroid();
  double h = 0.0;
  for (const auto& p : current.points) h = std::max(h, std::abs(p.x() - c.x()));
  GripperAction a;
  a.x = c.x();
  a.y = c.y();
  a.z = ws.z_min();
  a.rz = 0.0;
  a.l = std::min(ws.max_width(), 2 * (h + ws.finger.radius + ws.voxel()));
  a.l_end = a.l;
  return a;
}

ActionScorer::ActionScorer(const DynamicsModel& model, const Scene& scene, const VoxelSet& goal_sampled,
                           const PlannerConfig& cfg)
    : model_(model), scene_(scene), goal_(goal_sampled), cfg_(cfg) {}

double ActionScorer::state_loss(const Scene& s) const {
  return total_loss(observe(s, model_.workspace().grid, cfg_.k), goal_, cfg_.weights, cfg_.dcd);
}

Candidate ActionScorer::evaluate(const GripperAction& a) const {
  Candidate c;
  c.action = a;
  if (auto why = check_action(a, model_.workspace())) {
    c.reason = *why;
    return c;
  }
  try {
    c.loss = state_loss(model_.step(scene_, a));
    c.valid = true;
  } catch (const Error& e) {
    c.reason = e.what();
  }
  return c;
}

namespace {

// Clamp an action into the admissible box around a fixed opening width.
GripperAction admissible(GripperAction a, const Workspace& ws, const InitConfig& cfg) {
  const Aabb b = ws.grid.bounds();
  a.x = std::clamp(a.x, b.min.x(), b.max.x());
  a.y = std::clamp(a.y, b.min.y(), b.max.y());
  a.z = std::clamp(a.z, ws.z_min(), ws.z_max());
  a.rz = normalize_rz(a.rz);
  a.l_end = std::clamp(a.l_end, std::max(cfg.l_min, ws.min_width() + 1e-9), std::max(a.l, cfg.l_min));
  a.l = std::max(a.l, a.l_end);
  return a;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t(out[0]) << 32) | out[1];
}

using Params = Eigen::Matrix<double, 5, 1>;

struct Scales {
  double len;
  Params s() const { return (Params() << len, len, len, 0.1, len).finished(); }
};

Params to_params(const GripperAction& a, const Scales& sc) {
  return (Params() << a.x, a.y, a.z, a.rz, a.l_end).finished().cwiseQuotient(sc.s());
}

GripperAction from_params(const Params& u, const GripperAction& base, const Scales& sc) {
  const Params v = u.cwiseProduct(sc.s());
  GripperAction a = base;
  a.x = v(0);
  a.y = v(1);
  a.z = v(2);
  a.rz = v(3);
  a.l_end = v(4);
  return a;
}

}  // namespace

PlanResult plan_pinch(const DynamicsModel& model, const Scene& scene, const VoxelSet& goal,
                      const PlannerConfig& cfg, std::size_t pinch_index) {
  if (goal.empty()) throw InvalidArgument("planning needs a non-empty goal");
  const Workspace& ws = model.workspace();
  const VoxelSet goal_sampled = fps_downsample(goal, cfg.k, SemanticClass::Plasticine);
  const ActionScorer scorer(model, scene, goal_sampled, cfg);
  const VoxelSet& current = scene.plasticine;
  PlanResult res;

  GripperAction init;
  if (cfg.init_mode == InitMode::ShapeBased) {
    res.init = shape_based_init(current, goal, cfg.init, ws);
    if (!res.init.needed) {
      res.no_contact = true;
      res.candidates.push_back(scorer.evaluate(no_contact_action(current, ws)));
      const Candidate& c = res.candidates.back();
      if (!c.valid) throw Error("no-contact action rejected: " + c.reason);
      res.action = c.action;
      res.loss = res.init_loss = c.loss;
      return res;
    }
    init = res.init.action;
  } else {
    init = random_init(current, cfg.init, ws, mix_seed(cfg.seed, 0x5EED0000u + pinch_index));
    res.init.action = init;
  }
  res.candidates.push_back(scorer.evaluate(init));
  res.init_loss = res.candidates[0].valid ? res.candidates[0].loss : std::numeric_limits<double>::infinity();

  if (cfg.optimizer == OptimizerKind::Sampling) {
    std::mt19937_64 rng(mix_seed(cfg.seed, pinch_index));
    std::normal_distribution<double> n01(0.0, 1.0);
    for (std::size_t s = 0; s < cfg.samples; ++s) {
      GripperAction a = init;
      a.x += cfg.sigma_xy * n01(rng);
      a.y += cfg.sigma_xy * n01(rng);
      a.z += cfg.sigma_z * n01(rng);
      a.rz += cfg.sigma_rz * n01(rng);
      a.l_end += cfg.sigma_l_end * n01(rng);
      res.candidates.push_back(scorer.evaluate(admissible(a, ws, cfg.init)));
    }
  } else {
    const Scales sc{ws.voxel()};
    const double h = cfg.fd_epsilon;
    if (!(h > 0)) throw ConfigError("fd_epsilon must be positive");
    auto f = [&](Params& u) {
      const GripperAction a = admissible(from_params(u, init, sc), ws, cfg.init);
      u = to_params(a, sc);
      res.candidates.push_back(scorer.evaluate(a));
      const Candidate& c = res.candidates.back();
      return c.valid ? c.loss : std::numeric_limits<double>::infinity();
    };
    Params u = to_params(init, sc);
    double fu = res.init_loss;
    std::vector<Params> S, Y;
    constexpr std::size_t kMemory = 5;
    auto gradient = [&](Params& x, double fx) {
      Params g = Params::Zero();
      for (int i = 0; i < 5; ++i) {
        Params xp = x;
        xp(i) += h;
        const double fp = f(xp);
        if (std::isfinite(fp)) {
          g(i) = (fp - fx) / h;
        } else {
          Params xm = x;
          xm(i) -= h;
          const double fm = f(xm);
          g(i) = std::isfinite(fm) ? (fx - fm) / h : 0.0;
        }
      }
      return g;
    };
    if (std::isfinite(fu)) {
      Params g = gradient(u, fu);
      for (std::size_t it = 0; it < cfg.qn_iterations && g.lpNorm<Eigen::Infinity>() > 0; ++it) {
        // Two-loop recursion.
        Params q = g;
        std::vector<double> alpha(S.size());
        for (int j = int(S.size()) - 1; j >= 0; --j) {
          alpha[j] = S[j].dot(q) / Y[j].dot(S[j]);
          q -= alpha[j] * Y[j];
        }
        if (!S.empty()) {
          q *= S.back().dot(Y.back()) / Y.back().dot(Y.back());
        } else {
          q *= 2.0 / g.lpNorm<Eigen::Infinity>();  // first step moves at most two normalized units
        }
        for (std::size_t j = 0; j < S.size(); ++j) {
          const double beta = Y[j].dot(q) / Y[j].dot(S[j]);
          q += S[j] * (alpha[j] - beta);
        }
        const Params d = -q;
        const double slope = g.dot(d);
        if (!(slope < 0)) break;
        double step = 1.0;
        bool accepted = false;
        Params un;
        double fn = 0.0;
        for (int ls = 0; ls < 4; ++ls, step *= 0.5) {
          un = u + step * d;
          fn = f(un);
          if (std::isfinite(fn) && fn <= fu + 1e-4 * step * slope) {
            accepted = true;
            break;
          }
        }
        if (!accepted) break;
        Params gn = gradient(un, fn);
        const Params s = un - u, y = gn - g;
        if (y.dot(s) > 1e-12) {
          S.push_back(s);
          Y.push_back(y);
          if (S.size() > kMemory) {
            S.erase(S.begin());
            Y.erase(Y.begin());
          }
        }
        u = un;
        fu = fn;
        g = gn;
      }
    }
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < res.candidates.size(); ++i) {
    const Candidate& c = res.candidates[i];
    if (c.valid && (!best || c.loss < res.candidates[*best].loss)) best = i;
  }
  if (!best) {
    std::set<std::string> reasons;
    for (const auto& c : res.candidates) reasons.insert(c.reason);
    std::string msg = "all candidate actions were rejected:";
    for (const auto& r : reasons) msg += " [" + r + "]";
    throw Error(msg);
  }
  res.action = res.candidates[*best].action;
  res.loss = res.candidates[*best].loss;
  return res;
}

EpisodeResult plan_episode(const DynamicsModel& model, const Scene& scene, const VoxelSet& goal,
                           std::size_t n_pinches, const PlannerConfig& cfg,
                           const EpisodeObserver& executed) {
  if (n_pinches < 1) throw InvalidArgument("an episode needs at least one pinch");
  EpisodeResult ep;
  ep.trajectory.push_back(scene);
  const VoxelSet goal_sampled = fps_downsample(goal, cfg.k, SemanticClass::Plasticine);
  const ActionScorer initial(model, scene, goal_sampled, cfg);
  ep.loss_curve.push_back(initial.state_loss(scene));
  for (std::size_t p = 0; p < n_pinches; ++p) {
    try {
      PlanResult plan = plan_pinch(model, ep.trajectory.back(), goal, cfg, p);
      SubstepObserver obs;
      if (executed) obs = [&](const SubstepRecord& r) { executed(p, r); };
      Scene next = model.step(ep.trajectory.back(), plan.action, obs);
      const ActionScorer scorer(model, next, goal_sampled, cfg);
      ep.loss_curve.push_back(scorer.state_loss(next));
      ep.actions.push_back(plan.action);
      ep.plans.push_back(std::move(plan));
      ep.trajectory.push_back(std::move(next));
    } catch (const Error& e) {
      ep.error_pinch = p;
      ep.error = e.what();
      break;
    }
  }
  return ep;
}

void write_plan_jsonl(std::ostream& out, std::size_t pinch, const PlanResult& plan) {
  for (std::size_t i = 0; i < plan.candidates.size(); ++i) {
    const Candidate& c = plan.candidates[i];
    nlohmann::json j;
    j["pinch"] = pinch;
    j["candidate"] = i;
    j["valid"] = c.valid;
    if (c.valid) j["loss"] = c.loss;
    else j["reason"] = c.reason;
    j["selected"] = c.action == plan.action && c.valid && c.loss == plan.loss;
    j["action"] = {{"x", c.action.x}, {"y", c.action.y}, {"z", c.action.z},
                   {"rz", c.action.rz}, {"l", c.action.l}, {"l_end", c.action.l_end}};
    out << j.dump() << '\n';
  }
}

}  // namespace occshape
