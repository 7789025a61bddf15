#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "occshape/dynamics.hpp"
#include "occshape/metrics.hpp"

namespace occshape {

struct InitConfig {
  int m = 3;              // slabs per side per branch
  double tau_goal = 0.004;
  double margin = 2 * FingerGeometry{}.radius;
  double l_min = 2 * FingerGeometry{}.radius + 2 * 0.002;

  /// Defaults derived from a workspace (tau 2 voxels, margin 2R, l_min 2R + 2 voxels).
  static InitConfig for_workspace(const Workspace& ws);
  void validate() const;
};

enum class Branch { X, Y };

struct RegionCost {
  Branch branch = Branch::X;
  int side = 0;    // -1 toward the negative axis end, +1 toward the positive end
  int slab = 0;    // 0 nearest the goal centroid, counting outward
  double lo = 0.0, hi = 0.0;  // slab range along the branch axis, relative to the goal centroid
  std::size_t count = 0;      // s_r points in the region
  std::size_t goal_count = 0;
  double cost = 0.0;
};

struct InitResult {
  bool needed = true;  // false when every current point is already near the goal
  GripperAction action;
  Branch branch = Branch::X;
  Vec2 axis_x = Vec2::UnitX();  // branch X axis in the world frame
  std::vector<RegionCost> regions;  // branch X then Y, negative side then positive, slab outward
  std::vector<std::size_t> selected;  // indices into regions (one or two)
  std::size_t residual_count = 0;     // |s_r|
  bool clamped_center = false;
  bool substituted_goal_centroid = false;
};

/// Shape-based grasp initialization from the excess material of `current`
/// relative to `goal`.
InitResult shape_based_init(const VoxelSet& current, const VoxelSet& goal, const InitConfig& cfg,
                            const Workspace& ws = {});

/// Uniform random grasp over the current footprint, for ablations.
GripperAction random_init(const VoxelSet& current, const InitConfig& cfg, const Workspace& ws,
                          std::uint64_t seed);

enum class OptimizerKind { Sampling, QuasiNewton };
enum class InitMode { ShapeBased, Random };
std::string_view to_string(OptimizerKind k);

struct PlannerConfig {
  InitConfig init;
  OptimizerKind optimizer = OptimizerKind::Sampling;
  InitMode init_mode = InitMode::ShapeBased;
  std::size_t samples = 32;
  double fd_epsilon = 1.0;    // finite-difference step in normalized units
  std::size_t qn_iterations = 4;
  std::uint64_t seed = 0;
  std::size_t pinches = 5;
  std::size_t k = 300;
  LossWeights weights;
  DcdParams dcd = DcdParams::training();
  // Perturbation scales for the sampling backend.
  double sigma_xy = 3 * 0.002;
  double sigma_z = 4 * 0.002;
  double sigma_rz = 0.3;
  double sigma_l_end = 3 * 0.002;
};

struct Candidate {
  GripperAction action;
  bool valid = false;
  double loss = 0.0;
  std::string reason;  // rejection reason when invalid
};

struct PlanResult {
  GripperAction action;
  double loss = 0.0;       // predicted loss of the returned action
  double init_loss = 0.0;  // predicted loss of the initialization
  bool no_contact = false;
  InitResult init;
  std::vector<Candidate> candidates;  // every evaluated action, initialization first
};

/// Scores actions by rolling out the dynamics and comparing FPS samples with the goal.
class ActionScorer {
 public:
  ActionScorer(const DynamicsModel& model, const Scene& scene, const VoxelSet& goal_sampled,
               const PlannerConfig& cfg);
  Candidate evaluate(const GripperAction& a) const;
  double state_loss(const Scene& s) const;

 private:
  const DynamicsModel& model_;
  const Scene& scene_;
  const VoxelSet& goal_;
  const PlannerConfig& cfg_;
};

/// FPS samples of the scene's rasterized plasticine.
VoxelSet observe(const Scene& scene, const GridSpec& spec, std::size_t k);

/// Action guaranteed not to touch the current material.
GripperAction no_contact_action(const VoxelSet& current, const Workspace& ws);

/// Plans one pinch. `goal` is the dense goal voxel set.
PlanResult plan_pinch(const DynamicsModel& model, const Scene& scene, const VoxelSet& goal,
                      const PlannerConfig& cfg, std::size_t pinch_index = 0);

struct EpisodeResult {
  std::vector<GripperAction> actions;
  std::vector<Scene> trajectory;     // initial scene first
  std::vector<double> loss_curve;    // total loss before and after every pinch
  std::vector<PlanResult> plans;
  std::optional<std::size_t> error_pinch;
  std::string error;
};

/// Receives the substeps of every executed pinch.
using EpisodeObserver = std::function<void(std::size_t pinch, const SubstepRecord&)>;

EpisodeResult plan_episode(const DynamicsModel& model, const Scene& scene, const VoxelSet& goal,
                           std::size_t n_pinches, const PlannerConfig& cfg,
                           const EpisodeObserver& executed = {});

/// JSON-lines audit log: one record per evaluated candidate.
void write_plan_jsonl(std::ostream& out, std::size_t pinch, const PlanResult& plan);

}  // namespace occshape
