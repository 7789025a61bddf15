#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "occshape/action.hpp"
#include "occshape/occupancy.hpp"
#include "occshape/voxel_set.hpp"

namespace occshape {

/// Simulation geometry scaled into the 100 x 100 x 40 workspace. Lengths of
/// the reference simulation (0.25 m block, 0.045 m finger radius, 0.25 m
/// finger length) are multiplied by kWorkspaceScale.
inline constexpr double kWorkspaceScale = 0.192;

struct FingerGeometry {
  double radius = 0.045 * kWorkspaceScale;  // 8.64 mm
  double length = 0.25 * kWorkspaceScale;   // 48 mm tip to tip
};

struct Workspace {
  GridSpec grid = GridSpec::workspace();
  double plane_height = 0.0;
  FingerGeometry finger;

  double voxel() const { return grid.voxel_size.x(); }
  /// Lowest finger center height: bottom tip touching the plane.
  double z_min() const { return plane_height + 0.5 * finger.length; }
  /// Highest finger center height: top tip at the grid ceiling.
  double z_max() const { return grid.max_corner().z() - 0.5 * finger.length; }
  /// Closed widths must exceed this so the fingers never overlap.
  double min_width() const { return 2.0 * finger.radius; }
  /// Widest opening that still fits the grid footprint.
  double max_width() const {
    return std::min(grid.dims[0] * double(grid.voxel_size.x()), grid.dims[1] * double(grid.voxel_size.y()));
  }
};

struct Scene {
  VoxelSet plasticine;
  std::array<Capsule, 2> fingers;  // FingerA, FingerB
  double plane_height = 0.0;
  double voxel_size = 0.002;
};

/// 24 x 24 x 19 voxel block centered on the workspace origin, resting on the
/// plane, fingers parked apart at the lowest height.
Scene make_block_scene(const Workspace& ws = {});

/// nullopt when the action is admissible, else the rejection reason.
std::optional<std::string> check_action(const GripperAction& a, const Workspace& ws);

class ActionRejected : public Error {
 public:
  using Error::Error;
};

struct SubstepRecord {
  std::size_t substep = 0;
  double width = 0.0;
  Vec3 finger_a = Vec3::Zero();
  Vec3 finger_b = Vec3::Zero();
  GripperAction action;
  std::size_t particles = 0;
  std::size_t moved = 0;
  std::size_t relax_sweeps = 0;
};

using SubstepObserver = std::function<void(const SubstepRecord&)>;

/// State transition s' = G(s, a).
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;
  virtual Scene step(const Scene& scene, const GripperAction& action,
                     const SubstepObserver& observer = {}) const = 0;
  virtual const Workspace& workspace() const = 0;
};

struct PinchParams {
  std::size_t substeps = 10;
  std::size_t relax_sweeps = 20;
  double d_min = 0.0;  // 0 selects the scene voxel size
  /// Pairs count as overlapping below d_min * (1 - overlap_tolerance).
  double overlap_tolerance = 0.01;
};

/// Position-based quasi-static pinch. At every substep each finger advances
/// one increment; particles inside the stadium it swept are moved horizontally
/// and radially onto its new surface. Overlapping particles are then
/// relaxed by Jacobi sweeps and the plane and finger constraints re-applied.
/// Displacements are never undone.
class QuasiStaticPinchModel final : public DynamicsModel {
 public:
  explicit QuasiStaticPinchModel(Workspace ws = {}, PinchParams params = {});

  Scene step(const Scene& scene, const GripperAction& action,
             const SubstepObserver& observer = {}) const override;
  const Workspace& workspace() const override { return ws_; }
  const PinchParams& params() const { return params_; }

 private:
  Workspace ws_;
  PinchParams params_;
};

struct RolloutResult {
  std::vector<Scene> states;  // initial state first
  std::optional<std::size_t> error_index;
  std::string error;
};

/// Applies actions in order; stops at the first rejected action and reports its index.
RolloutResult rollout(const DynamicsModel& model, const Scene& scene,
                      const std::vector<GripperAction>& actions, const SubstepObserver& observer = {});

/// One JSON object per substep.
void write_substep_jsonl(std::ostream& out, const SubstepRecord& rec,
                         std::optional<std::size_t> pinch = std::nullopt);

struct ConstraintReport {
  std::size_t inside_capsule = 0;
  std::size_t below_plane = 0;
};
ConstraintReport check_constraints(const Scene& scene);

/// Voxels holding at least one particle become Plasticine; the fingers are
/// labeled by voxel-center containment if `fingers` is set.
OccupancyGrid rasterize(const Scene& scene, const GridSpec& spec, bool fingers = false);

}  // namespace occshape
