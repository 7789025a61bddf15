#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "occshape/action.hpp"
#include "occshape/dynamics.hpp"
#include "occshape/fill.hpp"
#include "occshape/occupancy.hpp"

namespace occshape {

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Rgb> colors;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void push_back(const Vec3& p, Rgb c) {
    points.push_back(p);
    colors.push_back(c);
  }
  void append(const PointCloud& o);
};

/// Camera-to-world transform; the camera looks along its local +z.
struct CameraPose {
  int id = 0;
  Eigen::Matrix4d camera_to_world = Eigen::Matrix4d::Identity();

  Vec3 position() const { return camera_to_world.block<3, 1>(0, 3); }
};

/// Looks from `eye` at `target`; `up` fixes the roll.
CameraPose look_at(int id, const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

/// Four cameras above the plane and two below it, all aimed at the workspace center.
std::vector<CameraPose> default_cameras();

struct CameraCloud {
  CameraPose pose;
  PointCloud cloud;  // world frame
};

struct Capture {
  std::vector<CameraCloud> clouds;
  /// Finger geometry reported by the robot; needed by the refinement stage.
  std::optional<std::array<Capsule, 2>> fingers;
};

struct SynthOptions {
  /// Samples per voxel face edge on plasticine faces (n x n per face).
  int face_samples = 3;
  /// Target spacing of finger and plane samples (m).
  double spacing = 0.0007;
  /// Half extents of the sampled plane patch around the origin (m).
  double plane_half_extent = 0.1;
  bool sample_plane = true;
};

/// Surface sample of the synthetic scene with its outward normal.
struct SurfaceSample {
  Vec3 point;
  Vec3 normal;
  Rgb color;
  SemanticClass cls = SemanticClass::Plasticine;
};

/// Boundary faces of the rasterized plasticine, both finger capsules and the
/// top of the plane patch, in a fixed order.
std::vector<SurfaceSample> scene_surface_samples(const Scene& scene, const GridSpec& spec,
                                                 const SynthOptions& opt = {});

/// True when the segment from p to the camera passes through a finger other
/// than `own` (the finger a sample lies on, if any).
bool occluded_by_fingers(const Vec3& p, const Vec3& camera, const std::array<Capsule, 2>& fingers,
                         int own = -1);

/// With occlusion off every camera receives every sample. With it on a camera
/// keeps the samples whose normal faces it and whose line of sight misses the
/// fingers.
Capture synth_capture(const Scene& scene, const std::vector<CameraPose>& cameras, bool occlusion,
                      const GridSpec& spec = GridSpec::workspace(), const SynthOptions& opt = {});

/// Per-camera ASCII PLY files (camera frame) plus a poses file with one line
/// per camera: id followed by the 16 row-major entries of camera_to_world.
void write_capture(const Capture& capture, const std::string& dir);
Capture read_capture(const std::string& dir);
std::string format_poses(const std::vector<CameraPose>& poses);
std::vector<CameraPose> parse_poses(const std::string& text);

struct PlatformSpec {
  Vec3 size{1.0, 1.0, 0.2};  // l, w, h
  double plane_height = 0.0;

  /// Centered footprint, from the plane up to plane_height + h.
  Aabb bounds() const;
};

/// Merges all camera clouds, keeping points inside the platform bounds.
PointCloud mask_platform(const Capture& capture, const PlatformSpec& spec);
PointCloud crop_roi(const PointCloud& cloud, const Aabb& roi);

struct ColorTable {
  Rgb plasticine = default_color(SemanticClass::Plasticine);
  Rgb gripper = default_color(SemanticClass::FingerA);
};

struct ColorSegments {
  PointCloud object;   // P_do
  PointCloud gripper;  // P_g
  PointCloud rejected;
};

/// A point matches a reference when every channel differs by at most
/// `tolerance`. Matching both, it goes to the nearer one in RGB distance;
/// exact ties go to the plasticine. Throws when no object point is found.
ColorSegments color_segment(const PointCloud& cloud, const ColorTable& table, int tolerance = 30);

/// Cluster label per point; -1 marks noise.
struct DbscanResult {
  std::vector<int> labels;
  int clusters = 0;
};

/// Core points have at least min_pts points (themselves included) within eps.
/// Clusters are numbered by their lowest core index; a border point joins the
/// cluster of its nearest core point, so labels do not depend on visit order.
DbscanResult dbscan(std::span<const Vec3> points, double eps, std::size_t min_pts);

struct Primitives {
  std::array<PointCloud, 2> clouds;
  DbscanResult clustering;
};

/// The two largest clusters ordered by centroid x, then y. Throws when fewer
/// than two clusters exist.
Primitives dbscan_primitives(const PointCloud& gripper, double eps, std::size_t min_pts);

struct Refined {
  PointCloud object;
  std::array<PointCloud, 2> primitives;
  std::size_t moved = 0;
  /// The moved points, in input order.
  PointCloud removed;
};

/// Object points within radius + dilation of a capsule axis segment move into
/// that primitive's cloud (the nearer capsule when both qualify).
Refined refine_with_capsules(const PointCloud& object, const std::array<PointCloud, 2>& primitives,
                             const std::array<Capsule, 2>& capsules, double dilation);

/// A stage failure; `stage()` names the pipeline step.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct GroundTruthConfig {
  GridSpec grid = GridSpec::workspace();
  Aabb roi = prediction_range();
  PlatformSpec platform;
  ColorTable colors;
  int color_tolerance = 30;
  double dbscan_eps = 0.006;  // 3 voxels; halved once when the fingers merge
  std::size_t dbscan_min_pts = 8;
  double dilation = 0.002;  // 1 voxel
  /// Plan-view reach from the object within which finger-wall samples close
  /// the object shell over the hidden contact patch.
  double wall_reach = 0.004;
  double r_fill = 0.002;
  /// Closing starts here and grows by one while the plasticine shell still
  /// leaks (occlusion holes), at most max_extra_close times.
  int close_iters = 0;
  int max_extra_close = 8;
  float theta = kDefaultOccupancyThreshold;
};

struct StageCount {
  std::string stage;
  std::size_t count = 0;
};

struct GroundTruth {
  OccupancyGrid grid;
  std::vector<StageCount> report;
  /// Objects whose fill enclosed no interior.
  std::vector<std::string> surface_only;
  std::size_t uncolored = 0;
};

/// mask -> crop -> color filter -> cluster -> refine -> fill each object ->
/// label (plane shell, then objects by mesh SDF) -> colors -> threshold/crop.
GroundTruth generate_ground_truth(const Capture& capture, const GroundTruthConfig& cfg = {});

/// Stage-by-stage point counts, one "stage count" line each.
std::string format_report(const GroundTruth& gt);

/// Direct voxelization of a scene: plane shell, rasterized plasticine, and
/// voxels whose centers lie inside a finger capsule.
OccupancyGrid voxelize_scene(const Scene& scene, const GroundTruthConfig& cfg = {});

/// Fraction of voxels occupied in either grid whose classes agree.
double class_agreement(const OccupancyGrid& a, const OccupancyGrid& b);
/// Intersection over union of one class.
double class_iou(const OccupancyGrid& a, const OccupancyGrid& b, SemanticClass c);

}  // namespace occshape
