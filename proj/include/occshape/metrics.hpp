#pragma once

#include <cstddef>
#include <vector>

#include "occshape/voxel_set.hpp"

namespace occshape {

struct LossWeights {
  double w_emd = 0.5;
  double w_dcd = 0.4;
  double w_cd = 0.1;
};

struct DcdParams {
  double alpha = 500.0;
  double lambda = 0.5;

  /// Values used when optimizing (planner cost).
  static DcdParams training() { return {20.0, 0.1}; }
  /// Values used for reporting.
  static DcdParams evaluation() { return {500.0, 0.5}; }
};

struct EmdResult {
  double sum = 0.0;
  double mean = 0.0;
  std::vector<std::size_t> matching;  // B index for every A point
};

/// Exact earth mover's distance between equal-size sets.
EmdResult emd_solve(const VoxelSet& a, const VoxelSet& b);
double emd(const VoxelSet& a, const VoxelSet& b);       // sum form
double emd_mean(const VoxelSet& a, const VoxelSet& b);  // sum / |A|

double chamfer(const VoxelSet& a, const VoxelSet& b);
double dcd(const VoxelSet& a, const VoxelSet& b, const DcdParams& p = DcdParams::evaluation());

struct LossBreakdown {
  double emd = 0.0;  // mean form
  double dcd = 0.0;
  double cd = 0.0;
  double total = 0.0;
};

LossBreakdown loss_breakdown(const VoxelSet& a, const VoxelSet& b, const LossWeights& w = {},
                             const DcdParams& p = DcdParams::training());
double total_loss(const VoxelSet& a, const VoxelSet& b, const LossWeights& w = {},
                  const DcdParams& p = DcdParams::training());

}  // namespace occshape
