#include "occshape/metrics.hpp"

#include <cmath>

#include "occshape/assignment.hpp"
#include "occshape/kdtree.hpp"

namespace occshape {

namespace {

void require_nonempty(const VoxelSet& a, const VoxelSet& b, const char* what) {
  if (a.empty() || b.empty()) throw InvalidArgument(std::string(what) + " of an empty point set");
}

void validate(const DcdParams& p) {
  if (!(p.alpha > 0.0)) throw InvalidArgument("DCD temperature alpha must be positive");
  if (!(p.lambda >= 0.0)) throw InvalidArgument("DCD exponent lambda must be nonnegative");
}

// Mean over one direction of the density-aware term.
double dcd_direction(const VoxelSet& from, const VoxelSet& to, const DcdParams& p) {
  const auto nn = nearest_all(from.points, to.points);
  std::vector<std::size_t> hits(to.size(), 0);
  for (const auto& n : nn) ++hits[n.index];
  double s = 0.0;
  for (const auto& n : nn) {
    const double weight = std::pow(static_cast<double>(hits[n.index]), -p.lambda);
    s += 1.0 - weight * std::exp(-p.alpha * std::sqrt(n.sq_distance));
  }
  return s / static_cast<double>(from.size());
}

}  // namespace

EmdResult emd_solve(const VoxelSet& a, const VoxelSet& b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("EMD needs equal cardinality, got " + std::to_string(a.size()) + " and " +
                          std::to_string(b.size()));
  }
  EmdResult r;
  const std::size_t n = a.size();
  if (n == 0) return r;
  Eigen::MatrixXd cost(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost(i, j) = std::sqrt(sq_dist(a.points[i], b.points[j]));
  r.matching = solve_assignment(cost);
  for (std::size_t i = 0; i < n; ++i) r.sum += cost(i, r.matching[i]);
  r.mean = r.sum / static_cast<double>(n);
  return r;
}

double emd(const VoxelSet& a, const VoxelSet& b) { return emd_solve(a, b).sum; }
double emd_mean(const VoxelSet& a, const VoxelSet& b) { return emd_solve(a, b).mean; }

double chamfer(const VoxelSet& a, const VoxelSet& b) {
  require_nonempty(a, b, "chamfer distance");
  auto directed = [](const VoxelSet& from, const VoxelSet& to) {
    double s = 0.0;
    for (const auto& n : nearest_all(from.points, to.points)) s += std::sqrt(n.sq_distance);
    return s / static_cast<double>(from.size());
  };
  return directed(a, b) + directed(b, a);
}

double dcd(const VoxelSet& a, const VoxelSet& b, const DcdParams& p) {
  require_nonempty(a, b, "density-aware chamfer distance");
  validate(p);
  return 0.5 * (dcd_direction(a, b, p) + dcd_direction(b, a, p));
}

LossBreakdown loss_breakdown(const VoxelSet& a, const VoxelSet& b, const LossWeights& w,
                             const DcdParams& p) {
  if (w.w_emd < 0 || w.w_dcd < 0 || w.w_cd < 0) throw InvalidArgument("loss weights must be nonnegative");
  LossBreakdown r;
  r.emd = emd_mean(a, b);
  r.dcd = dcd(a, b, p);
  r.cd = chamfer(a, b);
  r.total = w.w_emd * r.emd + w.w_dcd * r.dcd + w.w_cd * r.cd;
  return r;
}

double total_loss(const VoxelSet& a, const VoxelSet& b, const LossWeights& w, const DcdParams& p) {
  return loss_breakdown(a, b, w, p).total;
}

}  // namespace occshape
