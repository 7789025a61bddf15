#pragma once

#include <set>
#include <string>

#include "occshape/config.hpp"
#include "occshape/goals.hpp"
#include "occshape/planner.hpp"

namespace occshape {

/// Everything an episode run reads from its config file.
struct EpisodeSettings {
  GoalSpec goal;
  PlannerConfig planner;
  PinchParams pinch;
  std::string out_dir = "episode";
};

/// Keys accepted in an episode config.
const std::set<std::string>& episode_config_keys();

/// Required keys: goal, pinches, seed. Unknown keys and malformed values
/// throw ConfigError naming the key.
EpisodeSettings episode_settings(const Config& cfg, const Workspace& ws = {});

struct EpisodeArtifacts {
  EpisodeResult episode;
  LossBreakdown initial;  // evaluation metrics of the start state vs. the goal
  LossBreakdown final;
  std::string summary;
};

/// Runs a block-to-goal episode and writes into `out_dir`:
///   trajectory.jsonl  one record per executed substep
///   plans.jsonl       every evaluated candidate
///   state_<i>.occ / state_<i>.csv  occupancy and FPS samples after pinch i (0 = start)
///   goal.occ / goal.csv
///   loss_curve.csv    planner loss before and after each pinch
///   summary.txt
/// A failed pinch throws StageError("plan") after the completed artifacts are written.
EpisodeArtifacts run_episode(const EpisodeSettings& settings, const Workspace& ws = {});

}  // namespace occshape
