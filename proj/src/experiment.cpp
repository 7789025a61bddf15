#include "occshape/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "occshape/dump.hpp"
#include "occshape/io.hpp"
#include "occshape/pipeline.hpp"
#include "occshape/sampling.hpp"

namespace occshape {

const std::set<std::string>& episode_config_keys() {
  static const std::set<std::string> keys{
      "goal",        "letter",      "goal_dump",   "letter_height", "stamp_h1",
      "stamp_h2",    "stamp_top_fraction",         "pinches",       "seed",
      "k",           "optimizer",   "init",        "samples",       "qn_iterations",
      "fd_epsilon",  "m",           "tau_goal",    "margin",        "w_emd",
      "w_dcd",       "w_cd",        "dcd_alpha",   "dcd_lambda",    "sigma_xy",
      "sigma_z",     "sigma_rz",    "sigma_l_end", "substeps",      "relax_sweeps",
      "out_dir"};
  return keys;
}

namespace {

std::size_t positive_count(const Config& c, const std::string& key, long long fallback) {
  const long long v = c.integer(key, fallback);
  if (v < 1) throw ConfigError("config key '" + key + "' must be at least 1");
  return static_cast<std::size_t>(v);
}

double positive_number(const Config& c, const std::string& key, double fallback) {
  const double v = c.number(key, fallback);
  if (!(v > 0)) throw ConfigError("config key '" + key + "' must be positive");
  return v;
}

}  // namespace

EpisodeSettings episode_settings(const Config& c, const Workspace& ws) {
  c.reject_unknown(episode_config_keys());
  EpisodeSettings s;
  s.planner.init = InitConfig::for_workspace(ws);

  const std::string& goal = c.require("goal");
  if (goal == "letter") {
    s.goal.source = GoalSource::Letter;
    const std::string letter = c.require("letter");
    if (letter.size() != 1) throw ConfigError("config key 'letter' must be a single character");
    s.goal.letter = letter[0];
    s.goal.height = positive_number(c, "letter_height", s.goal.height);
  } else if (goal == "stamp") {
    s.goal.source = GoalSource::Stamp;
    s.goal.h1 = positive_number(c, "stamp_h1", s.goal.h1);
    s.goal.h2 = positive_number(c, "stamp_h2", s.goal.h2);
    s.goal.top_fraction = positive_number(c, "stamp_top_fraction", s.goal.top_fraction);
    if (s.goal.top_fraction > 1) throw ConfigError("config key 'stamp_top_fraction' must not exceed 1");
  } else if (goal == "dump") {
    s.goal.source = GoalSource::Dump;
    s.goal.dump_path = c.require("goal_dump");
  } else {
    throw ConfigError("config key 'goal' must be letter, stamp or dump, got '" + goal + "'");
  }

  PlannerConfig& p = s.planner;
  c.require("pinches");
  p.pinches = positive_count(c, "pinches", 0);
  const long long seed = c.integer("seed");
  if (seed < 0) throw ConfigError("config key 'seed' must be nonnegative");
  p.seed = static_cast<std::uint64_t>(seed);
  p.k = positive_count(c, "k", static_cast<long long>(p.k));

  const std::string opt = c.get("optimizer", "sampling");
  if (opt == "sampling") p.optimizer = OptimizerKind::Sampling;
  else if (opt == "quasi_newton") p.optimizer = OptimizerKind::QuasiNewton;
  else throw ConfigError("config key 'optimizer' must be sampling or quasi_newton, got '" + opt + "'");
  const std::string init = c.get("init", "shape");
  if (init == "shape") p.init_mode = InitMode::ShapeBased;
  else if (init == "random") p.init_mode = InitMode::Random;
  else throw ConfigError("config key 'init' must be shape or random, got '" + init + "'");

  const long long samples = c.integer("samples", static_cast<long long>(p.samples));
  if (samples < 0) throw ConfigError("config key 'samples' must be nonnegative");
  p.samples = static_cast<std::size_t>(samples);
  p.qn_iterations = positive_count(c, "qn_iterations", static_cast<long long>(p.qn_iterations));
  p.fd_epsilon = positive_number(c, "fd_epsilon", p.fd_epsilon);
  p.init.m = static_cast<int>(positive_count(c, "m", p.init.m));
  p.init.tau_goal = positive_number(c, "tau_goal", p.init.tau_goal);
  p.init.margin = c.number("margin", p.init.margin);
  if (p.init.margin < 0) throw ConfigError("config key 'margin' must be nonnegative");
  p.weights.w_emd = c.number("w_emd", p.weights.w_emd);
  p.weights.w_dcd = c.number("w_dcd", p.weights.w_dcd);
  p.weights.w_cd = c.number("w_cd", p.weights.w_cd);
  for (const char* key : {"w_emd", "w_dcd", "w_cd"})
    if (c.number(key, 0.0) < 0) throw ConfigError(std::string("config key '") + key + "' must be nonnegative");
  p.dcd.alpha = positive_number(c, "dcd_alpha", p.dcd.alpha);
  p.dcd.lambda = positive_number(c, "dcd_lambda", p.dcd.lambda);
  p.sigma_xy = c.number("sigma_xy", p.sigma_xy);
  p.sigma_z = c.number("sigma_z", p.sigma_z);
  p.sigma_rz = c.number("sigma_rz", p.sigma_rz);
  p.sigma_l_end = c.number("sigma_l_end", p.sigma_l_end);
  for (const char* key : {"sigma_xy", "sigma_z", "sigma_rz", "sigma_l_end"})
    if (c.number(key, 0.0) < 0) throw ConfigError(std::string("config key '") + key + "' must be nonnegative");

  s.pinch.substeps = positive_count(c, "substeps", static_cast<long long>(s.pinch.substeps));
  s.pinch.relax_sweeps = static_cast<std::size_t>(c.integer("relax_sweeps", static_cast<long long>(s.pinch.relax_sweeps)));
  if (c.integer("relax_sweeps", 0) < 0) throw ConfigError("config key 'relax_sweeps' must be nonnegative");
  s.out_dir = c.get("out_dir", s.out_dir);
  try {
    p.init.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

namespace {

std::string goal_name(const GoalSpec& g) {
  switch (g.source) {
    case GoalSource::Letter: return std::string("letter ") + g.letter;
    case GoalSource::Stamp: return "stamp";
    case GoalSource::Dump: return "dump " + g.dump_path;
  }
  return "";
}

}  // namespace

EpisodeArtifacts run_episode(const EpisodeSettings& s, const Workspace& ws) {
  namespace fs = std::filesystem;
  const fs::path dir(s.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StageError("output", "cannot create " + dir.string() + ": " + ec.message());

  Goal goal;
  try {
    goal = gen_goal(s.goal, ws, s.planner.k);
  } catch (const Error& e) {
    throw StageError("goal", e.what());
  }
  write_dump(goal.grid, (dir / "goal.occ").string());
  write_csv(goal.sampled, (dir / "goal.csv").string());

  const QuasiStaticPinchModel model(ws, s.pinch);
  const Scene start = make_block_scene(ws);

  std::ofstream traj(dir / "trajectory.jsonl");
  EpisodeArtifacts art;
  art.episode = plan_episode(model, start, goal.dense, s.planner.pinches, s.planner,
                             [&](std::size_t pinch, const SubstepRecord& r) { write_substep_jsonl(traj, r, pinch); });
  const EpisodeResult& ep = art.episode;
  // Substeps of the failed pinch never reach the observer; the log holds executed pinches only.
  traj.close();

  std::ofstream plans(dir / "plans.jsonl");
  for (std::size_t i = 0; i < ep.plans.size(); ++i) write_plan_jsonl(plans, i, ep.plans[i]);
  plans.close();

  std::ostringstream curve;
  curve << "pinch,total,emd,dcd,cd\n";
  const DcdParams eval = DcdParams::evaluation();
  for (std::size_t i = 0; i < ep.trajectory.size(); ++i) {
    const Scene& state = ep.trajectory[i];
    const OccupancyGrid grid = rasterize(state, ws.grid, true);
    write_dump(grid, (dir / ("state_" + std::to_string(i) + ".occ")).string());
    const VoxelSet sampled = observe(state, ws.grid, s.planner.k);
    write_csv(sampled, (dir / ("state_" + std::to_string(i) + ".csv")).string());
    const LossBreakdown planner_loss = loss_breakdown(sampled, goal.sampled, s.planner.weights, s.planner.dcd);
    curve << i << ',' << format_double(planner_loss.total) << ',' << format_double(planner_loss.emd) << ','
          << format_double(planner_loss.dcd) << ',' << format_double(planner_loss.cd) << '\n';
    const LossBreakdown report = loss_breakdown(sampled, goal.sampled, s.planner.weights, eval);
    if (i == 0) art.initial = report;
    art.final = report;
  }
  write_text_file((dir / "loss_curve.csv").string(), curve.str());

  const double first = ep.loss_curve.front(), last = ep.loss_curve.back();
  std::ostringstream sum;
  sum << "goal " << goal_name(s.goal) << '\n'
      << "seed " << s.planner.seed << '\n'
      << "optimizer " << to_string(s.planner.optimizer) << '\n'
      << "init " << (s.planner.init_mode == InitMode::ShapeBased ? "shape" : "random") << '\n'
      << "pinches_requested " << s.planner.pinches << '\n'
      << "pinches_executed " << ep.actions.size() << '\n'
      << "k " << s.planner.k << '\n'
      << "workspace_scale " << format_double(kWorkspaceScale) << '\n'
      << "initial_total_loss " << format_double(first) << '\n'
      << "final_total_loss " << format_double(last) << '\n'
      << "reduction " << format_double(first > 0 ? (first - last) / first : 0.0) << '\n'
      << "final_emd " << format_double(art.final.emd) << '\n'
      << "final_dcd " << format_double(art.final.dcd) << '\n'
      << "final_cd " << format_double(art.final.cd) << '\n'
      << "status " << (ep.error_pinch ? "failed at pinch " + std::to_string(*ep.error_pinch) : std::string("ok"))
      << '\n';
  art.summary = sum.str();
  write_text_file((dir / "summary.txt").string(), art.summary);
  if (ep.error_pinch) throw StageError("plan", "pinch " + std::to_string(*ep.error_pinch) + ": " + ep.error);
  return art;
}

}  // namespace occshape
