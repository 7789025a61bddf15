#include "occshape/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "occshape/config.hpp"
#include "occshape/dump.hpp"
#include "occshape/experiment.hpp"
#include "occshape/io.hpp"
#include "occshape/pipeline.hpp"
#include "occshape/sampling.hpp"

namespace occshape {

namespace {

namespace fs = std::filesystem;

bool has_extension(const std::string& path, const std::string& ext) {
  return fs::path(path).extension() == ext;
}

// Plasticine voxel centers of an OCCV1 dump, or the rows of a CSV file.
VoxelSet load_points(const std::string& path) {
  if (has_extension(path, ".occ")) return occupied_centers(read_dump(path), SemanticClass::Plasticine);
  return read_csv(path);
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StageError("output", "cannot create " + dir + ": " + ec.message());
  return fs::path(dir);
}

// Equal sizes for the matching metrics: the larger set is FPS-reduced.
void equalize(VoxelSet& a, VoxelSet& b) {
  if (a.size() > b.size()) a = fps_downsample(a, b.size(), SemanticClass::Plasticine);
  else if (b.size() > a.size()) b = fps_downsample(b, a.size(), SemanticClass::Plasticine);
}

std::string_view branch_name(Branch b) { return b == Branch::X ? "x" : "y"; }

struct Options {
  std::string config, out_dir, letter, input, second, capture_dir;
  std::optional<long long> seed, k, pinches;
  bool no_occlusion = false;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "key = value config file");
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--out-dir", o.out_dir, "output directory");
  sub->add_option("--k", o.k, "FPS sample count");
  sub->add_option("--letter", o.letter, "goal letter");
  sub->add_option("--pinches", o.pinches, "pinches per episode");
}

Config load_config(const Options& o) {
  Config c = o.config.empty() ? Config{} : Config::load(o.config);
  if (o.seed) c.set("seed", std::to_string(*o.seed));
  if (o.k) c.set("k", std::to_string(*o.k));
  if (o.pinches) c.set("pinches", std::to_string(*o.pinches));
  if (!o.letter.empty()) {
    c.set("goal", "letter");
    c.set("letter", o.letter);
  }
  if (!o.out_dir.empty()) c.set("out_dir", o.out_dir);
  return c;
}

int cmd_shape(const Options& o, std::ostream& out) {
  if (o.config.empty()) throw ConfigError("shape needs --config");
  const EpisodeSettings s = episode_settings(load_config(o));
  const EpisodeArtifacts art = run_episode(s);
  out << art.summary;
  return kExitOk;
}

int cmd_metrics(const Options& o, std::ostream& out) {
  VoxelSet a = load_points(o.input), b = load_points(o.second);
  if (a.empty() || b.empty()) throw StageError("metrics", "point sets must be non-empty");
  equalize(a, b);
  const LossBreakdown l = loss_breakdown(a, b, LossWeights{}, DcdParams::evaluation());
  out << std::fixed << std::setprecision(9) << "emd " << l.emd << "\ndcd " << l.dcd << "\ncd " << l.cd
      << "\ntotal " << l.total << '\n';
  return kExitOk;
}

int cmd_sample(const Options& o, std::ostream& out) {
  const std::size_t k = o.k ? static_cast<std::size_t>(std::max(1LL, *o.k)) : kDefaultSampleCount;
  if (o.k && *o.k < 1) throw ConfigError("--k must be at least 1");
  const VoxelSet set = load_points(o.input);
  const VoxelSet sampled = fps_downsample(set, k, SemanticClass::Plasticine);
  if (o.out_dir.empty()) {
    out << format_csv(sampled);
  } else {
    write_csv(sampled, (ensure_dir(o.out_dir) / "samples.csv").string());
    out << "samples " << sampled.size() << '\n';
  }
  return kExitOk;
}

int cmd_make_dataset(const Options& o, std::ostream& out) {
  const fs::path dir = ensure_dir(o.out_dir.empty() ? "dataset" : o.out_dir);
  Capture capture;
  std::optional<Scene> scene;
  if (!o.capture_dir.empty()) {
    try {
      capture = read_capture(o.capture_dir);
    } catch (const Error& e) {
      throw StageError("read_capture", e.what());
    }
  } else {
    // A block squeezed by one random pinch, seen by the default cameras.
    const Workspace ws;
    const std::uint64_t seed = o.seed ? static_cast<std::uint64_t>(*o.seed) : 0;
    Scene block = make_block_scene(ws);
    const GripperAction a = random_init(block.plasticine, InitConfig::for_workspace(ws), ws, seed);
    scene = QuasiStaticPinchModel(ws).step(block, a);
    capture = synth_capture(*scene, default_cameras(), !o.no_occlusion, ws.grid);
    write_capture(capture, (dir / "capture").string());
    capture = read_capture((dir / "capture").string());
  }
  const GroundTruth gt = generate_ground_truth(capture);
  write_dump(gt.grid, (dir / "gt.occ").string());
  std::string report = format_report(gt);
  if (scene) {
    const OccupancyGrid oracle = voxelize_scene(*scene);
    write_dump(oracle, (dir / "scene.occ").string());
    report += "class_agreement " + format_double(class_agreement(gt.grid, oracle)) + '\n';
    report += "plasticine_iou " + format_double(class_iou(gt.grid, oracle, SemanticClass::Plasticine)) + '\n';
  }
  write_text_file((dir / "report.txt").string(), report);
  out << report;
  return kExitOk;
}

int cmd_init_action(const Options& o, std::ostream& out) {
  const VoxelSet current = load_points(o.input), goal = load_points(o.second);
  const Workspace ws;
  const InitResult r = shape_based_init(current, goal, InitConfig::for_workspace(ws), ws);
  if (!r.needed) {
    out << "needed false\n";
  } else {
    const GripperAction& a = r.action;
    out << "needed true\n"
        << "branch " << branch_name(r.branch) << '\n'
        << "x " << format_double(a.x) << "\ny " << format_double(a.y) << "\nz " << format_double(a.z)
        << "\nrz " << format_double(a.rz) << "\nl " << format_double(a.l) << "\nl_end "
        << format_double(a.l_end) << '\n';
  }
  std::ostringstream csv;
  csv << "region,branch,side,slab,lo,hi,count,goal_count,cost,selected\n";
  for (std::size_t i = 0; i < r.regions.size(); ++i) {
    const RegionCost& c = r.regions[i];
    const bool sel = std::find(r.selected.begin(), r.selected.end(), i) != r.selected.end();
    csv << i << ',' << branch_name(c.branch) << ',' << c.side << ',' << c.slab << ',' << format_double(c.lo) << ','
        << format_double(c.hi) << ',' << c.count << ',' << c.goal_count << ',' << format_double(c.cost) << ','
        << (sel ? 1 : 0) << '\n';
  }
  write_text_file((ensure_dir(o.out_dir.empty() ? "." : o.out_dir) / "region_costs.csv").string(), csv.str());
  return kExitOk;
}

int cmd_gen_goal(const Options& o, std::ostream& out) {
  GoalSpec spec;
  std::size_t k = kDefaultSampleCount;
  if (!o.config.empty()) {
    Config c = load_config(o);
    if (!c.has("pinches")) c.set("pinches", "1");
    if (!c.has("seed")) c.set("seed", "0");
    const EpisodeSettings s = episode_settings(c);
    spec = s.goal;
    k = s.planner.k;
  } else {
    if (o.letter.size() != 1) throw ConfigError("gen-goal needs --letter or --config");
    spec.letter = o.letter[0];
    if (o.k) {
      if (*o.k < 1) throw ConfigError("--k must be at least 1");
      k = static_cast<std::size_t>(*o.k);
    }
  }
  Goal g;
  try {
    g = gen_goal(spec, Workspace{}, k);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const fs::path dir = ensure_dir(o.out_dir.empty() ? "goal" : o.out_dir);
  write_dump(g.grid, (dir / "goal.occ").string());
  write_csv(g.dense, (dir / "goal_dense.csv").string());
  write_csv(g.sampled, (dir / "goal.csv").string());
  out << "voxels " << g.dense.size() << '\n' << "samples " << g.sampled.size() << '\n';
  const auto layers = layer_counts(g.grid);
  for (std::size_t z = 0; z < layers.size(); ++z)
    if (layers[z]) out << "layer " << z << ' ' << layers[z] << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Occupancy-based plasticine shaping toolkit", "occshape"};
  app.require_subcommand(1);
  Options o;

  auto* shape = app.add_subcommand("shape", "run a shaping episode from a config file");
  add_common(shape, o);
  auto* metrics = app.add_subcommand("metrics", "EMD, DCD, CD and total loss between two point files");
  metrics->add_option("a", o.input, "first CSV or OCCV1 file")->required();
  metrics->add_option("b", o.second, "second CSV or OCCV1 file")->required();
  auto* sample = app.add_subcommand("sample", "farthest point sampling of a CSV or OCCV1 file");
  sample->add_option("input", o.input, "input file")->required();
  add_common(sample, o);
  auto* dataset = app.add_subcommand("make-dataset", "ground-truth occupancy from a capture");
  dataset->add_option("capture_dir", o.capture_dir, "capture directory (synthesized when omitted)");
  dataset->add_flag("--no-occlusion", o.no_occlusion, "synthesize without finger occlusion");
  add_common(dataset, o);
  auto* init = app.add_subcommand("init-action", "shape-based grasp initialization");
  init->add_option("current", o.input, "current shape (CSV or OCCV1)")->required();
  init->add_option("goal", o.second, "goal shape (CSV or OCCV1)")->required();
  add_common(init, o);
  auto* goal = app.add_subcommand("gen-goal", "rasterize a goal shape");
  add_common(goal, o);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*shape) return cmd_shape(o, out);
    if (*metrics) return cmd_metrics(o, out);
    if (*sample) return cmd_sample(o, out);
    if (*dataset) return cmd_make_dataset(o, out);
    if (*init) return cmd_init_action(o, out);
    if (*goal) return cmd_gen_goal(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StageError& e) {
    err << "error in stage " << e.stage() << ": " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace occshape
