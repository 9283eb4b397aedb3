#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "radiance/checkpoint.hpp"
#include "radiance/dataset.hpp"
#include "radiance/mlp_field.hpp"
#include "radiance/scene.hpp"
#include "radiance/trainer.hpp"
#include "radiance/voxel_field.hpp"

namespace fs = std::filesystem;

namespace rf::cli {

std::string error_line(const std::string& kind, const std::string& message) {
  std::string esc;
  for (char c : message) {
    if (c == '"' || c == '\\') {
      esc += '\\';
      esc += c;
    } else if (c == '\n') {
      esc += "\\n";
    } else {
      esc += c;
    }
  }
  return "error kind=" + kind + " message=\"" + esc + "\"";
}

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_psnr(double p) {
  if (std::isinf(p)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", p);
  return buf;
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

Vec3 to_vec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

// ---- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::string scene_file;
  std::string preset = "two-spheres";
  SynthOptions options;
};

AnalyticScene preset_scene(const std::string& name) {
  if (name == "two-spheres") return two_sphere_scene(true);
  if (name == "two-spheres-untinted") return two_sphere_scene(false);
  if (name == "blob") {
    GaussianBlob b;
    b.center = Vec3::Zero();
    b.scale = 0.25;
    b.peak = 12;
    b.color = Vec3(0.2, 0.6, 0.9);
    return AnalyticScene({b}, Vec3::Ones());
  }
  throw InputError("unknown preset \"" + name + "\" (two-spheres, two-spheres-untinted, blob)");
}

void run_synth(const SynthArgs& a, std::ostream& out) {
  const AnalyticScene scene =
      a.scene_file.empty() ? preset_scene(a.preset) : scene_from_json(read_json_file(a.scene_file));
  const Dataset ds = synth_dataset(scene, a.options);
  save_dataset(ds, a.out);
  out << "wrote " << ds.frames.size() << " frames (" << ds.indices(Split::Train).size()
      << " train, " << ds.indices(Split::Test).size() << " test) to " << a.out << "\n";
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::string report;
  std::string backend = "mlp";
  std::string loss = "mse";
  TrainConfig config;
  int depth = 4;
  int width = 64;
  int resolution = 40;
  int color_degree = 0;
  bool nondeterministic = false;
};

template <typename Field>
void train_field(Field& field, const Dataset& ds, const TrainArgs& a, std::ostream& out) {
  TrainConfig cfg = a.config;
  cfg.checkpoint_path = a.out;
  cfg.deterministic = !a.nondeterministic;
  cfg.loss = a.loss == "norm" ? LossMode::Norm : LossMode::MeanSquared;
  validate(cfg);
  const nlohmann::json meta = rendering_meta_json(ds);
  if (cfg.iterations == 0) {
    save_checkpoint(a.out, field, meta);
    if (!a.report.empty()) write_report(a.report, TrainReport{});
    out << "0 iterations; wrote initial checkpoint " << a.out << "\n";
    return;
  }
  const TrainReport report = train<float>(field, ds, cfg);
  save_checkpoint(a.out, field, meta);
  if (!a.report.empty()) write_report(a.report, report);
  out << "iterations " << report.losses.size() << "  final loss " << report.losses.back()
      << "  held-out psnr " << format_psnr(report.evals.back().psnr) << " dB  ("
      << report.seconds << " s)\n";
}

void run_train(const TrainArgs& a, std::ostream& out) {
  const Dataset ds = load_dataset(a.data);
  if (a.backend == "mlp") {
    MlpFieldConfig mc;
    mc.bounds = ds.scene.bounds;
    mc.depth = a.depth;
    mc.width = a.width;
    MlpField<float> field(mc, a.config.seed);
    train_field(field, ds, a, out);
  } else {
    VoxelFieldConfig vc;
    vc.bounds = ds.scene.bounds;
    vc.resolution = {a.resolution, a.resolution, a.resolution};
    vc.color_degree = a.color_degree;
    VoxelField<float> field(vc);
    train_field(field, ds, a, out);
  }
}

// ---- render / orbit ---------------------------------------------------------

struct Loaded {
  std::unique_ptr<TrainableField<float>> field;
  Dataset meta;
};

Loaded load_model(const std::string& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (!ckpt.meta.contains("camera") || !ckpt.meta.contains("scene"))
    throw FormatError("checkpoint " + path + " carries no camera/scene metadata");
  return Loaded{instantiate(ckpt), dataset_from_rendering_meta(ckpt.meta)};
}

RenderOptions render_options(const Dataset& meta, int samples, bool early_termination) {
  RenderOptions o;
  o.sampling.count = samples;
  o.sampling.jitter = false;
  o.background = meta.scene.background;
  o.early_termination = early_termination;
  return o;
}

struct RenderArgs {
  std::string checkpoint;
  std::string out;
  std::vector<double> pose;
  std::vector<double> eye;
  std::vector<double> target{0, 0, 0};
  int samples = 128;
  bool early_termination = false;
};

void run_render(const RenderArgs& a, std::ostream& out) {
  const Loaded m = load_model(a.checkpoint);
  Mat4 pose;
  if (!a.pose.empty()) {
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) pose(r, c) = a.pose[static_cast<std::size_t>(4 * r + c)];
  } else if (!a.eye.empty()) {
    pose = look_at(to_vec3(a.eye), to_vec3(a.target));
  } else {
    throw UsageError("render needs --pose or --eye");
  }
  const Camera cam(m.meta.intrinsics, pose);
  const RenderedImage img = render_image(*m.field, cam, m.meta.scene.t_near, m.meta.scene.t_far,
                                         render_options(m.meta, a.samples, a.early_termination));
  write_ppm(a.out, img.color);
  out << "wrote " << a.out << "\n";
}

struct OrbitArgs {
  std::string checkpoint;
  std::string out_dir;
  int frames = 36;
  double elevation = 30;
  double radius = 0;  // 0: distance of the recorded t range midpoint
  int samples = 128;
  bool early_termination = true;
};

void run_orbit(const OrbitArgs& a, std::ostream& out) {
  if (a.frames < 1) throw InputError("--frames must be at least 1");
  const Loaded m = load_model(a.checkpoint);
  const Vec3 center = m.meta.scene.bounds.center();
  const double radius = a.radius > 0 ? a.radius : 0.5 * (m.meta.scene.t_near + m.meta.scene.t_far);
  const double elev = a.elevation * std::numbers::pi / 180.0;
  fs::create_directories(a.out_dir);
  const RenderOptions opts = render_options(m.meta, a.samples, a.early_termination);
  for (int i = 0; i < a.frames; ++i) {
    const double az = 2 * std::numbers::pi * i / a.frames;
    const Vec3 dir(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az), std::sin(elev));
    const Camera cam(m.meta.intrinsics, look_at(center + radius * dir, center));
    const RenderedImage img = render_image(*m.field, cam, m.meta.scene.t_near, m.meta.scene.t_far, opts);
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04d.ppm", i);
    write_ppm(fs::path(a.out_dir) / name, img.color);
  }
  out << "wrote " << a.frames << " frames to " << a.out_dir << "\n";
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string data;
  std::string checkpoint;
  std::string predictions;
  std::string split = "test";
  int samples = 128;
  bool baseline = false;
};

void run_eval(const EvalArgs& a, std::ostream& out) {
  if (a.checkpoint.empty() == a.predictions.empty())
    throw UsageError("eval needs exactly one of --checkpoint or --predictions");
  const Dataset ds = load_dataset(a.data);
  std::vector<std::size_t> frames;
  if (a.split == "all") {
    for (std::size_t i = 0; i < ds.frames.size(); ++i) frames.push_back(i);
  } else {
    frames = ds.indices(split_from_string(a.split));
  }
  if (frames.empty()) throw InputError("split \"" + a.split + "\" has no frames");

  std::vector<double> scores;
  if (!a.checkpoint.empty()) {
    const Loaded m = load_model(a.checkpoint);
    scores = evaluate_views(*m.field, ds, frames, a.samples);
  } else {
    for (std::size_t f : frames) {
      const fs::path p = fs::path(a.predictions) / ds.frames[f].file;
      if (!fs::exists(p)) throw IoError("missing prediction " + p.string());
      scores.push_back(psnr(read_ppm(p), ds.frames[f].image));
    }
  }
  out << "view\tfile\tsplit\tpsnr\n";
  double sum = 0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Frame& f = ds.frames[frames[k]];
    out << frames[k] << '\t' << f.file << '\t' << to_string(f.split) << '\t' << format_psnr(scores[k]) << '\n';
    sum += scores[k];
  }
  out << "mean\t-\t" << a.split << '\t' << format_psnr(sum / static_cast<double>(scores.size())) << '\n';
  if (a.baseline) out << "baseline\t-\ttest\t" << format_psnr(mean_image_baseline(ds)) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Radiance field toolkit: synthesize, train, render and evaluate"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Render an analytic scene into a posed dataset");
  synth->add_option("--out", sa.out, "Dataset directory")->required();
  synth->add_option("--scene", sa.scene_file, "Scene description (JSON)");
  synth->add_option("--preset", sa.preset, "Built-in scene: two-spheres, two-spheres-untinted, blob");
  synth->add_option("--views", sa.options.views);
  synth->add_option("--holdout-every", sa.options.holdout_every);
  synth->add_option("--width", sa.options.width);
  synth->add_option("--height", sa.options.height);
  synth->add_option("--focal-scale", sa.options.focal_scale);
  synth->add_option("--distance-scale", sa.options.distance_scale);
  synth->add_option("--seed", seed);

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Fit a field to a dataset");
  trn->add_option("--data", ta.data)->required();
  trn->add_option("--out", ta.out, "Checkpoint path")->required();
  trn->add_option("--report", ta.report, "Per-iteration JSONL report");
  trn->add_option("--backend", ta.backend)->check(CLI::IsMember({"mlp", "voxel"}));
  trn->add_option("--iterations", ta.config.iterations, "Default 2000 (mlp) / 500 (voxel)");
  trn->add_option("--rays", ta.config.rays_per_batch, "Rays per batch; default 512 (mlp) / 1024 (voxel)");
  trn->add_option("--samples", ta.config.samples_per_ray);
  trn->add_option("--lr", ta.config.adam.lr, "Initial learning rate; default 2e-3 (mlp) / 0.1 (voxel)");
  trn->add_option("--lr-final", ta.config.lr_final, "Final learning rate; default 1e-4 (mlp) / 0.01 (voxel)");
  trn->add_option("--loss", ta.loss)->check(CLI::IsMember({"mse", "norm"}));
  trn->add_option("--eval-interval", ta.config.eval_interval);
  trn->add_option("--eval-samples", ta.config.eval_samples);
  trn->add_option("--depth", ta.depth);
  trn->add_option("--width", ta.width);
  trn->add_option("--resolution", ta.resolution, "Voxel grid resolution per axis");
  trn->add_option("--color-degree", ta.color_degree)->check(CLI::Range(0, 1));
  trn->add_flag("--nondeterministic", ta.nondeterministic);
  trn->add_flag("--verbose", ta.config.verbose);
  trn->add_option("--seed", seed);

  RenderArgs ra;
  auto* ren = app.add_subcommand("render", "Render one view from a checkpoint");
  ren->add_option("--checkpoint", ra.checkpoint)->required();
  ren->add_option("--out", ra.out)->required();
  ren->add_option("--pose", ra.pose, "16 numbers, row-major camera-to-world")->expected(16);
  ren->add_option("--eye", ra.eye)->expected(3);
  ren->add_option("--target", ra.target)->expected(3);
  ren->add_option("--samples", ra.samples);
  ren->add_flag("--early-termination", ra.early_termination);
  ren->add_option("--seed", seed);

  OrbitArgs oa;
  auto* orb = app.add_subcommand("orbit", "Render a numbered frame sequence circling the scene");
  orb->add_option("--checkpoint", oa.checkpoint)->required();
  orb->add_option("--out-dir", oa.out_dir)->required();
  orb->add_option("--frames", oa.frames);
  orb->add_option("--elevation", oa.elevation, "Degrees above the xy plane");
  orb->add_option("--radius", oa.radius);
  orb->add_option("--samples", oa.samples);
  orb->add_option("--seed", seed);

  EvalArgs ea;
  auto* evl = app.add_subcommand("eval", "Per-view and mean PSNR against a dataset split");
  evl->add_option("--data", ea.data)->required();
  evl->add_option("--checkpoint", ea.checkpoint);
  evl->add_option("--predictions", ea.predictions, "Directory of images named like the dataset frames");
  evl->add_option("--split", ea.split)->check(CLI::IsMember({"train", "test", "all"}));
  evl->add_option("--samples", ea.samples);
  evl->add_flag("--baseline", ea.baseline, "Also report the mean-training-image baseline");
  evl->add_option("--seed", seed);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    err << error_line("usage", e.what()) << '\n';
    return 2;
  }

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif
  try {
    if (synth->parsed()) {
      sa.options.seed = seed;
      run_synth(sa, out);
    } else if (trn->parsed()) {
      ta.config.seed = seed;
      // Per-backend defaults for whatever was not given explicitly: raw grid
      // values want a much larger step than network weights.
      const bool voxel = ta.backend == "voxel";
      if (!trn->count("--lr")) ta.config.adam.lr = voxel ? 0.1 : 2e-3;
      if (!trn->count("--lr-final")) ta.config.lr_final = voxel ? 0.01 : 1e-4;
      if (!trn->count("--iterations")) ta.config.iterations = voxel ? 500 : 2000;
      if (!trn->count("--rays")) ta.config.rays_per_batch = voxel ? 1024 : 512;
      run_train(ta, out);
    } else if (ren->parsed()) {
      run_render(ra, out);
    } else if (orb->parsed()) {
      run_orbit(oa, out);
    } else if (evl->parsed()) {
      run_eval(ea, out);
    }
  } catch (const UsageError& e) {
    err << error_line("usage", e.what()) << '\n';
    return 2;
  } catch (const InputError& e) {
    err << error_line("input", e.what()) << '\n';
    return 1;
  } catch (const NumericError& e) {
    err << error_line("numeric", e.what()) << '\n';
    return 1;
  } catch (const TrainingError& e) {
    err << error_line("training", e.what()) << '\n';
    return 1;
  } catch (const FormatError& e) {
    err << error_line("format", e.what()) << '\n';
    return 1;
  } catch (const IoError& e) {
    err << error_line("io", e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << error_line("internal", e.what()) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace rf::cli
