// gymcam command-line front end.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "gymcam/pipeline.hpp"

namespace fs = std::filesystem;
using gymcam::io::json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
};

gymcam::io::PipelineConfig resolve_config(const Globals& g) {
  return gymcam::io::resolve_config(g.config, g.seed);
}

void emit(const Globals& g, const json& j) {
  if (g.out.empty()) std::cout << j.dump(2) << '\n';
  else gymcam::io::write_json_file(g.out, j);
}

std::vector<gymcam::MotionTrajectory> accepted_or_fail(const gymcam::IngestResult& in, const std::string& path) {
  for (const auto& e : in.parse_errors) std::cerr << path << ": " << e.message << '\n';
  for (const auto& r : in.rejected) std::cerr << path << ": line " << r.line << " (" << r.id << "): " << r.reason << '\n';
  if (in.accepted.empty()) throw gymcam::ValidationError("no valid trajectories in '" + path + "'");
  return in.accepted;
}

int cmd_synth(const Globals& g, const std::string& preset_flag, std::optional<int> n_flag, bool no_walkers) {
  auto cfg = resolve_config(g);
  if (!preset_flag.empty()) cfg.synth.preset = preset_flag;
  if (n_flag) cfg.synth.n_per_class = *n_flag;
  if (no_walkers) cfg.synth.walkers = false;
  gymcam::io::validate_config(cfg);
  if (g.out.empty()) throw gymcam::ValidationError("synth needs --out <directory>");
  const fs::path dir = g.out;
  fs::create_directories(dir);

  std::vector<gymcam::MotionTrajectory> trajectories;
  std::vector<gymcam::TruthRecord> truth;
  const auto& p = cfg.synth.preset;
  if (p == "scene") {
    auto scene = gymcam::synth::generate_scene(gymcam::synth::default_scene_spec(cfg.seed, cfg.synth.walkers));
    trajectories = std::move(scene.trajectories);
    truth = std::move(scene.truth);
    gymcam::io::write_json_file(dir / "boxes.json", gymcam::io::boxes_to_json(scene.boxes));
  } else {
    gymcam::synth::CorpusSpec spec;
    if (p == "training") spec = gymcam::synth::training_corpus_spec();
    else if (p == "detection") spec = gymcam::synth::detection_corpus_spec();
    else if (p == "recognition") spec = gymcam::synth::recognition_corpus_spec();
    else if (p == "reps") spec = gymcam::synth::rep_corpus_spec();
    else throw gymcam::ValidationError("unknown synth preset '" + p + "'");
    const auto corpus = gymcam::synth::generate_corpus(spec, cfg.synth.n_per_class, cfg.seed);
    for (const auto& it : corpus.items) trajectories.push_back(it.sample.trajectory);
    truth = gymcam::synth::corpus_truth(corpus);
  }
  {
    auto out = gymcam::io::open_output(dir / "trajectories.jsonl");
    gymcam::io::write_trajectories(out, trajectories);
  }
  {
    auto out = gymcam::io::open_output(dir / "truth.jsonl");
    gymcam::io::write_truth(out, truth);
  }
  std::cerr << "wrote " << trajectories.size() << " trajectories to " << dir.string() << '\n';
  return 0;
}

int cmd_features(const Globals& g, const std::string& input) {
  const auto cfg = resolve_config(g);
  const auto in = gymcam::io::read_trajectories(input, cfg.trajectory);
  const auto dc = cfg.detect_config();
  std::ostringstream buf;
  for (const auto& t : accepted_or_fail(in, input)) {
    const auto prepared = gymcam::prepare_trajectory(t, dc);
    for (const auto& w : prepared.windows) {
      json j = {{"id", t.id},
                {"start_frame", w.window.window_start_frame},
                {"end_frame", w.window.end_frame()},
                {"status", w.status == gymcam::WindowStatus::kOk ? "ok" : "degenerate"},
                {"features", w.features.values}};
      buf << j.dump() << '\n';
    }
  }
  if (g.out.empty()) std::cout << buf.str();
  else gymcam::io::open_output(g.out) << buf.str();
  return 0;
}

int cmd_train(const Globals& g, const std::string& input, const std::string& truth_path,
              const std::vector<std::string>& models) {
  const auto cfg = resolve_config(g);
  if (g.out.empty()) throw gymcam::ValidationError("train needs --out <bundle.json>");
  const auto in = gymcam::io::read_trajectories(input, cfg.trajectory);
  const auto truth = gymcam::io::read_truth(truth_path);
  const auto corpus = gymcam::join_truth(accepted_or_fail(in, input), truth, cfg.seed);
  gymcam::ModelSelection which;
  if (!models.empty()) {
    which = {false, false, false, true};
    for (const auto& m : models) {
      if (m == "detector") which.detector = true;
      else if (m == "regressor") which.regressor = true;
      else if (m == "recognizer") which.recognizer = true;
      else throw gymcam::ValidationError("unknown model '" + m + "'");
    }
  }
  const auto outcome = gymcam::train_models(corpus, cfg, which);
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
  gymcam::io::write_json_file(g.out, gymcam::io::bundle_to_json(outcome.bundle));
  std::cout << outcome.metrics.dump(2) << '\n';
  return 0;
}

int cmd_run(const Globals& g, const std::string& input, const std::string& boxes_path, const std::string& models,
            const std::string& truth_path) {
  const auto cfg = resolve_config(g);
  if (boxes_path.empty()) throw gymcam::ValidationError("run needs a box configuration (--boxes)");
  const auto boxes = gymcam::io::read_boxes(boxes_path);
  const auto bundle = gymcam::io::read_bundle(models);
  gymcam::io::require_complete(bundle);
  const auto in = gymcam::io::read_trajectories(input, cfg.trajectory);
  auto report = gymcam::run_pipeline(in, boxes, bundle, cfg);
  if (!truth_path.empty())
    report["metrics"] = gymcam::metrics_to_json(gymcam::evaluate(report, gymcam::io::read_truth(truth_path)));
  const auto problems = gymcam::validate_report(report);
  if (!problems.empty()) throw gymcam::InternalError("report failed validation: " + problems.front());
  emit(g, report);
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& report_path, const std::string& truth_path) {
  auto report = gymcam::io::read_json_file(report_path);
  const auto problems = gymcam::validate_report(report);
  if (!problems.empty()) throw gymcam::ValidationError("invalid report: " + problems.front());
  const auto metrics = gymcam::metrics_to_json(gymcam::evaluate(report, gymcam::io::read_truth(truth_path)));
  report["metrics"] = metrics;
  if (!g.out.empty()) gymcam::io::write_json_file(g.out, report);
  std::cout << metrics.dump(2) << '\n';
  return 0;
}

int cmd_gradcheck(const Globals& g, double tolerance) {
  const auto cfg = resolve_config(g);
  std::mt19937_64 rng(cfg.seed);
  json results = json::object();
  bool ok = true;
  struct Arch {
    const char* name;
    gymcam::nn::Task task;
    int inputs;
    int outputs;
  };
  const Arch archs[] = {{"detector", gymcam::nn::Task::kBinary, static_cast<int>(gymcam::kFeatureCount), 1},
                        {"regressor", gymcam::nn::Task::kRegression, static_cast<int>(gymcam::kFrequencyFeatureCount), 1},
                        {"recognizer", gymcam::nn::Task::kMulticlass, static_cast<int>(gymcam::kQuantizedSize), 5}};
  for (const auto& a : archs) {
    std::vector<int> sizes{a.inputs};
    sizes.insert(sizes.end(), cfg.train.hidden.begin(), cfg.train.hidden.end());
    sizes.push_back(a.outputs);
    const auto model = gymcam::nn::make_model(a.task, sizes, rng);
    const auto batch = gymcam::nn::random_batch(model, 8, rng);
    const double err = gymcam::nn::gradient_check(model, batch, cfg.train.l2);
    results[a.name] = {{"layer_sizes", sizes}, {"max_relative_error", err}, {"pass", err <= tolerance}};
    ok = ok && err <= tolerance;
  }
  emit(g, results);
  return ok ? 0 : static_cast<int>(gymcam::ExitCode::kRuntime);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gymcam: exercise detection, clustering and analytics from keypoint trajectories"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config file)");
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output path");

  std::string preset;
  std::optional<int> n_per_class;
  bool no_walkers = false;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus or scene");
  synth->add_option("--preset", preset, "training | detection | recognition | reps | scene");
  synth->add_option("--n", n_per_class, "samples per class");
  synth->add_flag("--no-walkers", no_walkers, "scene without distractor walkers");

  std::string trajectories;
  auto* features = app.add_subcommand("features", "print per-window feature vectors");
  features->add_option("--trajectories", trajectories, "trajectory JSON lines")->required();

  std::string truth;
  std::vector<std::string> which;
  auto* train = app.add_subcommand("train", "train the model bundle");
  train->add_option("--trajectories", trajectories, "trajectory JSON lines")->required();
  train->add_option("--truth", truth, "ground truth JSON lines")->required();
  train->add_option("--models", which, "subset of detector, regressor, recognizer")->delimiter(',');

  std::string boxes, models;
  auto* run = app.add_subcommand("run", "run the pipeline and write the analytics report");
  run->add_option("--trajectories", trajectories, "trajectory JSON lines")->required();
  run->add_option("--boxes", boxes, "box configuration JSON");
  run->add_option("--models", models, "model bundle JSON")->required();
  run->add_option("--truth", truth, "optional ground truth; adds a metrics block");

  std::string report;
  auto* evaluate = app.add_subcommand("evaluate", "score a report against ground truth");
  evaluate->add_option("--report", report, "analytics report JSON")->required();
  evaluate->add_option("--truth", truth, "ground truth JSON lines")->required();

  double tolerance = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the three architectures");
  gradcheck->add_option("--tolerance", tolerance, "maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(gymcam::ExitCode::kValidation);
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*synth) return cmd_synth(g, preset, n_per_class, no_walkers);
    if (*features) return cmd_features(g, trajectories);
    if (*train) return cmd_train(g, trajectories, truth, which);
    if (*run) return cmd_run(g, trajectories, boxes, models, truth);
    if (*evaluate) return cmd_evaluate(g, report, truth);
    if (*gradcheck) return cmd_gradcheck(g, tolerance);
  } catch (const gymcam::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return static_cast<int>(gymcam::ExitCode::kInternal);
  }
  return static_cast<int>(gymcam::ExitCode::kInternal);
}
