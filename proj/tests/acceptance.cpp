// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <sys/wait.h>
#include <string>

#include "gymcam/pipeline.hpp"
#include "oracles.hpp"

using namespace gymcam;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

// 1 -------------------------------------------------------------------------
Outcome gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  const std::pair<nn::Task, std::vector<int>> archs[] = {{nn::Task::kBinary, {27, 100, 1}},
                                                         {nn::Task::kRegression, {12, 100, 1}},
                                                         {nn::Task::kMulticlass, {300, 100, 5}}};
  for (const auto& [task, sizes] : archs) {
    const auto m = nn::make_model(task, sizes, rng);
    const auto b = nn::random_batch(m, 8, rng);
    worst = std::max(worst, nn::gradient_check(m, b, 1e-4));
  }
  const double dt = seconds_since(t0);
  return {worst <= 1e-4 && dt < 30.0, "max relative error " + fmt(worst) + ", " + fmt(dt, 3) + " s"};
}

// 2 -------------------------------------------------------------------------
Outcome dominant_frequency() {
  std::string detail;
  bool pass = true;
  for (double f : {0.5, 1.0, 1.5, 2.0}) {
    int hits = 0;
    for (int run = 0; run < 100; ++run) {
      synth::SynthSpec s;
      s.kind = synth::Kind::kSinusoidX;
      s.frequency_hz = f;
      s.duration_s = 5.0;
      s.amplitude_px = 50.0;
      s.noise_std_px = 0.05 * s.amplitude_px;
      s.phase_deg = 3.6 * run;
      s.seed = static_cast<std::uint64_t>(1000 * f) + static_cast<std::uint64_t>(run);
      const auto t = synth::generate(s).trajectory;
      dsp::Signal x{s.fps, {}};
      for (const auto& p : t.points) x.samples.push_back(p.x);
      hits += std::abs(dsp::dominant_frequency(x).hz - f) <= 0.2 + 1e-9;
    }
    pass = pass && hits >= 99;
    detail += (detail.empty() ? "" : ", ") + fmt(f, 2) + " Hz " + std::to_string(hits) + "/100";
  }
  return {pass, detail};
}

// 3 -------------------------------------------------------------------------
Outcome detection() {
  const auto corpus = labeled_corpus(synth::generate_corpus(synth::detection_corpus_spec(), 200, 3003));
  io::PipelineConfig cfg;
  cfg.seed = 3;
  const auto t0 = Clock::now();
  const auto out = train_models(corpus, cfg, {true, false, false, true});
  const double dt = seconds_since(t0);
  const auto& m = out.metrics.at("detector");
  const double acc = m.at("accuracy").get<double>();
  const double fpr = m.at("false_positive_rate").get<double>(), fnr = m.at("false_negative_rate").get<double>();
  return {acc >= 0.95 && fpr <= fnr && dt < 120.0,
          "held-out accuracy " + fmt(acc) + ", FPR " + fmt(fpr) + ", FNR " + fmt(fnr) + ", " +
              std::to_string(m.at("test_windows").get<int>()) + " windows, training " + fmt(dt, 3) + " s"};
}

// 4 -------------------------------------------------------------------------
Outcome reps() {
  const auto corpus = labeled_corpus(synth::generate_corpus(synth::rep_corpus_spec(), 250, 4004));
  io::PipelineConfig cfg;
  cfg.seed = 4;
  const auto out = train_models(corpus, cfg, {false, true, false, true});
  const auto& m = out.metrics.at("regressor");
  const auto n = m.at("test_examples").get<int>();
  const double mae = m.at("mae").get<double>();
  return {n == 100 && mae <= 1.7, std::to_string(n) + " held-out cases, MAE " + fmt(mae) + " reps, std " +
                                      fmt(m.at("std").get<double>())};
}

// 5 -------------------------------------------------------------------------
Outcome clustering() {
  std::mt19937_64 rng(5005);
  int graph_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(1 + rng() % 20);
    const double density = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
    PhaseAdjacency a(n);
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (std::bernoulli_distribution(density)(rng)) {
          a.link(i, j);
          reach[i][j] = reach[j][i] = true;
        }
    std::vector<std::size_t> labels(n);
    for (const auto& comp : connected_components(a))
      for (auto v : comp) labels[v] = comp.front();
    graph_ok += labels == oracle::closure_labels(reach);
  }

  const std::vector<BoundingBox> box{{"gym", 0.0, 0.0, 640.0, 480.0}};
  int split_ok = 0, merge_ok = 0;
  for (int seed = 0; seed < 50; ++seed) {
    std::mt19937_64 r(static_cast<std::uint64_t>(seed) + 1);
    const double f = std::uniform_real_distribution<double>(0.5, 1.5)(r);
    for (double offset : {90.0, 5.0}) {
      synth::SceneSpec spec;
      spec.seed = static_cast<std::uint64_t>(seed);
      spec.boxes = box;
      spec.exercises = {{"gym", synth::Kind::kSinusoidY, f, 0.0, 40.0, {280.0, 240.0}, 0, 8.0, 3, 12.0},
                        {"gym", synth::Kind::kSinusoidY, f, offset, 40.0, {360.0, 240.0}, 0, 8.0, 3, 12.0}};
      const auto scene = synth::generate_scene(spec);
      std::vector<SegmentPath> paths;
      for (const auto& t : scene.trajectories) paths.push_back({t.id, t.fps, t.start_frame, t.points});
      const auto n = cluster_segments(paths, box).size();
      if (offset > 45.0) split_ok += n == 2;
      else merge_ok += n == 1;
    }
  }
  return {graph_ok == 1000 && split_ok == 50 && merge_ok == 50,
          "closure oracle " + std::to_string(graph_ok) + "/1000, 90 deg split " + std::to_string(split_ok) +
              "/50, 5 deg merged " + std::to_string(merge_ok) + "/50"};
}

// 6 -------------------------------------------------------------------------
Outcome recognition() {
  const auto corpus = labeled_corpus(synth::generate_corpus(synth::recognition_corpus_spec(), 100, 6006));
  io::PipelineConfig cfg;
  cfg.seed = 6;
  const auto out = train_models(corpus, cfg, {false, false, true, true});
  const auto& m = out.metrics.at("recognizer");
  const double acc = m.at("accuracy").get<double>();
  const auto n = m.at("test_examples").get<int>();
  return {n == 100 && acc >= 0.9, std::to_string(n) + " held-out items, accuracy " + fmt(acc)};
}

// 7 -------------------------------------------------------------------------
Outcome dsp_invariants() {
  std::mt19937_64 rng(7007);
  double hann_dev = 0.0, ac_lo = 0.0, ac_hi = 0.0;
  int finite = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(8 + rng() % 330);
    const double c = std::uniform_real_distribution<double>(-1e4, 1e4)(rng);
    const std::vector<double> flat(n, c);
    for (double v : dsp::hann_smooth(flat, 30.0, 1.0)) hann_dev = std::max(hann_dev, std::abs(v - c));

    // Fuzzed window: random mixtures of tones, steps, spikes, walks and flats.
    std::vector<Point2> pts(n);
    const int style = static_cast<int>(rng() % 5);
    std::normal_distribution<double> g(0.0, std::pow(10.0, std::uniform_real_distribution<double>(-6, 4)(rng)));
    Point2 walk{};
    for (std::size_t k = 0; k < n; ++k) {
      switch (style) {
        case 0: pts[k] = {g(rng), g(rng)}; break;
        case 1: pts[k] = {std::sin(0.3 * static_cast<double>(k)) * 1e3 + g(rng), 0.0}; break;
        case 2: pts[k] = {k < n / 2 ? 0.0 : 1e5, 1.0}; break;
        case 3: walk = walk + Point2{g(rng), g(rng)}; pts[k] = walk; break;
        default: pts[k] = k % 97 == 0 ? Point2{1e6, -1e6} : Point2{3.0, 3.0}; break;
      }
    }
    dsp::Signal sig;
    for (const auto& p : pts) sig.samples.push_back(p.x + 0.5 * p.y);
    const auto ac = dsp::autocorrelation(sig);
    for (double v : ac.r.samples) {
      ac_lo = std::min(ac_lo, v);
      ac_hi = std::max(ac_hi, v);
    }
    const auto fx = extract_features(TrajectoryWindow{"fuzz", 0, static_cast<int>(n), 30.0, pts});
    bool ok = fx.features.values.size() == kFeatureCount;
    for (double v : fx.features.values) ok = ok && std::isfinite(v);
    finite += ok;
  }
  const bool pass = hann_dev < 1e-9 && ac_lo >= -1.0 - 1e-12 && ac_hi <= 1.0 + 1e-9 && finite == 1000;
  return {pass, "Hann max deviation " + fmt(hann_dev, 3) + ", autocorrelation range [" + fmt(ac_lo) + ", " +
                    fmt(ac_hi, 12) + "], finite feature vectors " + std::to_string(finite) + "/1000"};
}

// 8 -------------------------------------------------------------------------
int sh(const std::string& cmd) {
  const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

bool end_to_end(const fs::path& dir, std::string& why) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = std::string("\"") + GYMCAM_CLI + "\" --config \"" + GYMCAM_SAMPLES + "/config.json\"";
  const std::string d = "\"" + dir.string() + "\"";
  const std::string steps[] = {
      cli + " --out " + d + "/corpus synth --preset training",
      cli + " --out " + d + "/bundle.json train --trajectories " + d + "/corpus/trajectories.jsonl --truth " + d +
          "/corpus/truth.jsonl",
      cli + " --out " + d + "/scene synth --preset scene",
      cli + " --out " + d + "/report.json run --trajectories " + d + "/scene/trajectories.jsonl --boxes " + d +
          "/scene/boxes.json --models " + d + "/bundle.json",
      cli + " --out " + d + "/evaluated.json evaluate --report " + d + "/report.json --truth " + d +
          "/scene/truth.jsonl",
  };
  for (const auto& s : steps) {
    const int rc = sh(s);
    if (rc != 0) {
      why = "exit " + std::to_string(rc) + " from: " + s;
      return false;
    }
  }
  return true;
}

Outcome determinism() {
  const auto t0 = Clock::now();
  const fs::path root = GYMCAM_WORK;
  std::string why;
  if (!end_to_end(root / "run1", why) || !end_to_end(root / "run2", why)) return {false, why};
  const double dt = seconds_since(t0);
  const auto a = slurp(root / "run1/evaluated.json"), b = slurp(root / "run2/evaluated.json");
  const bool same = !a.empty() && a == b && slurp(root / "run1/bundle.json") == slurp(root / "run2/bundle.json");
  const auto problems = validate_report(json::parse(a, nullptr, false));
  std::string schema = "in-process checks only";
  bool schema_ok = problems.empty();
  if (sh("python3 -c \"import jsonschema\"") == 0) {
    schema_ok = schema_ok && sh(std::string("python3 \"") + GYMCAM_SCHEMA_CHECK + "\" \"" + GYMCAM_SCHEMA + "\" \"" +
                                (root / "run1/evaluated.json").string() + "\"") == 0;
    schema = "JSON Schema";
  }
  const double per_run = dt / 2.0;
  return {same && schema_ok && per_run < 300.0,
          std::string(same ? "byte-identical" : "outputs differ") + ", " + (schema_ok ? "valid" : "invalid") + " (" +
              schema + (problems.empty() ? "" : ": " + problems.front()) + "), " + fmt(per_run, 3) +
              " s per run"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"gradient check", gradients},
      {"dominant frequency", dominant_frequency},
      {"detection", detection},
      {"rep counting", reps},
      {"clustering", clustering},
      {"recognition", recognition},
      {"dsp invariants", dsp_invariants},
      {"end-to-end determinism", determinism},
  };
  int failed = 0, k = 0;
  for (const auto& [name, run] : criteria) {
    ++k;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k << ": " << name << " - " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
