#pragma once

// Synthetic keypoint trajectories with analytic ground truth. Periodic kinds
// stand in for exercises (repetitions = frequency x duration); walks stand in
// for non-exercise motion.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gymcam/core.hpp"

namespace gymcam::synth {

enum class Kind { kSinusoidX, kSinusoidY, kCircle, kFigureEight, kBounceDrift, kRandomWalk, kLinearWalk };

inline constexpr std::array<Kind, 7> kAllKinds = {Kind::kSinusoidX,   Kind::kSinusoidY,   Kind::kCircle,
                                                  Kind::kFigureEight, Kind::kBounceDrift, Kind::kRandomWalk,
                                                  Kind::kLinearWalk};

inline std::string to_string(Kind k) {
  switch (k) {
    case Kind::kSinusoidX: return "sinusoid_x";
    case Kind::kSinusoidY: return "sinusoid_y";
    case Kind::kCircle: return "circle";
    case Kind::kFigureEight: return "figure_eight";
    case Kind::kBounceDrift: return "bounce_drift";
    case Kind::kRandomWalk: return "random_walk";
    case Kind::kLinearWalk: return "linear_walk";
  }
  throw InternalError("unknown synthetic kind");
}

inline Kind kind_from_string(const std::string& s) {
  for (auto k : kAllKinds)
    if (to_string(k) == s) return k;
  throw ValidationError("unknown synthetic kind '" + s + "'");
}

inline bool is_periodic(Kind k) { return k != Kind::kRandomWalk && k != Kind::kLinearWalk; }

struct SynthSpec {
  Kind kind = Kind::kSinusoidX;
  std::string id = "synth";
  double frequency_hz = 1.0;
  double amplitude_px = 50.0;
  double duration_s = 8.0;
  double fps = 30.0;
  double phase_deg = 0.0;
  double noise_std_px = 0.0;
  // Drift speed for bounce_drift and linear_walk; heading of a linear walk is
  // phase_deg.
  double drift_velocity_px_s = 20.0;
  Point2 center{320.0, 240.0};
  Frame start_frame = 0;
  std::uint64_t seed = 0;
};

struct SynthTruth {
  bool is_exercise = false;
  double reps = 0.0;
  std::string label;
  double phase_deg = 0.0;
};

struct Sample {
  MotionTrajectory trajectory;
  SynthTruth truth;
};

inline Sample generate(const SynthSpec& s) {
  if (!(s.fps > 0.0) || !(s.duration_s > 0.0)) throw ValidationError("synthetic spec needs fps > 0 and duration > 0");
  if (s.noise_std_px < 0.0 || s.amplitude_px < 0.0) throw ValidationError("synthetic amplitudes must be >= 0");
  const auto n = static_cast<std::size_t>(std::max<long>(1, std::lround(s.duration_s * s.fps)));
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Sample out;
  out.trajectory.id = s.id;
  out.trajectory.fps = s.fps;
  out.trajectory.start_frame = s.start_frame;
  out.trajectory.points.reserve(n);
  const double w = 2.0 * std::numbers::pi * s.frequency_hz;
  const double phi = s.phase_deg * std::numbers::pi / 180.0;
  const double a = s.amplitude_px;
  Point2 walker = s.center;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / s.fps;
    const double th = w * t + phi;
    Point2 p = s.center;
    switch (s.kind) {
      case Kind::kSinusoidX: p.x += a * std::sin(th); break;
      case Kind::kSinusoidY: p.y += a * std::sin(th); break;
      case Kind::kCircle:
        p.x += a * std::cos(th);
        p.y += a * std::sin(th);
        break;
      case Kind::kFigureEight:
        p.x += a * std::sin(th);
        p.y += 0.5 * a * std::sin(2.0 * th);
        break;
      case Kind::kBounceDrift:
        p.x += s.drift_velocity_px_s * t;
        p.y += a * std::sin(th);
        break;
      case Kind::kRandomWalk:
        if (k > 0) walker = walker + Point2{0.1 * a * gauss(rng), 0.1 * a * gauss(rng)};
        p = walker;
        break;
      case Kind::kLinearWalk:
        p.x += s.drift_velocity_px_s * t * std::cos(phi);
        p.y += s.drift_velocity_px_s * t * std::sin(phi);
        break;
    }
    if (s.noise_std_px > 0.0) p = p + Point2{s.noise_std_px * gauss(rng), s.noise_std_px * gauss(rng)};
    out.trajectory.points.push_back(p);
  }
  out.truth.is_exercise = is_periodic(s.kind);
  out.truth.reps = out.truth.is_exercise ? s.frequency_hz * static_cast<double>(n) / s.fps : 0.0;
  out.truth.label = to_string(s.kind);
  out.truth.phase_deg = s.phase_deg;
  return out;
}

// ---------------------------------------------------------------------------
// Corpora

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct ParameterRanges {
  Range frequency_hz{0.4, 2.0};
  Range amplitude_px{20.0, 80.0};
  Range duration_s{5.0, 11.0};
  // Noise standard deviation as a fraction of amplitude.
  Range noise_fraction{0.0, 0.1};
  Range drift_px_s{20.0, 60.0};
  Range center_x{100.0, 540.0};
  Range center_y{100.0, 380.0};
  double fps = 30.0;
};

// One labelled class; each sample draws a kind uniformly from `kinds`, with
// parameters from the class ranges when given, else the corpus ranges.
struct ClassSpec {
  std::string label;
  std::vector<Kind> kinds;
  std::optional<ParameterRanges> ranges;
};

struct CorpusSpec {
  std::vector<ClassSpec> classes;
  ParameterRanges ranges;
  double test_fraction = 0.2;
};

struct CorpusItem {
  Sample sample;
  std::size_t class_index = 0;
  bool test = false;
};

struct Corpus {
  std::vector<std::string> class_labels;
  std::vector<CorpusItem> items;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline SynthSpec draw_spec(Kind kind, const ParameterRanges& r, std::mt19937_64& rng) {
  auto u = [&](Range range) { return std::uniform_real_distribution<double>(range.lo, range.hi)(rng); };
  SynthSpec s;
  s.kind = kind;
  s.fps = r.fps;
  s.frequency_hz = u(r.frequency_hz);
  s.amplitude_px = u(r.amplitude_px);
  s.duration_s = u(r.duration_s);
  s.noise_std_px = u(r.noise_fraction) * s.amplitude_px;
  s.drift_velocity_px_s = u(r.drift_px_s);
  s.phase_deg = u({0.0, 360.0});
  s.center = {u(r.center_x), u(r.center_y)};
  s.seed = rng();
  return s;
}

// n_per_class samples per class with a stratified, seed-determined test split.
inline Corpus generate_corpus(const CorpusSpec& spec, int n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw ValidationError("corpus needs at least one sample per class");
  if (spec.classes.empty()) throw ValidationError("corpus spec has no classes");
  Corpus out;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const auto& cls = spec.classes[c];
    if (cls.kinds.empty()) throw ValidationError("class '" + cls.label + "' has no kinds");
    out.class_labels.push_back(cls.label);
    std::mt19937_64 split_rng(mix_seed(seed, c, 0xC0FFEE));
    std::vector<int> order(static_cast<std::size_t>(n_per_class));
    for (int i = 0; i < n_per_class; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), split_rng);
    const auto n_test = static_cast<std::size_t>(std::lround(spec.test_fraction * n_per_class));
    std::vector<char> is_test(static_cast<std::size_t>(n_per_class), 0);
    for (std::size_t i = 0; i < n_test; ++i) is_test[static_cast<std::size_t>(order[i])] = 1;
    for (int i = 0; i < n_per_class; ++i) {
      std::mt19937_64 rng(mix_seed(seed, c + 1, static_cast<std::uint64_t>(i) + 1));
      const Kind kind = cls.kinds[std::uniform_int_distribution<std::size_t>(0, cls.kinds.size() - 1)(rng)];
      SynthSpec s = draw_spec(kind, cls.ranges ? *cls.ranges : spec.ranges, rng);
      s.id = cls.label + "-" + std::to_string(i);
      out.items.push_back({generate(s), c, is_test[static_cast<std::size_t>(i)] != 0});
    }
  }
  return out;
}

// Per-trajectory truth records for a corpus, carrying the split.
inline std::vector<TruthRecord> corpus_truth(const Corpus& c) {
  std::vector<TruthRecord> out;
  for (const auto& it : c.items) {
    const auto& t = it.sample.trajectory;
    out.push_back({t.id, "", c.class_labels[it.class_index], t.start_frame, t.end_frame(), it.sample.truth.reps,
                   it.test ? "test" : "train"});
  }
  return out;
}

inline const std::vector<Kind>& exercise_kinds() {
  static const std::vector<Kind> k = {Kind::kSinusoidX, Kind::kSinusoidY, Kind::kCircle, Kind::kFigureEight,
                                      Kind::kBounceDrift};
  return k;
}

// Exercise vs. non-exercise.
inline CorpusSpec detection_corpus_spec() {
  CorpusSpec s;
  s.ranges.frequency_hz = {0.6, 2.0};
  ParameterRanges in_place = s.ranges;
  in_place.drift_px_s = {0.0, 10.0};
  s.classes = {{"none", {Kind::kRandomWalk, Kind::kLinearWalk}, std::nullopt},
               {"exercise", exercise_kinds(), in_place}};
  return s;
}

// One class per periodic archetype.
inline CorpusSpec recognition_corpus_spec() {
  CorpusSpec s;
  for (auto k : exercise_kinds()) s.classes.push_back({to_string(k), {k}, std::nullopt});
  s.ranges.frequency_hz = {0.4, 1.0};
  s.ranges.amplitude_px = {30.0, 80.0};
  s.ranges.duration_s = {6.0, 11.0};
  s.ranges.noise_fraction = {0.0, 0.05};
  return s;
}

// Tones for the repetition regressor, half of them noise-free: a clean
// single-axis tone has a perfectly still second axis, which noise never
// produces.
inline CorpusSpec rep_corpus_spec() {
  CorpusSpec s;
  s.ranges.frequency_hz = {0.4, 2.0};
  s.ranges.amplitude_px = {30.0, 80.0};
  s.ranges.duration_s = {5.0, 11.0};
  s.ranges.noise_fraction = {0.0, 0.1};
  ParameterRanges clean = s.ranges;
  clean.noise_fraction = {0.0, 0.0};
  const std::vector<Kind> tones{Kind::kSinusoidX, Kind::kSinusoidY, Kind::kCircle};
  s.classes = {{"tone", tones, std::nullopt}, {"clean_tone", tones, clean}};
  return s;
}

// Mixed training corpus for the full model bundle: every exercise archetype
// (performed in place) plus the two walk kinds, one class per kind.
inline CorpusSpec training_corpus_spec() {
  CorpusSpec s;
  s.ranges.frequency_hz = {0.4, 1.2};
  s.ranges.amplitude_px = {30.0, 80.0};
  s.ranges.duration_s = {6.0, 11.0};
  s.ranges.noise_fraction = {0.0, 0.08};
  ParameterRanges in_place = s.ranges;
  in_place.drift_px_s = {0.0, 10.0};
  for (auto k : exercise_kinds()) s.classes.push_back({to_string(k), {k}, in_place});
  s.classes.push_back({"none", {Kind::kRandomWalk, Kind::kLinearWalk}, std::nullopt});
  return s;
}

// ---------------------------------------------------------------------------
// Scenes: several simultaneous exercises observed by many keypoints.

struct SceneExercise {
  std::string box_id;
  Kind kind = Kind::kSinusoidY;
  double frequency_hz = 1.0;
  double phase_deg = 0.0;
  double amplitude_px = 40.0;
  Point2 center;
  Frame start_frame = 0;
  double duration_s = 10.0;
  int keypoints = 4;
  double keypoint_spread_px = 12.0;
};

struct SceneWalker {
  Kind kind = Kind::kRandomWalk;
  Point2 start;
  Frame start_frame = 0;
  double duration_s = 9.0;
};

struct SceneSpec {
  std::vector<BoundingBox> boxes;
  std::vector<SceneExercise> exercises;
  std::vector<SceneWalker> walkers;
  double fps = 30.0;
  double noise_std_px = 1.0;
  std::uint64_t seed = 0;
};


struct Scene {
  std::vector<BoundingBox> boxes;
  std::vector<MotionTrajectory> trajectories;
  std::vector<TruthRecord> truth;
};

inline Scene generate_scene(const SceneSpec& spec) {
  Scene out;
  out.boxes = spec.boxes;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  for (std::size_t e = 0; e < spec.exercises.size(); ++e) {
    const auto& ex = spec.exercises[e];
    SynthSpec base;
    base.kind = ex.kind;
    base.frequency_hz = ex.frequency_hz;
    base.phase_deg = ex.phase_deg;
    base.duration_s = ex.duration_s;
    base.fps = spec.fps;
    base.noise_std_px = spec.noise_std_px;
    base.start_frame = ex.start_frame;
    SynthTruth truth;
    for (int k = 0; k < ex.keypoints; ++k) {
      SynthSpec s = base;
      s.id = "ex" + std::to_string(e) + "-kp" + std::to_string(k);
      s.amplitude_px = ex.amplitude_px * (1.0 + 0.15 * jitter(rng));
      s.center = ex.center + Point2{ex.keypoint_spread_px * jitter(rng), ex.keypoint_spread_px * jitter(rng)};
      s.seed = mix_seed(spec.seed, e + 1, static_cast<std::uint64_t>(k) + 1);
      auto sample = generate(s);
      truth = sample.truth;
      out.truth.push_back({s.id, "", truth.label, sample.trajectory.start_frame, sample.trajectory.end_frame(),
                           truth.reps, ""});
      out.trajectories.push_back(std::move(sample.trajectory));
    }
    const Frame end = ex.start_frame + static_cast<Frame>(std::lround(ex.duration_s * spec.fps)) - 1;
    out.truth.push_back({"", ex.box_id, to_string(ex.kind), ex.start_frame, end, truth.reps, ""});
  }
  for (std::size_t w = 0; w < spec.walkers.size(); ++w) {
    const auto& wk = spec.walkers[w];
    SynthSpec s;
    s.kind = wk.kind;
    s.id = "walker" + std::to_string(w);
    s.center = wk.start;
    s.duration_s = wk.duration_s;
    s.fps = spec.fps;
    s.amplitude_px = 40.0;
    s.drift_velocity_px_s = 35.0;
    s.phase_deg = 360.0 * (0.5 + 0.5 * jitter(rng));
    s.noise_std_px = spec.noise_std_px;
    s.start_frame = wk.start_frame;
    s.seed = mix_seed(spec.seed, 0xBEEF, w);
    auto sample = generate(s);
    out.truth.push_back({s.id, "", "none", sample.trajectory.start_frame, sample.trajectory.end_frame(), 0.0, ""});
    out.trajectories.push_back(std::move(sample.trajectory));
  }
  return out;
}

// Three exercises in two boxes: box 1 holds two same-tempo exercises a
// quarter cycle apart, box 2 a faster one. Optional walkers cross the scene.
inline SceneSpec default_scene_spec(std::uint64_t seed = 7, bool walkers = true) {
  SceneSpec s;
  s.seed = seed;
  s.boxes = {{"1", 0.0, 0.0, 320.0, 480.0}, {"2", 320.0, 0.0, 640.0, 480.0}};
  SceneExercise a{"1", Kind::kSinusoidY, 0.8, 0.0, 45.0, {100.0, 240.0}, 0, 10.0, 4, 12.0};
  SceneExercise b{"1", Kind::kSinusoidY, 0.8, 90.0, 45.0, {230.0, 240.0}, 15, 10.0, 4, 12.0};
  SceneExercise c{"2", Kind::kCircle, 1.2, 30.0, 35.0, {480.0, 200.0}, 30, 9.0, 4, 12.0};
  s.exercises = {a, b, c};
  if (walkers) {
    s.walkers = {{Kind::kLinearWalk, {60.0, 420.0}, 0, 9.0}, {Kind::kRandomWalk, {500.0, 400.0}, 20, 8.0}};
  }
  return s;
}

}  // namespace gymcam::synth
