#pragma once

// Per-cluster analytics on combined trajectories: repetition counting from the
// frequency feature block and exercise recognition by a probability vote over
// quantised windows.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gymcam/core.hpp"
#include "gymcam/features.hpp"
#include "gymcam/nn.hpp"

namespace gymcam {

inline constexpr std::size_t kQuantizedSamples = 150;
inline constexpr std::size_t kQuantizedSize = 2 * kQuantizedSamples;

struct AnalyticsConfig {
  TrajectoryConfig trajectory;
  FeatureConfig features;
  // Average the frequency block over sliding windows instead of computing it
  // once over the whole combined trajectory.
  bool windowed_rep_features = false;
  // Exercises with fewer true repetitions are dropped from regressor training.
  double min_training_reps = 5.0;
};

// ---------------------------------------------------------------------------
// Repetition count

// Frequency features (canonical 1-12) of the normalised trajectory, or
// nothing when the trajectory has no usable motion.
inline std::optional<std::vector<double>> rep_features(const TrajectoryWindow& whole, const AnalyticsConfig& cfg = {}) {
  auto block = [&](const TrajectoryWindow& w) -> std::optional<std::vector<double>> {
    if (w.points.size() < 8) return std::nullopt;
    try {
      const auto r = extract_features(normalize_window(w), cfg.features);
      if (r.degenerate) return std::nullopt;
      const auto b = r.features.frequency_block();
      return std::vector<double>(b.begin(), b.end());
    } catch (const DegenerateError&) {
      return std::nullopt;
    }
  };
  if (!cfg.windowed_rep_features) return block(whole);
  MotionTrajectory t{whole.source_id, whole.fps, whole.window_start_frame, whole.points};
  std::vector<double> acc(kFrequencyFeatureCount, 0.0);
  int used = 0;
  for (const auto& w : slide_windows(t, cfg.trajectory)) {
    if (auto b = block(w)) {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += (*b)[i];
      ++used;
    }
  }
  if (used == 0) return block(whole);
  for (auto& v : acc) v /= used;
  return acc;
}

// Edge frames are left out: the renormalised kernel there passes the
// frequencies it nulls in the interior.
inline std::optional<std::vector<double>> rep_features(const CombinedTrajectory& c, const AnalyticsConfig& cfg = {}) {
  auto w = whole_window(c);
  const std::size_t e = c.edge_frames;
  if (e > 0 && w.points.size() >= 4 * e) {
    w.points = std::vector<Point2>(w.points.begin() + static_cast<std::ptrdiff_t>(e),
                                   w.points.end() - static_cast<std::ptrdiff_t>(e));
    w.window_start_frame += static_cast<Frame>(e);
    w.length_frames = static_cast<int>(w.points.size());
  }
  return rep_features(w, cfg);
}

struct RepEstimate {
  bool counted = false;
  double raw = 0.0;
  long rounded = 0;
};

inline RepEstimate count_reps(const nn::MlpModel& regressor, const CombinedTrajectory& c, const AnalyticsConfig& cfg = {}) {
  if (regressor.task != nn::Task::kRegression) throw ValidationError("repetition model must be a regressor");
  RepEstimate out;
  const auto f = rep_features(c, cfg);
  if (!f) return out;
  out.counted = true;
  out.raw = std::max(0.0, nn::predict(regressor, *f).front());
  out.rounded = std::lround(out.raw);
  return out;
}

// ---------------------------------------------------------------------------
// Recognition

// Normalised, mean-centred positions resampled by linear interpolation to a
// fixed number of samples and flattened as x0, y0, x1, y1, ...
inline std::optional<std::vector<double>> quantize_window(const TrajectoryWindow& w,
                                                          std::size_t samples = kQuantizedSamples) {
  if (w.points.size() < 2) return std::nullopt;
  TrajectoryWindow n;
  try {
    n = normalize_window(w);
  } catch (const DegenerateError&) {
    return std::nullopt;
  }
  Point2 c{};
  for (const auto& p : n.points) c = c + p;
  c = (1.0 / static_cast<double>(n.points.size())) * c;
  std::vector<double> out;
  out.reserve(2 * samples);
  const double last = static_cast<double>(n.points.size() - 1);
  for (std::size_t i = 0; i < samples; ++i) {
    const double pos = samples == 1 ? 0.0 : last * static_cast<double>(i) / static_cast<double>(samples - 1);
    const auto k = std::min(static_cast<std::size_t>(pos), n.points.size() - 2);
    const double a = pos - static_cast<double>(k);
    const Point2 p = n.points[k] + a * (n.points[k + 1] - n.points[k]);
    out.push_back(p.x - c.x);
    out.push_back(p.y - c.y);
  }
  return out;
}

// Quantised inputs for every full window of the trajectory; a trajectory
// shorter than one window contributes itself as a single input.
struct QuantizedWindows {
  std::vector<std::vector<double>> inputs;
  bool fallback = false;
};

inline QuantizedWindows quantized_windows(const TrajectoryWindow& whole, const AnalyticsConfig& cfg = {}) {
  QuantizedWindows out;
  MotionTrajectory t{whole.source_id, whole.fps, whole.window_start_frame, whole.points};
  const auto windows = slide_windows(t, cfg.trajectory);
  if (windows.empty()) {
    out.fallback = true;
    if (auto q = quantize_window(whole)) out.inputs.push_back(std::move(*q));
    return out;
  }
  for (const auto& w : windows)
    if (auto q = quantize_window(w)) out.inputs.push_back(std::move(*q));
  return out;
}

struct Recognition {
  bool recognized = false;
  std::size_t label = 0;
  std::string label_name;
  std::vector<double> probabilities;  // sums to 1
  std::size_t windows = 0;
  bool fallback = false;
};

// Label = argmax of the summed per-window class probabilities (lowest index
// on ties); the reported vector is that sum renormalised.
inline Recognition vote(std::span<const std::vector<double>> per_window, std::span<const std::string> labels = {}) {
  Recognition out;
  if (per_window.empty()) return out;
  std::vector<double> sum(per_window.front().size(), 0.0);
  for (const auto& p : per_window)
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += p[c];
  double total = 0.0;
  for (double v : sum) total += v;
  for (auto& v : sum) v /= total;
  out.recognized = true;
  out.label = static_cast<std::size_t>(std::max_element(sum.begin(), sum.end()) - sum.begin());
  out.probabilities = std::move(sum);
  out.windows = per_window.size();
  if (out.label < labels.size()) out.label_name = labels[out.label];
  return out;
}

inline Recognition recognize(const nn::MlpModel& recognizer, const CombinedTrajectory& c, const AnalyticsConfig& cfg = {}) {
  if (recognizer.task != nn::Task::kMulticlass) throw ValidationError("recognition model must be multiclass");
  if (recognizer.input_size() != static_cast<Eigen::Index>(kQuantizedSize))
    throw ValidationError("recognition model expects " + std::to_string(recognizer.input_size()) +
                          " inputs, quantised windows carry " + std::to_string(kQuantizedSize));
  const auto q = quantized_windows(whole_window(c), cfg);
  std::vector<std::vector<double>> probs;
  for (const auto& in : q.inputs) probs.push_back(nn::predict(recognizer, in));
  auto out = vote(probs, recognizer.class_labels);
  out.fallback = q.fallback;
  return out;
}

}  // namespace gymcam
