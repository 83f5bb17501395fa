#pragma once

// Exercise detection on single keypoint trajectories: per-window
// classification, majority-vote smoothing and merging of positive runs into
// segments.

#include <span>
#include <string>
#include <vector>

#include "gymcam/core.hpp"
#include "gymcam/features.hpp"
#include "gymcam/nn.hpp"

namespace gymcam {

enum class VoteMode { kTiled, kCentered };

struct DetectConfig {
  TrajectoryConfig trajectory;
  FeatureConfig features;
  double min_move_px = 4.0;
  int vote_size = 3;
  VoteMode vote_mode = VoteMode::kTiled;
  double threshold = 0.5;
  // Loss multiplier on non-exercise windows during detector training; values
  // above 1 trade recall for fewer false positives.
  double negative_class_weight = 2.0;
};

// Aggressive periodicity gate applied to positive training windows only.
struct FilterConfig {
  double min_ac_max_peak = 0.5;
  double min_prominent_peaks = 2;
  double max_weak_peaks = 3;
};

inline std::vector<double> classify_windows(const nn::MlpModel& m, std::span<const FeatureVector> windows) {
  if (m.task != nn::Task::kBinary) throw ValidationError("detector must be a binary model");
  if (m.input_size() != static_cast<Eigen::Index>(kFeatureCount))
    throw ValidationError("detector expects " + std::to_string(m.input_size()) + " features, windows carry " +
                          std::to_string(kFeatureCount));
  std::vector<double> out;
  if (windows.empty()) return out;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < windows.size(); ++i)
    for (std::size_t j = 0; j < kFeatureCount; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = windows[i].values[j];
  const Eigen::MatrixXd p = nn::predict_batch(m, x);
  out.assign(p.data(), p.data() + p.size());
  return out;
}

// Majority vote over blocks of k labels. Tiled mode assigns each full block
// its majority and leaves a trailing partial block untouched. Centred mode
// votes over the k labels around each position, shrinking at the ends (a
// tied shrunken window keeps the raw label).
inline std::vector<int> vote_smooth(std::span<const int> labels, int k = 3, VoteMode mode = VoteMode::kTiled) {
  if (k < 1 || k % 2 == 0) throw ValidationError("vote size must be odd and >= 1");
  std::vector<int> out(labels.begin(), labels.end());
  const auto n = labels.size();
  const auto kk = static_cast<std::size_t>(k);
  if (mode == VoteMode::kTiled) {
    for (std::size_t start = 0; start + kk <= n; start += kk) {
      std::size_t pos = 0;
      for (std::size_t i = start; i < start + kk; ++i) pos += labels[i] != 0;
      const int majority = 2 * pos > kk ? 1 : 0;
      for (std::size_t i = start; i < start + kk; ++i) out[i] = majority;
    }
    return out;
  }
  const std::size_t half = kk / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    std::size_t pos = 0;
    for (std::size_t j = lo; j < hi; ++j) pos += labels[j] != 0;
    const std::size_t len = hi - lo;
    if (2 * pos > len) out[i] = 1;
    else if (2 * pos < len) out[i] = 0;
  }
  return out;
}

// Maximal runs of positive labels, each spanning from its first window's
// start to its last window's end. Confidence is the mean probability over the
// run (1.0 when no probabilities are supplied).
inline std::vector<ExerciseSegment> merge_segments(std::span<const int> labels, std::span<const TrajectoryWindow> windows,
                                                   std::span<const double> probabilities = {}) {
  if (labels.size() != windows.size()) throw ValidationError("labels and windows differ in length");
  if (!probabilities.empty() && probabilities.size() != windows.size())
    throw ValidationError("probabilities and windows differ in length");
  std::vector<ExerciseSegment> out;
  std::size_t i = 0;
  while (i < labels.size()) {
    if (labels[i] == 0) {
      ++i;
      continue;
    }
    ExerciseSegment seg;
    seg.source_id = windows[i].source_id;
    seg.start_frame = windows[i].window_start_frame;
    double conf = 0.0;
    while (i < labels.size() && labels[i] != 0) {
      seg.windows.push_back(i);
      conf += probabilities.empty() ? 1.0 : probabilities[i];
      seg.end_frame = windows[i].end_frame();
      ++i;
    }
    seg.label_confidence = conf / static_cast<double>(seg.windows.size());
    seg.id = seg.source_id + "#" + std::to_string(out.size());
    out.push_back(std::move(seg));
  }
  return out;
}

inline bool passes_filter(const FeatureVector& f, const FilterConfig& cfg) {
  return f[Feature::kAcMaxPeak] >= cfg.min_ac_max_peak && f[Feature::kProminentPeaks] >= cfg.min_prominent_peaks &&
         f[Feature::kWeakPeaks] <= cfg.max_weak_peaks;
}

// Keeps only positive training windows that look strongly periodic. Never
// applied when validating or at inference.
inline std::vector<FeatureVector> filter_training_positives(std::span<const FeatureVector> windows,
                                                            const FilterConfig& cfg = {}) {
  std::vector<FeatureVector> out;
  for (const auto& f : windows)
    if (passes_filter(f, cfg)) out.push_back(f);
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory front end shared by training and inference.

enum class WindowStatus { kOk, kDegenerate };

struct WindowFeatures {
  TrajectoryWindow window;  // un-normalised
  FeatureVector features;
  WindowStatus status = WindowStatus::kOk;
};

struct PreparedTrajectory {
  MotionTrajectory gridded;
  bool stationary = false;
  std::vector<WindowFeatures> windows;
};

// Trim stationary jitter, restore the frame grid, cut windows and extract
// features. Windows without translation are kept with zeroed features and a
// degenerate status (they always classify as non-exercise).
inline PreparedTrajectory prepare_trajectory(const MotionTrajectory& t, const DetectConfig& cfg = {}) {
  PreparedTrajectory out;
  const auto trimmed = trim_stationary(t, cfg.min_move_px);
  out.stationary = trimmed.stationary;
  if (out.stationary) return out;
  out.gridded = regrid(trimmed);
  for (auto& w : slide_windows(out.gridded, cfg.trajectory)) {
    WindowFeatures wf;
    try {
      wf.features = extract_features(normalize_window(w), cfg.features).features;
    } catch (const DegenerateError&) {
      wf.status = WindowStatus::kDegenerate;
    }
    wf.window = std::move(w);
    out.windows.push_back(std::move(wf));
  }
  return out;
}

struct Detection {
  std::vector<double> probabilities;
  std::vector<int> raw_labels;
  std::vector<int> labels;  // after vote smoothing
  std::vector<ExerciseSegment> segments;
};

inline Detection detect(const nn::MlpModel& detector, const PreparedTrajectory& prepared, const DetectConfig& cfg = {}) {
  Detection out;
  std::vector<FeatureVector> feats;
  std::vector<TrajectoryWindow> windows;
  for (const auto& w : prepared.windows) {
    feats.push_back(w.features);
    windows.push_back(w.window);
  }
  out.probabilities = classify_windows(detector, feats);
  for (std::size_t i = 0; i < prepared.windows.size(); ++i) {
    if (prepared.windows[i].status != WindowStatus::kOk) out.probabilities[i] = 0.0;
    out.raw_labels.push_back(out.probabilities[i] >= cfg.threshold ? 1 : 0);
  }
  out.labels = vote_smooth(out.raw_labels, cfg.vote_size, cfg.vote_mode);
  out.segments = merge_segments(out.labels, windows, out.probabilities);
  return out;
}

}  // namespace gymcam
