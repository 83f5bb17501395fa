#pragma once

// Per-window motion descriptor used by the exercise detector and, in part, by
// the repetition regressor. Windows are trimmed of stationary jitter,
// normalised by their largest translation, and summarised by 27 features.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gymcam/core.hpp"
#include "gymcam/dsp.hpp"

namespace gymcam {

// Canonical feature order. Serialised vectors follow this order exactly.
enum class Feature : std::size_t {
  kZeroCrossingsX,
  kZeroCrossingsY,
  kCrossingIntervalVarX,
  kCrossingIntervalVarY,
  kDominantFrequency,
  kAcAtDominantLag,
  kAcMaxPeak,
  kFrequencyViaAc,
  kAcPeaks,
  kProminentPeaks,
  kWeakPeaks,
  kAcFirstPeakAfterZeroCrossing,
  kRms,
  kSpanOverall,
  kSpanX,
  kSpanY,
  kDisplacementC0,
  kDisplacementC1,
  kDisplacementC2,
  kDisplacementXC0,
  kDisplacementXC1,
  kDisplacementXC2,
  kDisplacementYC0,
  kDisplacementYC1,
  kDisplacementYC2,
  kDecaySlope,
  kDecayIntercept,
};

inline constexpr std::size_t kFeatureCount = 27;
// Features 1-12: the frequency-based block.
inline constexpr std::size_t kFrequencyFeatureCount = 12;
inline constexpr int kFeatureVersion = 1;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "zc_x",          "zc_y",          "zc_interval_var_x", "zc_interval_var_y",
    "dom_freq_hz",   "ac_at_dominant_lag", "ac_max_peak",  "freq_via_ac_hz",
    "n_ac_peaks",    "n_prominent_peaks", "n_weak_peaks",  "ac_first_peak_after_zc",
    "rms",           "span_overall",  "span_x",            "span_y",
    "disp_c0",       "disp_c1",       "disp_c2",           "disp_x_c0",
    "disp_x_c1",     "disp_x_c2",     "disp_y_c0",         "disp_y_c1",
    "disp_y_c2",     "decay_slope",   "decay_intercept",
};

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  std::span<const double> frequency_block() const { return std::span<const double>(values).first(kFrequencyFeatureCount); }
};

struct FeatureConfig {
  double prominence_ratio = 0.25;
  // Autocorrelation lags examined, as a fraction of the window length.
  double max_lag_fraction = 2.0 / 3.0;
};

// ---------------------------------------------------------------------------
// Trimming

// A trajectory with stationary samples removed. Frames of the retained
// samples are kept alongside them.
struct TrimmedTrajectory {
  std::string id;
  double fps = 30.0;
  std::vector<Frame> frames;
  std::vector<Point2> points;
  Frame original_end_frame = 0;
  bool stationary = false;
};

// Drops every sample closer than min_move_px to the previously retained one.
// The first sample is always kept; fewer than two survivors marks the
// trajectory as stationary.
inline TrimmedTrajectory trim_stationary(const MotionTrajectory& t, double min_move_px = 4.0) {
  if (!(min_move_px >= 0.0)) throw ValidationError("min_move_px must be >= 0");
  TrimmedTrajectory out{t.id, t.fps, {}, {}, t.end_frame(), false};
  for (std::size_t k = 0; k < t.points.size(); ++k) {
    if (!out.points.empty() && distance(t.points[k], out.points.back()) < min_move_px) continue;
    out.frames.push_back(t.start_frame + static_cast<Frame>(k));
    out.points.push_back(t.points[k]);
  }
  out.stationary = out.points.size() < 2;
  return out;
}

// Puts a trimmed trajectory back on the uniform frame grid: linear
// interpolation between retained samples, last retained position held to the
// original end.
inline MotionTrajectory regrid(const TrimmedTrajectory& tr) {
  MotionTrajectory out;
  out.id = tr.id;
  out.fps = tr.fps;
  if (tr.points.empty()) return out;
  out.start_frame = tr.frames.front();
  out.points.reserve(static_cast<std::size_t>(tr.original_end_frame - out.start_frame + 1));
  for (std::size_t i = 0; i + 1 < tr.points.size(); ++i) {
    const double span = static_cast<double>(tr.frames[i + 1] - tr.frames[i]);
    for (Frame f = tr.frames[i]; f < tr.frames[i + 1]; ++f) {
      const double a = static_cast<double>(f - tr.frames[i]) / span;
      out.points.push_back(tr.points[i] + a * (tr.points[i + 1] - tr.points[i]));
    }
  }
  for (Frame f = tr.frames.back(); f <= tr.original_end_frame; ++f) out.points.push_back(tr.points.back());
  return out;
}

// ---------------------------------------------------------------------------
// Normalisation

// Translates the first point to the origin and scales by the largest
// distance from it, so the normalised window's maximum displacement is 1.
inline TrajectoryWindow normalize_window(const TrajectoryWindow& w) {
  if (w.points.empty()) throw DegenerateError("cannot normalise an empty window");
  const Point2 origin = w.points.front();
  double reach = 0.0;
  for (const auto& p : w.points) reach = std::max(reach, distance(p, origin));
  const double tol = 1e-12 * std::max({1.0, std::abs(origin.x), std::abs(origin.y)});
  if (reach <= tol) throw DegenerateError("window '" + w.source_id + "' has no translation");
  TrajectoryWindow out = w;
  for (auto& p : out.points) p = (1.0 / reach) * (p - origin);
  return out;
}

inline TrajectoryWindow whole_window(const MotionTrajectory& t) {
  return {t.id, t.start_frame, static_cast<int>(t.points.size()), t.fps, t.points};
}

inline TrajectoryWindow whole_window(const CombinedTrajectory& c, std::string id = "combined") {
  return {std::move(id), c.start_frame, static_cast<int>(c.points.size()), c.fps, c.points};
}

// ---------------------------------------------------------------------------
// Principal signal

struct PrincipalSignal {
  dsp::Signal signal;
  Point2 axis{1.0, 0.0};
  bool degenerate = false;
};

// Projection of the centred positions onto their first principal axis.
inline PrincipalSignal principal_signal(std::span<const Point2> pts, double fps) {
  PrincipalSignal out;
  out.signal.fps = fps;
  const auto n = static_cast<double>(pts.size());
  if (pts.empty()) {
    out.degenerate = true;
    return out;
  }
  Point2 c{};
  for (const auto& p : pts) c = c + p;
  c = (1.0 / n) * c;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    const Point2 d = p - c;
    sxx += d.x * d.x;
    syy += d.y * d.y;
    sxy += d.x * d.y;
  }
  double scale = 1.0;
  for (const auto& p : pts) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  if (sxx + syy <= n * 1e-24 * scale * scale) {
    out.degenerate = true;
    out.signal.samples.assign(pts.size(), 0.0);
    return out;
  }
  const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  out.axis = {std::cos(theta), std::sin(theta)};
  out.signal.samples.reserve(pts.size());
  for (const auto& p : pts) {
    const Point2 d = p - c;
    out.signal.samples.push_back(d.x * out.axis.x + d.y * out.axis.y);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature extraction

struct FeatureResult {
  FeatureVector features;
  // Zero-variance principal axis: frequency features are zeroed.
  bool degenerate = false;
  bool periodic = false;
};

namespace detail {

inline double crossing_interval_variance(const dsp::ZeroCrossings& zc, double fps) {
  if (zc.indices.size() < 3) return 0.0;
  std::vector<double> gaps;
  for (std::size_t i = 1; i < zc.indices.size(); ++i)
    gaps.push_back(static_cast<double>(zc.indices[i] - zc.indices[i - 1]) / fps);
  const double m = dsp::mean(gaps);
  double v = 0.0;
  for (double g : gaps) v += (g - m) * (g - m);
  return v / static_cast<double>(gaps.size());
}

// Autocorrelation over lags 0..max_lag, each lag normalised by the energy of
// the two overlapping pieces, so a pure tone peaks near 1 at every period.
inline std::vector<double> feature_autocorrelation(const dsp::Signal& s, double max_lag_fraction) {
  const auto x = dsp::remove_mean(s.samples);
  const std::size_t n = x.size();
  const auto max_lag = std::min(n - 1, static_cast<std::size_t>(max_lag_fraction * static_cast<double>(n)));
  const double tol = dsp::zero_tolerance(x);
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k + lag < n; ++k) {
      sxy += x[k] * x[k + lag];
      sxx += x[k] * x[k];
      syy += x[k + lag] * x[k + lag];
    }
    const double denom = std::sqrt(sxx * syy);
    r[lag] = denom > tol * tol * static_cast<double>(n - lag) ? std::clamp(sxy / denom, -1.0, 1.0) : 0.0;
  }
  r[0] = 1.0;
  return r;
}

// Vertex offset of the parabola through (i-1, i, i+1), in (-0.5, 0.5).
inline double parabolic_offset(std::span<const double> s, std::size_t i) {
  if (i == 0 || i + 1 >= s.size()) return 0.0;
  const double a = s[i - 1], b = s[i], c = s[i + 1];
  const double denom = a - 2.0 * b + c;
  if (denom >= 0.0) return 0.0;
  return std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
}

inline std::vector<double> displacement_fit(std::span<const double> ts, std::span<const double> d) {
  return dsp::polyfit(ts, d, 2).coefficients;
}

}  // namespace detail

inline FeatureResult extract_features(const TrajectoryWindow& w, const FeatureConfig& cfg = {}) {
  const std::size_t n = w.points.size();
  if (n < 8) throw InsufficientDataError("feature extraction needs at least 8 samples");
  const double fps = w.fps;
  FeatureResult out;
  auto& f = out.features;

  std::vector<double> xs(n), ys(n), ts(n);
  for (std::size_t k = 0; k < n; ++k) {
    xs[k] = w.points[k].x;
    ys[k] = w.points[k].y;
    ts[k] = static_cast<double>(k) / fps;
  }

  const auto zcx = dsp::zero_crossings(xs);
  const auto zcy = dsp::zero_crossings(ys);
  f[Feature::kZeroCrossingsX] = zcx.count;
  f[Feature::kZeroCrossingsY] = zcy.count;
  f[Feature::kCrossingIntervalVarX] = detail::crossing_interval_variance(zcx, fps);
  f[Feature::kCrossingIntervalVarY] = detail::crossing_interval_variance(zcy, fps);

  const auto principal = principal_signal(w.points, fps);
  out.degenerate = principal.degenerate || dsp::is_flat(principal.signal.samples);
  const auto& p = principal.signal.samples;

  if (!out.degenerate) {
    const auto dom = dsp::dominant_frequency(principal.signal);
    out.periodic = dom.periodic;
    f[Feature::kDominantFrequency] = dom.hz;

    const auto r = detail::feature_autocorrelation(principal.signal, cfg.max_lag_fraction);
    if (dom.periodic) {
      const auto lag = static_cast<std::size_t>(std::lround(fps / dom.hz));
      if (lag < r.size()) f[Feature::kAcAtDominantLag] = r[lag];
    }
    const auto peaks = dsp::find_peaks(r, cfg.prominence_ratio, dsp::PeakReference::kAdjacentTroughs);
    const auto rivals = dsp::find_peaks(r, cfg.prominence_ratio, dsp::PeakReference::kNeighborPeaks);
    f[Feature::kAcPeaks] = static_cast<double>(peaks.all.size());
    f[Feature::kProminentPeaks] = static_cast<double>(peaks.prominent.size());
    f[Feature::kWeakPeaks] = static_cast<double>(rivals.weak.size());
    if (!peaks.all.empty()) {
      const double best = *std::max_element(peaks.all.heights.begin(), peaks.all.heights.end());
      f[Feature::kAcMaxPeak] = best;
      // Period = first peak reaching 90% of the best one (guards against
      // locking onto a multiple of the period).
      for (std::size_t i = 0; i < peaks.all.size(); ++i) {
        if (peaks.all.heights[i] >= 0.9 * best && best > 0.0) {
          const std::size_t at = peaks.all.indices[i];
          const double lag = static_cast<double>(at) + detail::parabolic_offset(r, at);
          f[Feature::kFrequencyViaAc] = fps / lag;
          break;
        }
      }
    }
    const auto first_neg = std::find_if(r.begin(), r.end(), [](double v) { return v <= 0.0; });
    if (first_neg != r.end()) {
      const auto zc_lag = static_cast<std::size_t>(first_neg - r.begin());
      for (std::size_t i = 0; i < peaks.all.size(); ++i) {
        if (peaks.all.indices[i] > zc_lag) {
          f[Feature::kAcFirstPeakAfterZeroCrossing] = peaks.all.heights[i];
          break;
        }
      }
    }
  }

  double ss = 0.0;
  for (double v : p) ss += v * v;
  f[Feature::kRms] = std::sqrt(ss / static_cast<double>(n));

  double span = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) span = std::max(span, distance(w.points[i], w.points[j]));
  f[Feature::kSpanOverall] = span;
  const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
  const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
  f[Feature::kSpanX] = *xmax - *xmin;
  f[Feature::kSpanY] = *ymax - *ymin;

  // Net displacement from the window's first point, overall and per axis.
  std::vector<double> d(n), dx(n), dy(n);
  for (std::size_t k = 0; k < n; ++k) {
    d[k] = distance(w.points[k], w.points[0]);
    dx[k] = std::abs(xs[k] - xs[0]);
    dy[k] = std::abs(ys[k] - ys[0]);
  }
  const auto cd = detail::displacement_fit(ts, d);
  const auto cx = detail::displacement_fit(ts, dx);
  const auto cy = detail::displacement_fit(ts, dy);
  for (std::size_t i = 0; i < 3; ++i) {
    f.values[static_cast<std::size_t>(Feature::kDisplacementC0) + i] = cd[i];
    f.values[static_cast<std::size_t>(Feature::kDisplacementXC0) + i] = cx[i];
    f.values[static_cast<std::size_t>(Feature::kDisplacementYC0) + i] = cy[i];
  }

  // Decay: envelope of |principal| from per-period maxima, interpolated to
  // every sample, then a straight-line fit.
  std::vector<double> env(n);
  std::size_t period = 0;
  if (out.periodic) period = static_cast<std::size_t>(std::lround(fps / f[Feature::kDominantFrequency]));
  if (period >= 1 && n / period >= 2) {
    std::vector<double> et, ev;
    for (std::size_t start = 0; start < n; start += period) {
      const std::size_t stop = std::min(n, start + period);
      std::size_t best = start;
      for (std::size_t k = start; k < stop; ++k)
        if (std::abs(p[k]) > std::abs(p[best])) best = k;
      et.push_back(ts[best]);
      ev.push_back(std::abs(p[best]));
    }
    std::size_t seg = 0;
    for (std::size_t k = 0; k < n; ++k) {
      while (seg + 2 < et.size() && ts[k] > et[seg + 1]) ++seg;
      const double t0 = et[seg], t1 = et[seg + 1];
      const double a = t1 > t0 ? std::clamp((ts[k] - t0) / (t1 - t0), 0.0, 1.0) : 0.0;
      env[k] = ev[seg] + a * (ev[seg + 1] - ev[seg]);
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) env[k] = std::abs(p[k]);
  }
  const auto decay = dsp::polyfit(ts, env, 1).coefficients;
  f[Feature::kDecaySlope] = decay[1];
  f[Feature::kDecayIntercept] = decay[0];
  return out;
}

}  // namespace gymcam
