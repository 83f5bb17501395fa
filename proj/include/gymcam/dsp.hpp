#pragma once

// Signal-processing primitives: mean removal, magnitude spectrum, dominant
// frequency, autocorrelation, peak classification, zero crossings, Hann
// smoothing and least-squares polynomial fits.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gymcam/error.hpp"

namespace gymcam::dsp {

struct Signal {
  double fps = 30.0;
  std::vector<double> samples;

  std::size_t size() const { return samples.size(); }
};

inline double mean(std::span<const double> s) {
  if (s.empty()) return 0.0;
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

inline std::vector<double> remove_mean(std::span<const double> s) {
  const double m = mean(s);
  std::vector<double> out(s.begin(), s.end());
  for (auto& v : out) v -= m;
  return out;
}

// Magnitude below which a mean-removed sample counts as exactly zero. Scales
// with the raw signal so constant inputs at any offset read as flat.
inline double zero_tolerance(std::span<const double> raw) {
  double peak = 1.0;
  for (double v : raw) peak = std::max(peak, std::abs(v));
  return 1e-12 * peak;
}

inline bool is_flat(std::span<const double> raw) {
  if (raw.empty()) return true;
  const double tol = zero_tolerance(raw);
  const double m = mean(raw);
  return std::all_of(raw.begin(), raw.end(), [&](double v) { return std::abs(v - m) <= tol; });
}

// ---------------------------------------------------------------------------
// Zero crossings

struct ZeroCrossings {
  int count = 0;
  // Index k where sample k has the opposite sign to the last signed sample.
  std::vector<std::size_t> indices;
};

// Counts sign changes of the mean-removed signal. A sample at (numerically)
// zero carries the previous sign forward; leading zeros carry none.
inline ZeroCrossings zero_crossings(std::span<const double> raw) {
  ZeroCrossings out;
  if (raw.empty()) return out;
  const double tol = zero_tolerance(raw);
  const double m = mean(raw);
  int prev = 0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const double v = raw[k] - m;
    int sign = std::abs(v) <= tol ? 0 : (v > 0 ? 1 : -1);
    if (sign == 0) continue;
    if (prev != 0 && sign != prev) out.indices.push_back(k);
    prev = sign;
  }
  out.count = static_cast<int>(out.indices.size());
  return out;
}

inline ZeroCrossings zero_crossings(const Signal& s) { return zero_crossings(std::span<const double>(s.samples)); }

// ---------------------------------------------------------------------------
// Spectrum

struct Spectrum {
  double bin_width_hz = 0.0;
  // Bins 0..n/2; bin 0 is DC.
  std::vector<double> magnitudes;

  double frequency(std::size_t bin) const { return bin_width_hz * static_cast<double>(bin); }
};

// DFT magnitudes of the non-negative frequencies, evaluated per bin with the
// Goertzel recurrence.
inline Spectrum magnitude_spectrum(const Signal& s) {
  const std::size_t n = s.size();
  Spectrum out;
  if (n == 0) return out;
  out.bin_width_hz = s.fps / static_cast<double>(n);
  out.magnitudes.resize(n / 2 + 1);
  for (std::size_t k = 0; k < out.magnitudes.size(); ++k) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    const double c = 2.0 * std::cos(w);
    double s1 = 0.0, s2 = 0.0;
    for (double x : s.samples) {
      const double s0 = x + c * s1 - s2;
      s2 = s1;
      s1 = s0;
    }
    const double power = s1 * s1 + s2 * s2 - c * s1 * s2;
    out.magnitudes[k] = std::sqrt(std::max(power, 0.0));
  }
  return out;
}

struct DominantFrequency {
  double hz = 0.0;
  std::size_t bin = 0;
  double magnitude = 0.0;
  // False when the signal carries no energy outside DC.
  bool periodic = false;
};

// Frequency of the strongest non-DC bin of the mean-removed signal. Lowest bin
// wins ties.
inline DominantFrequency dominant_frequency(const Signal& s) {
  if (s.size() < 8) throw InsufficientDataError("dominant frequency needs at least 8 samples");
  DominantFrequency out;
  if (is_flat(s.samples)) return out;
  const Signal centered{s.fps, remove_mean(s.samples)};
  const Spectrum spec = magnitude_spectrum(centered);
  for (std::size_t k = 1; k < spec.magnitudes.size(); ++k) {
    if (spec.magnitudes[k] > out.magnitude) {
      out.magnitude = spec.magnitudes[k];
      out.bin = k;
    }
  }
  out.periodic = out.bin != 0;
  out.hz = out.periodic ? spec.frequency(out.bin) : 0.0;
  return out;
}

// |DTFT| of x at angular frequency w (radians per sample), via Goertzel.
inline double dtft_magnitude(std::span<const double> x, double w) {
  const double c = 2.0 * std::cos(w);
  double s1 = 0.0, s2 = 0.0;
  for (double v : x) {
    const double s0 = v + c * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  return std::sqrt(std::max(s1 * s1 + s2 * s2 - c * s1 * s2, 0.0));
}

// Sub-bin frequency: the DTFT magnitude peak within one bin of the dominant
// bin, located by a coarse grid then golden-section search.
inline double refined_frequency(const Signal& s, const DominantFrequency& coarse) {
  if (!coarse.periodic) return 0.0;
  const auto x = remove_mean(s.samples);
  const double bin = s.fps / static_cast<double>(x.size());
  auto mag = [&](double hz) { return dtft_magnitude(x, 2.0 * std::numbers::pi * hz / s.fps); };
  const double lo = std::max(0.5 * bin, coarse.hz - bin), hi = std::min(0.5 * s.fps, coarse.hz + bin);
  constexpr int kGrid = 40;
  const double step = (hi - lo) / kGrid;
  double best = coarse.hz, best_mag = mag(coarse.hz);
  for (int i = 0; i <= kGrid; ++i) {
    const double f = lo + step * i;
    if (const double m = mag(f); m > best_mag) {
      best_mag = m;
      best = f;
    }
  }
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::max(lo, best - step), b = std::min(hi, best + step);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double mc = mag(c), md = mag(d);
  for (int it = 0; it < 40; ++it) {
    if (mc > md) {
      b = d;
      d = c;
      md = mc;
      c = b - phi * (b - a);
      mc = mag(c);
    } else {
      a = c;
      c = d;
      mc = md;
      d = a + phi * (b - a);
      md = mag(d);
    }
  }
  const double f = 0.5 * (a + b);
  return mag(f) >= best_mag ? f : best;
}

// ---------------------------------------------------------------------------
// Autocorrelation

struct Autocorrelation {
  Signal r;
  bool degenerate = false;
};

// Biased autocorrelation of the mean-removed signal, normalised so r(0) = 1.
// Lags run 0..n-1. A zero-variance input yields r = [1, 0, 0, ...] flagged
// degenerate.
inline Autocorrelation autocorrelation(const Signal& s) {
  const std::size_t n = s.size();
  if (n < 2) throw InsufficientDataError("autocorrelation needs at least 2 samples");
  Autocorrelation out;
  out.r.fps = s.fps;
  out.r.samples.assign(n, 0.0);
  if (is_flat(s.samples)) {
    out.r.samples[0] = 1.0;
    out.degenerate = true;
    return out;
  }
  const auto x = remove_mean(s.samples);
  double r0 = 0.0;
  for (double v : x) r0 += v * v;
  for (std::size_t lag = 0; lag < n; ++lag) {
    double acc = 0.0;
    for (std::size_t k = 0; k + lag < n; ++k) acc += x[k] * x[k + lag];
    out.r.samples[lag] = acc / r0;
  }
  out.r.samples[0] = 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Peaks

struct PeakSet {
  std::vector<std::size_t> indices;
  std::vector<double> heights;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

// What a peak is compared against when judging prominence.
enum class PeakReference {
  // Adjacent peaks: prominent peaks stand above both neighbouring peaks, weak
  // peaks sit below both. End peaks use their single neighbour; a lone peak
  // is neither.
  kNeighborPeaks,
  // Troughs: a peak is prominent when it rises above the higher of its two
  // bases by the ratio, a base being the lowest sample before the signal
  // climbs above the peak again (or ends). Every other peak is weak.
  kAdjacentTroughs,
};

struct PeakAnalysis {
  PeakSet all;
  PeakSet prominent;
  PeakSet weak;
};

// Strict local maxima of s, split into prominent and weak peaks. Thresholds
// are a fraction of the peak's own (absolute) height.
inline PeakAnalysis find_peaks(std::span<const double> s, double prominence_ratio,
                               PeakReference reference = PeakReference::kNeighborPeaks) {
  if (!(prominence_ratio > 0.0 && prominence_ratio < 1.0))
    throw ValidationError("prominence ratio must lie in (0, 1)");
  PeakAnalysis out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] > s[i - 1] && s[i] > s[i + 1]) {
      out.all.indices.push_back(i);
      out.all.heights.push_back(s[i]);
    }
  }
  const std::size_t m = out.all.size();
  auto push = [](PeakSet& set, std::size_t idx, double h) {
    set.indices.push_back(idx);
    set.heights.push_back(h);
  };
  for (std::size_t p = 0; p < m; ++p) {
    const double h = out.all.heights[p];
    const double margin = prominence_ratio * std::abs(h);
    const std::size_t at = out.all.indices[p];
    if (reference == PeakReference::kNeighborPeaks) {
      if (m < 2) break;
      bool above = true, below = true;
      if (p > 0) {
        const double nb = out.all.heights[p - 1];
        above = above && h - nb >= margin;
        below = below && nb - h >= margin;
      }
      if (p + 1 < m) {
        const double nb = out.all.heights[p + 1];
        above = above && h - nb >= margin;
        below = below && nb - h >= margin;
      }
      if (above) push(out.prominent, at, h);
      else if (below) push(out.weak, at, h);
    } else {
      // Topographic prominence: each base is the lowest point before the
      // signal climbs above h again (or the edge).
      double left = h, right = h;
      for (std::size_t k = at; k-- > 0 && s[k] <= h;) left = std::min(left, s[k]);
      for (std::size_t k = at + 1; k < s.size() && s[k] <= h; ++k) right = std::min(right, s[k]);
      if (h - std::max(left, right) >= margin) push(out.prominent, at, h);
      else push(out.weak, at, h);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hann smoothing

// Unit-sum Hann taper of the given length with non-zero end taps.
inline std::vector<double> hann_kernel(std::size_t length) {
  std::vector<double> w(std::max<std::size_t>(length, 1));
  const double denom = static_cast<double>(w.size() + 1);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double v = std::sin(std::numbers::pi * static_cast<double>(i + 1) / denom);
    w[i] = v * v;
  }
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= sum;
  return w;
}

// Centred convolution with a Hann kernel of round(window_s * fps) taps. Near
// the ends the kernel is renormalised over the samples it actually covers.
inline std::vector<double> hann_smooth(std::span<const double> x, double fps, double window_s) {
  if (!(window_s > 0.0)) throw ValidationError("Hann window must be > 0 s");
  const auto taps = static_cast<std::size_t>(std::max<long>(1, std::lround(window_s * fps)));
  const auto w = hann_kernel(taps);
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const auto half = static_cast<std::ptrdiff_t>((w.size() - 1) / 2);
  std::vector<double> out(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0, mass = 0.0;
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(w.size()); ++j) {
      const std::ptrdiff_t k = i + j - half;
      if (k < 0 || k >= n) continue;
      acc += w[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(k)];
      mass += w[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] = acc / mass;
  }
  return out;
}

inline Signal hann_smooth(const Signal& s, double window_s) {
  return {s.fps, hann_smooth(s.samples, s.fps, window_s)};
}

// ---------------------------------------------------------------------------
// Polynomial fit

struct PolyFit {
  // Lowest order first.
  std::vector<double> coefficients;
  double residual_sum_squares = 0.0;
};

inline PolyFit polyfit(std::span<const double> ts, std::span<const double> vals, int degree) {
  if (degree < 0) throw ValidationError("polynomial degree must be >= 0");
  if (ts.size() != vals.size()) throw ValidationError("polyfit: abscissa and ordinate lengths differ");
  const auto cols = static_cast<Eigen::Index>(degree + 1);
  const auto rows = static_cast<Eigen::Index>(ts.size());
  if (rows < cols) throw InsufficientDataError("polyfit: fewer samples than coefficients");
  Eigen::MatrixXd a(rows, cols);
  Eigen::VectorXd b(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double p = 1.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      a(i, j) = p;
      p *= ts[static_cast<std::size_t>(i)];
    }
    b(i) = vals[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-12);
  if (qr.rank() < cols) throw DegenerateError("polyfit: rank-deficient design (abscissae not distinct)");
  const Eigen::VectorXd c = qr.solve(b);
  PolyFit out;
  out.coefficients.assign(c.data(), c.data() + c.size());
  out.residual_sum_squares = (a * c - b).squaredNorm();
  return out;
}

}  // namespace gymcam::dsp
