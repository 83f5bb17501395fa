#pragma once

// Slow, direct reference implementations. None of these call into the
// library; tests compare library output against them.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

inline std::vector<double> centred(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  std::vector<double> out;
  for (double v : x) out.push_back(v - m);
  return out;
}

// |X_k| for k = 0..n/2 via the textbook O(n^2) sum of complex exponentials.
inline std::vector<double> dft_magnitudes(const std::vector<double>& x) {
  const auto n = x.size();
  std::vector<double> out;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n));
    out.push_back(std::abs(acc));
  }
  return out;
}

// Non-DC argmax of the mean-removed spectrum, as a frequency.
inline double dominant_hz(const std::vector<double>& x, double fps) {
  const auto mags = dft_magnitudes(centred(x));
  std::size_t best = 1;
  for (std::size_t k = 2; k < mags.size(); ++k)
    if (mags[k] > mags[best]) best = k;
  return static_cast<double>(best) * fps / static_cast<double>(x.size());
}

// Biased autocorrelation normalised by lag-0 energy.
inline std::vector<double> autocorrelation(const std::vector<double>& x) {
  const auto c = centred(x);
  const auto n = c.size();
  double e0 = 0.0;
  for (double v : c) e0 += v * v;
  std::vector<double> r(n, 0.0);
  for (std::size_t lag = 0; lag < n; ++lag) {
    double s = 0.0;
    for (std::size_t k = lag; k < n; ++k) s += c[k] * c[k - lag];
    r[lag] = s / e0;
  }
  return r;
}

// Sign changes of the mean-removed signal. A sample counts as zero when its
// magnitude is below tol; zeros inherit the last non-zero sign.
inline int zero_crossings(const std::vector<double>& x, double tol) {
  const auto c = centred(x);
  int count = 0;
  int last = 0;
  for (double v : c) {
    int s = std::abs(v) <= tol ? 0 : (v > 0 ? 1 : -1);
    if (s == 0) continue;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

// Component label per node from the transitive closure (Floyd-Warshall over
// booleans); label = smallest reachable node.
inline std::vector<std::size_t> closure_labels(std::vector<std::vector<bool>> reach) {
  const auto n = reach.size();
  for (std::size_t i = 0; i < n; ++i) reach[i][i] = true;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  std::vector<std::size_t> label(n);
  for (std::size_t i = 0; i < n; ++i) {
    label[i] = i;
    for (std::size_t j = 0; j < n; ++j)
      if (reach[i][j] && reach[j][i]) label[i] = std::min(label[i], j);
  }
  return label;
}

// Centred Hann convolution written from the definition: taps
// w_i = sin^2(pi (i + 1) / (L + 1)), each output divided by the sum of the
// taps that land inside the signal.
inline std::vector<double> hann_smooth(const std::vector<double>& x, int L) {
  std::vector<double> w(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) w[static_cast<std::size_t>(i)] = std::pow(std::sin(std::numbers::pi * (i + 1) / (L + 1)), 2);
  const int half = (L - 1) / 2;
  const int n = static_cast<int>(x.size());
  std::vector<double> out(x.size());
  for (int k = 0; k < n; ++k) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < L; ++i) {
      const int at = k + i - half;
      if (at < 0 || at >= n) continue;
      num += w[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(at)];
      den += w[static_cast<std::size_t>(i)];
    }
    out[static_cast<std::size_t>(k)] = num / den;
  }
  return out;
}

// Least squares through the normal equations with Gaussian elimination.
inline std::vector<double> polyfit(const std::vector<double>& t, const std::vector<double>& y, int degree) {
  const int m = degree + 1;
  std::vector<std::vector<double>> a(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m + 1), 0.0));
  for (std::size_t k = 0; k < t.size(); ++k)
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += std::pow(t[k], i + j);
      a[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)] += std::pow(t[k], i) * y[k];
    }
  for (int c = 0; c < m; ++c) {
    int piv = c;
    for (int r = c + 1; r < m; ++r)
      if (std::abs(a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) > std::abs(a[static_cast<std::size_t>(piv)][static_cast<std::size_t>(c)])) piv = r;
    std::swap(a[static_cast<std::size_t>(c)], a[static_cast<std::size_t>(piv)]);
    for (int r = 0; r < m; ++r) {
      if (r == c) continue;
      const double f = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] / a[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
      for (int j = c; j <= m; ++j) a[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] -= f * a[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
    }
  }
  std::vector<double> out(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)] / a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  return out;
}

// Per-frame mean over live members, keyed by absolute frame.
struct Member {
  long start;
  std::vector<std::pair<double, double>> points;
};

inline std::map<long, std::pair<double, double>> piecewise_average(const std::vector<Member>& members) {
  std::map<long, std::pair<double, double>> sum;
  std::map<long, int> count;
  for (const auto& m : members)
    for (std::size_t k = 0; k < m.points.size(); ++k) {
      auto& s = sum[m.start + static_cast<long>(k)];
      s.first += m.points[k].first;
      s.second += m.points[k].second;
      ++count[m.start + static_cast<long>(k)];
    }
  for (auto& [f, s] : sum) {
    s.first /= count[f];
    s.second /= count[f];
  }
  return sum;
}

// Number of windows by enumeration: every start that fits.
inline int window_count(int len, int win, int stride) {
  int n = 0;
  for (int s = 0; s + win <= len; s += stride) ++n;
  return n;
}

}  // namespace oracle
