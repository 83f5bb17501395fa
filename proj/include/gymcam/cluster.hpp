#pragma once

// Grouping of detected exercise segments into per-exercise clusters. Segments
// are first bucketed by station box, then linked when they overlap in time,
// share a dominant frequency and move in phase. Each connected component of
// that graph is one cluster, summarised by an averaged, smoothed trajectory.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gymcam/core.hpp"
#include "gymcam/dsp.hpp"
#include "gymcam/features.hpp"

namespace gymcam {

struct ClusterConfig {
  double phase_threshold_deg = 15.0;
  double min_overlap_s = 2.0;
  double combine_window_s = 1.0;
};

// The positions a segment covers, cut from its source trajectory.
struct SegmentPath {
  std::string segment_id;
  double fps = 30.0;
  Frame start_frame = 0;
  std::vector<Point2> points;

  Frame end_frame() const { return start_frame + static_cast<Frame>(points.size()) - 1; }
  Point2 centroid() const {
    Point2 c{};
    for (const auto& p : points) c = c + p;
    return (1.0 / static_cast<double>(points.size())) * c;
  }
};

inline SegmentPath segment_path(const ExerciseSegment& seg, const MotionTrajectory& source) {
  if (seg.source_id != source.id) throw ValidationError("segment '" + seg.id + "' does not belong to '" + source.id + "'");
  const Frame lo = std::max(seg.start_frame, source.start_frame);
  const Frame hi = std::min(seg.end_frame, source.end_frame());
  if (hi < lo) throw ValidationError("segment '" + seg.id + "' lies outside its trajectory");
  SegmentPath out{seg.id, source.fps, lo, {}};
  for (Frame f = lo; f <= hi; ++f) out.points.push_back(source.at_frame(f));
  return out;
}

// ---------------------------------------------------------------------------
// Box assignment

struct BoxAssignment {
  std::string box_id;
  std::vector<std::size_t> members;  // indices into the segment list
};

// Each segment goes to the box containing its centroid, else to the box whose
// centre is nearest; ties resolve to the lowest box id. Result follows box id
// order and omits empty boxes.
inline std::vector<BoxAssignment> assign_to_boxes(std::span<const SegmentPath> segments,
                                                  std::span<const BoundingBox> boxes) {
  if (boxes.empty()) throw ValidationError("no station boxes configured");
  std::vector<std::size_t> order(boxes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return id_less(boxes[a].id, boxes[b].id); });

  std::vector<std::vector<std::size_t>> members(boxes.size());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Point2 c = segments[s].centroid();
    std::optional<std::size_t> pick;
    for (auto b : order) {
      if (boxes[b].contains(c)) {
        pick = b;
        break;
      }
    }
    if (!pick) {
      double best = std::numeric_limits<double>::infinity();
      for (auto b : order) {
        const double d = distance(c, boxes[b].center());
        if (d < best) {
          best = d;
          pick = b;
        }
      }
    }
    members[*pick].push_back(s);
  }
  std::vector<BoxAssignment> out;
  for (auto b : order)
    if (!members[b].empty()) out.push_back({boxes[b].id, std::move(members[b])});
  return out;
}

// ---------------------------------------------------------------------------
// Phase

namespace detail {

inline std::vector<Point2> slice_frames(const SegmentPath& s, Frame lo, Frame hi) {
  return {s.points.begin() + (lo - s.start_frame), s.points.begin() + (hi - s.start_frame + 1)};
}

}  // namespace detail

// Phase offset in degrees (0..180) between two segments moving at a common
// frequency, from the lag maximising their normalised cross-correlation.
// Returns nothing when the pair is not comparable: frequencies differ by more
// than a spectral bin, the overlap is shorter than max(min_overlap_s, one
// period), or either overlap is motionless.
inline std::optional<double> phase_difference(const SegmentPath& a, const SegmentPath& b, const ClusterConfig& cfg = {}) {
  if (a.points.size() < 8 || b.points.size() < 8) return std::nullopt;
  const double fps = a.fps;
  const auto pa = principal_signal(a.points, fps);
  const auto pb = principal_signal(b.points, fps);
  if (pa.degenerate || pb.degenerate) return std::nullopt;
  const auto fa = dsp::dominant_frequency(pa.signal);
  const auto fb = dsp::dominant_frequency(pb.signal);
  if (!fa.periodic || !fb.periodic) return std::nullopt;
  const double bin = std::max(fps / static_cast<double>(a.points.size()), fps / static_cast<double>(b.points.size()));
  if (std::abs(fa.hz - fb.hz) > bin + 1e-9) return std::nullopt;
  const double freq = 0.5 * (dsp::refined_frequency(pa.signal, fa) + dsp::refined_frequency(pb.signal, fb));

  const Frame lo = std::max(a.start_frame, b.start_frame);
  const Frame hi = std::min(a.end_frame(), b.end_frame());
  if (hi < lo) return std::nullopt;
  const auto overlap = static_cast<std::size_t>(hi - lo + 1);
  const double period = fps / freq;
  if (static_cast<double>(overlap) < std::max(cfg.min_overlap_s * fps, period)) return std::nullopt;

  const auto oa = principal_signal(detail::slice_frames(a, lo, hi), fps);
  auto ob = principal_signal(detail::slice_frames(b, lo, hi), fps);
  if (oa.degenerate || ob.degenerate) return std::nullopt;
  if (oa.axis.x * ob.axis.x + oa.axis.y * ob.axis.y < 0.0)
    for (auto& v : ob.signal.samples) v = -v;
  const auto& xa = oa.signal.samples;
  const auto& xb = ob.signal.samples;

  // Any phase is reached within half a period; one extra lag each side keeps
  // the argmax interior for interpolation.
  const auto half = static_cast<long>(std::min(std::ceil(period / 2.0), std::floor(static_cast<double>(overlap) / 2.0)));
  const auto max_lag = std::min(half + 1, static_cast<long>(overlap) / 2);
  const auto n = static_cast<long>(overlap);
  std::vector<double> ncc(static_cast<std::size_t>(2 * max_lag + 1), -2.0);
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (long k = std::max(0L, -lag); k < std::min(n, n - lag); ++k) {
      const double u = xa[static_cast<std::size_t>(k)];
      const double v = xb[static_cast<std::size_t>(k + lag)];
      ab += u * v;
      aa += u * u;
      bb += v * v;
    }
    if (aa > 0.0 && bb > 0.0) ncc[static_cast<std::size_t>(lag + max_lag)] = ab / std::sqrt(aa * bb);
  }
  std::size_t best = static_cast<std::size_t>(max_lag);
  for (std::size_t i = 0; i < ncc.size(); ++i) {
    const auto lag_i = std::labs(static_cast<long>(i) - max_lag);
    if (lag_i > half) continue;
    const auto lag_b = std::labs(static_cast<long>(best) - max_lag);
    if (ncc[i] > ncc[best] || (ncc[i] == ncc[best] && lag_i < lag_b)) best = i;
  }
  if (ncc[best] <= -2.0) return std::nullopt;
  const double lag = static_cast<double>(static_cast<long>(best) - max_lag) + ::gymcam::detail::parabolic_offset(ncc, best);
  double phase = std::fmod(std::abs(360.0 * lag * freq / fps), 360.0);
  if (phase > 180.0) phase = 360.0 - phase;
  return phase;
}

// ---------------------------------------------------------------------------
// Graph

// Symmetric 0/1 matrix with a unit diagonal.
struct PhaseAdjacency {
  std::size_t n = 0;
  std::vector<unsigned char> matrix;

  explicit PhaseAdjacency(std::size_t size = 0) : n(size), matrix(size * size, 0) {
    for (std::size_t i = 0; i < n; ++i) matrix[i * n + i] = 1;
  }
  bool edge(std::size_t i, std::size_t j) const { return matrix[i * n + j] != 0; }
  void link(std::size_t i, std::size_t j) {
    matrix[i * n + j] = 1;
    matrix[j * n + i] = 1;
  }
};

inline PhaseAdjacency build_adjacency(std::span<const SegmentPath> segments, const ClusterConfig& cfg = {}) {
  PhaseAdjacency adj(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i)
    for (std::size_t j = i + 1; j < segments.size(); ++j)
      if (auto ph = phase_difference(segments[i], segments[j], cfg); ph && *ph <= cfg.phase_threshold_deg)
        adj.link(i, j);
  return adj;
}

// Maximal connected vertex sets, members ascending, components ordered by
// their smallest member.
inline std::vector<std::vector<std::size_t>> connected_components(const PhaseAdjacency& adj) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<char> seen(adj.n, 0);
  for (std::size_t root = 0; root < adj.n; ++root) {
    if (seen[root]) continue;
    std::vector<std::size_t> comp;
    std::vector<std::size_t> stack{root};
    seen[root] = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (std::size_t u = 0; u < adj.n; ++u) {
        if (!seen[u] && (adj.edge(v, u) || adj.edge(u, v))) {
          seen[u] = 1;
          stack.push_back(u);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Combined trajectory

// Frame-by-frame mean over the members alive at each frame, gaps bridged
// linearly, then both axes Hann-smoothed.
inline CombinedTrajectory combine_cluster(std::span<const SegmentPath> members, double window_s = 1.0) {
  if (members.empty()) throw ValidationError("cannot combine an empty cluster");
  CombinedTrajectory out;
  out.fps = members.front().fps;
  Frame lo = members.front().start_frame, hi = members.front().end_frame();
  for (const auto& m : members) {
    lo = std::min(lo, m.start_frame);
    hi = std::max(hi, m.end_frame());
  }
  const auto len = static_cast<std::size_t>(hi - lo + 1);
  std::vector<Point2> sum(len);
  std::vector<int> alive(len, 0);
  for (const auto& m : members) {
    for (std::size_t k = 0; k < m.points.size(); ++k) {
      const auto at = static_cast<std::size_t>(m.start_frame - lo) + k;
      sum[at] = sum[at] + m.points[k];
      ++alive[at];
    }
  }
  std::vector<double> xs(len), ys(len);
  std::size_t last = len;  // last covered index
  for (std::size_t i = 0; i < len; ++i) {
    if (alive[i] == 0) continue;
    const Point2 p = (1.0 / alive[i]) * sum[i];
    xs[i] = p.x;
    ys[i] = p.y;
    if (last != len && i > last + 1) {
      for (std::size_t g = last + 1; g < i; ++g) {
        const double a = static_cast<double>(g - last) / static_cast<double>(i - last);
        xs[g] = xs[last] + a * (xs[i] - xs[last]);
        ys[g] = ys[last] + a * (ys[i] - ys[last]);
        ++out.gap_frames;
      }
    }
    last = i;
  }
  const auto sx = dsp::hann_smooth(xs, out.fps, window_s);
  const auto sy = dsp::hann_smooth(ys, out.fps, window_s);
  out.start_frame = lo;
  out.edge_frames = static_cast<std::size_t>(std::max<long>(1, std::lround(window_s * out.fps))) / 2;
  out.points.resize(len);
  for (std::size_t i = 0; i < len; ++i) out.points[i] = {sx[i], sy[i]};
  return out;
}

// Full clustering stage: box bucketing, phase graph per box, components,
// combined trajectories. Cluster ids are "<box>/<k>".
inline std::vector<ExerciseCluster> cluster_segments(std::span<const SegmentPath> segments,
                                                     std::span<const BoundingBox> boxes, const ClusterConfig& cfg = {}) {
  std::vector<ExerciseCluster> out;
  for (const auto& box : assign_to_boxes(segments, boxes)) {
    std::vector<SegmentPath> local;
    for (auto idx : box.members) local.push_back(segments[idx]);
    const auto comps = connected_components(build_adjacency(local, cfg));
    for (std::size_t c = 0; c < comps.size(); ++c) {
      std::vector<SegmentPath> members;
      ExerciseCluster cl;
      cl.id = box.box_id + "/" + std::to_string(c);
      cl.box_id = box.box_id;
      for (auto m : comps[c]) {
        members.push_back(local[m]);
        cl.member_segments.push_back(local[m].segment_id);
      }
      cl.combined = combine_cluster(members, cfg.combine_window_s);
      cl.start_frame = cl.combined.start_frame;
      cl.end_frame = cl.combined.end_frame();
      out.push_back(std::move(cl));
    }
  }
  return out;
}

}  // namespace gymcam
