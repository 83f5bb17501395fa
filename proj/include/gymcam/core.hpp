#pragma once

// Domain model shared by every stage of the pipeline: keypoint trajectories,
// fixed-length windows over them, detected exercise segments, station boxes
// and exercise clusters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gymcam/error.hpp"

namespace gymcam {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double k, Point2 p) { return {k * p.x, k * p.y}; }
inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

using Frame = std::int64_t;

// Tunables of the trajectory front end. Defaults: 11 s keypoint lifespan,
// 5 s windows sliding by 1 s.
struct TrajectoryConfig {
  double max_lifespan_s = 11.0;
  double window_s = 5.0;
  double stride_s = 1.0;
};

// One tracked keypoint: point k was observed at frame start_frame + k.
struct MotionTrajectory {
  std::string id;
  double fps = 30.0;
  Frame start_frame = 0;
  std::vector<Point2> points;

  double duration_s() const { return static_cast<double>(points.size()) / fps; }
  // Inclusive.
  Frame end_frame() const { return start_frame + static_cast<Frame>(points.size()) - 1; }
  bool covers(Frame f) const { return f >= start_frame && f <= end_frame(); }
  const Point2& at_frame(Frame f) const { return points[static_cast<std::size_t>(f - start_frame)]; }
};

struct TrajectoryWindow {
  std::string source_id;
  Frame window_start_frame = 0;
  int length_frames = 0;
  double fps = 30.0;
  std::vector<Point2> points;

  Frame end_frame() const { return window_start_frame + length_frames - 1; }
};

struct ExerciseSegment {
  std::string id;
  std::string source_id;
  Frame start_frame = 0;
  Frame end_frame = 0;  // inclusive
  std::vector<std::size_t> windows;
  double label_confidence = 0.0;

  Frame length_frames() const { return end_frame - start_frame + 1; }
};

struct BoundingBox {
  std::string id;
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  bool contains(Point2 p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
  Point2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
};

struct CombinedTrajectory {
  double fps = 30.0;
  Frame start_frame = 0;
  std::vector<Point2> points;
  // Frames with no live member, filled by linear interpolation.
  std::size_t gap_frames = 0;
  // Frames at each end where the smoothing kernel only partly overlapped.
  std::size_t edge_frames = 0;

  Frame end_frame() const { return start_frame + static_cast<Frame>(points.size()) - 1; }
};

struct ExerciseCluster {
  std::string id;
  std::string box_id;
  std::vector<std::string> member_segments;
  CombinedTrajectory combined;
  Frame start_frame = 0;
  Frame end_frame = 0;
};

// Ground truth for one trajectory (id set) or one exercise occurrence in a
// station box (region set).
struct TruthRecord {
  std::string id;
  std::string region;
  std::optional<std::string> label;  // "none" marks non-exercise motion
  Frame start_frame = 0;
  Frame end_frame = 0;
  std::optional<double> reps;
  std::string split;  // "train", "test" or empty
};

inline int frames_for(double seconds, double fps) {
  return static_cast<int>(std::lround(seconds * fps));
}

// Natural ordering for box/segment identifiers: numeric when both parse as
// integers, lexicographic otherwise.
inline bool id_less(const std::string& a, const std::string& b) {
  auto as_int = [](const std::string& s) -> std::optional<long long> {
    if (s.empty()) return std::nullopt;
    std::size_t pos = 0;
    try {
      long long v = std::stoll(s, &pos);
      if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  };
  auto ia = as_int(a);
  auto ib = as_int(b);
  if (ia && ib) return *ia < *ib;
  return a < b;
}

inline void validate_boxes(std::span<const BoundingBox> boxes) {
  if (boxes.empty()) throw ValidationError("box configuration contains no boxes");
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    if (!(b.x_min < b.x_max) || !(b.y_min < b.y_max))
      throw ValidationError("box '" + b.id + "' has non-positive extent");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& o = boxes[j];
      if (o.id == b.id) throw ValidationError("duplicate box id '" + b.id + "'");
      bool overlap = b.x_min < o.x_max && o.x_min < b.x_max && b.y_min < o.y_max && o.y_min < b.y_max;
      if (overlap) throw ValidationError("boxes '" + o.id + "' and '" + b.id + "' overlap");
    }
  }
}

// ---------------------------------------------------------------------------
// Ingestion

enum class RejectKind { kValidation, kLifespan };

struct IngestRejection {
  std::size_t line = 0;
  std::string id;
  RejectKind kind = RejectKind::kValidation;
  std::string reason;
};

struct IngestParseError {
  std::size_t line = 0;
  std::string message;
};

// Every non-blank input line lands in exactly one of the three lists.
struct IngestResult {
  std::vector<MotionTrajectory> accepted;
  std::vector<IngestRejection> rejected;
  std::vector<IngestParseError> parse_errors;

  std::size_t total() const { return accepted.size() + rejected.size() + parse_errors.size(); }
};

namespace detail {

inline MotionTrajectory parse_trajectory_record(const nlohmann::json& j) {
  if (!j.is_object()) throw nlohmann::json::type_error::create(302, "record is not an object", &j);
  MotionTrajectory t;
  const auto& id = j.at("id");
  t.id = id.is_string() ? id.get<std::string>() : id.dump();
  t.fps = j.at("fps").get<double>();
  t.start_frame = j.contains("start_frame") ? j.at("start_frame").get<Frame>() : 0;
  const auto& pts = j.at("points");
  if (!pts.is_array()) throw nlohmann::json::type_error::create(302, "points is not an array", &pts);
  t.points.reserve(pts.size());
  for (const auto& p : pts) {
    if (!p.is_array() || p.size() != 2)
      throw nlohmann::json::type_error::create(302, "point is not an [x, y] pair", &p);
    t.points.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return t;
}

}  // namespace detail

// Returns the validation failure for t, if any.
inline std::optional<IngestRejection> check_trajectory(const MotionTrajectory& t, const TrajectoryConfig& cfg) {
  auto reject = [&](RejectKind k, std::string why) {
    return IngestRejection{0, t.id, k, std::move(why)};
  };
  if (t.id.empty()) return reject(RejectKind::kValidation, "empty id");
  if (!std::isfinite(t.fps) || t.fps <= 0.0) return reject(RejectKind::kValidation, "fps must be > 0");
  if (t.start_frame < 0) return reject(RejectKind::kValidation, "start_frame must be >= 0");
  if (t.points.empty()) return reject(RejectKind::kValidation, "trajectory has no points");
  for (const auto& p : t.points)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return reject(RejectKind::kValidation, "non-finite coordinate");
  // 1e-9 absorbs representation error of len/fps at the boundary (330 / 30).
  if (t.duration_s() > cfg.max_lifespan_s + 1e-9)
    return reject(RejectKind::kLifespan, "duration " + std::to_string(t.duration_s()) + " s exceeds max lifespan " +
                                             std::to_string(cfg.max_lifespan_s) + " s");
  return std::nullopt;
}

// Reads the JSON-lines trajectory contract. Blank lines are skipped; all other
// lines are accounted for. Input order is preserved among accepted records.
inline IngestResult ingest_trajectories(std::istream& in, const TrajectoryConfig& cfg = {}) {
  IngestResult out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    MotionTrajectory t;
    try {
      t = detail::parse_trajectory_record(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      out.parse_errors.push_back({lineno, "line " + std::to_string(lineno) + ": " + e.what()});
      continue;
    }
    if (auto r = check_trajectory(t, cfg)) {
      r->line = lineno;
      out.rejected.push_back(std::move(*r));
      continue;
    }
    out.accepted.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Windowing

// All full windows of window_s seconds whose starts advance by stride_s. A
// trajectory shorter than one window yields nothing.
inline std::vector<TrajectoryWindow> slide_windows(const MotionTrajectory& t, double window_s, double stride_s) {
  if (!(window_s > 0.0) || !(stride_s > 0.0)) throw ValidationError("window and stride must be > 0");
  const int win = std::max(1, frames_for(window_s, t.fps));
  const int stride = std::max(1, frames_for(stride_s, t.fps));
  std::vector<TrajectoryWindow> out;
  const auto len = static_cast<long long>(t.points.size());
  if (len < win) return out;
  const long long count = (len - win) / stride + 1;
  out.reserve(static_cast<std::size_t>(count));
  for (long long k = 0; k < count; ++k) {
    const auto first = t.points.begin() + k * stride;
    out.push_back({t.id, t.start_frame + k * stride, win, t.fps, std::vector<Point2>(first, first + win)});
  }
  return out;
}

inline std::vector<TrajectoryWindow> slide_windows(const MotionTrajectory& t, const TrajectoryConfig& cfg = {}) {
  return slide_windows(t, cfg.window_s, cfg.stride_s);
}

}  // namespace gymcam
