#pragma once

// End-to-end stages: model training from labelled corpora, the inference
// pipeline producing the analytics report, and evaluation against ground
// truth.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gymcam/analytics.hpp"
#include "gymcam/cluster.hpp"
#include "gymcam/detect.hpp"
#include "gymcam/io.hpp"
#include "gymcam/synth.hpp"
#include "gymcam/version.hpp"

namespace gymcam {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Labelled corpora

struct LabeledTrajectory {
  MotionTrajectory trajectory;
  std::optional<std::string> label;
  std::optional<double> reps;
  bool test = false;
};

inline bool is_exercise_truth(const std::optional<std::string>& label, const std::optional<double>& reps) {
  if (label) return *label != "none";
  return reps && *reps > 0.0;
}

namespace detail {

inline std::string list_ids(const std::vector<std::string>& ids, std::size_t limit = 10) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < limit; ++i) out += (i ? ", " : "") + ids[i];
  if (ids.size() > limit) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

}  // namespace detail

// Attaches per-trajectory truth. The split comes from the truth records when
// any carries one; otherwise a seeded, per-class 20% holdout is drawn.
inline std::vector<LabeledTrajectory> join_truth(std::span<const MotionTrajectory> trajectories,
                                                 std::span<const TruthRecord> truth, std::uint64_t seed,
                                                 double holdout = 0.2) {
  std::map<std::string, const TruthRecord*> by_id;
  bool has_split = false;
  for (const auto& r : truth) {
    if (r.id.empty()) continue;
    if (!by_id.emplace(r.id, &r).second) throw ValidationError("duplicate ground truth for '" + r.id + "'");
    has_split = has_split || !r.split.empty();
  }
  std::vector<LabeledTrajectory> out;
  std::vector<std::string> missing;
  for (const auto& t : trajectories) {
    const auto it = by_id.find(t.id);
    if (it == by_id.end()) {
      missing.push_back(t.id);
      continue;
    }
    out.push_back({t, it->second->label, it->second->reps, it->second->split == "test"});
  }
  if (!missing.empty())
    throw ValidationError("trajectories without ground truth: " + detail::list_ids(missing));
  if (has_split) return out;

  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < out.size(); ++i) strata[out[i].label.value_or("")].push_back(i);
  std::uint64_t k = 0;
  for (auto& [label, idx] : strata) {
    std::mt19937_64 rng(synth::mix_seed(seed, 0x5EED, ++k));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::lround(holdout * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < n_test && idx.size() > 1; ++i) out[idx[i]].test = true;
  }
  return out;
}

inline std::vector<LabeledTrajectory> labeled_corpus(const synth::Corpus& c) {
  std::vector<LabeledTrajectory> out;
  for (const auto& it : c.items)
    out.push_back({it.sample.trajectory, c.class_labels[it.class_index], it.sample.truth.reps, it.test});
  return out;
}

// ---------------------------------------------------------------------------
// Training

struct ModelSelection {
  bool detector = true;
  bool regressor = true;
  bool recognizer = true;
  // Explicit requests turn missing-data warnings into errors.
  bool explicit_request = false;
};

struct TrainOutcome {
  io::ModelBundle bundle;
  json metrics = json::object();
  std::vector<std::string> warnings;
};

namespace detail {

inline Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return x;
}

// The combined trajectory a lone trajectory produces as a one-member cluster,
// after the same trimming and regridding as inference.
inline std::optional<CombinedTrajectory> lone_combined(const MotionTrajectory& t, const io::PipelineConfig& cfg) {
  const auto trimmed = trim_stationary(t, cfg.detect.min_move_px);
  if (trimmed.stationary) return std::nullopt;
  const auto g = regrid(trimmed);
  SegmentPath p{g.id, g.fps, g.start_frame, g.points};
  return combine_cluster(std::span<const SegmentPath>(&p, 1), cfg.cluster.combine_window_s);
}

inline double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace detail

inline TrainOutcome train_models(std::span<const LabeledTrajectory> corpus, const io::PipelineConfig& cfg,
                                 ModelSelection which = {}) {
  if (corpus.empty()) throw ValidationError("training corpus is empty");
  TrainOutcome out;
  out.bundle.seed = cfg.seed;
  out.bundle.config = io::config_to_json(cfg);
  const auto dc = cfg.detect_config();
  const auto ac = cfg.analytics_config();

  const bool any_label = std::any_of(corpus.begin(), corpus.end(), [](const auto& c) { return c.label.has_value(); });
  const bool any_reps = std::any_of(corpus.begin(), corpus.end(), [](const auto& c) { return c.reps.has_value(); });
  auto skip = [&](const std::string& model, const std::string& why) {
    if (which.explicit_request) throw ValidationError("cannot train " + model + ": " + why);
    out.warnings.push_back("skipping " + model + ": " + why);
  };

  // Detector -----------------------------------------------------------------
  if (which.detector) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& c : corpus) {
      if (!c.label) continue;
      (*c.label == "none" ? n_neg : n_pos)++;
    }
    if (!any_label) {
      skip("detector", "corpus has no class labels");
    } else if (n_neg == 0 || n_pos == 0) {
      throw ValidationError(std::string("class absent from corpus: ") + (n_neg == 0 ? "none" : "exercise") +
                            " (detector needs both)");
    } else {
      std::vector<std::vector<double>> xs;
      std::vector<double> ys;
      std::vector<FeatureVector> test_x;
      std::vector<int> test_y;
      std::size_t dropped = 0;
      for (const auto& c : corpus) {
        if (!c.label) continue;
        const int y = *c.label != "none" ? 1 : 0;
        for (const auto& w : prepare_trajectory(c.trajectory, dc).windows) {
          if (w.status != WindowStatus::kOk) continue;
          if (c.test) {
            test_x.push_back(w.features);
            test_y.push_back(y);
            continue;
          }
          if (y == 1 && !passes_filter(w.features, cfg.filter)) {
            ++dropped;
            continue;
          }
          xs.emplace_back(w.features.values.begin(), w.features.values.end());
          ys.push_back(y);
        }
      }
      const auto pos = std::count(ys.begin(), ys.end(), 1.0);
      if (pos == 0) throw ProcessingError("no positive training windows pass the periodicity filter");
      if (pos == static_cast<long>(ys.size())) throw ProcessingError("no negative training windows");
      auto tc = cfg.train;
      tc.seed = synth::mix_seed(cfg.seed, 1);
      tc.class_weights = {dc.negative_class_weight, 1.0};
      auto r = nn::train(detail::rows_to_matrix(xs, kFeatureCount), ys, tc, nn::Task::kBinary, {"none", "exercise"});
      json m = {{"train_windows", ys.size()}, {"filtered_positive_windows", dropped}, {"test_windows", test_y.size()},
                {"best_epoch", r.best_epoch}};
      if (!test_x.empty()) {
        const auto p = classify_windows(r.model, test_x);
        double tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
          const bool pred = p[i] >= dc.threshold;
          if (pred && test_y[i]) ++tp;
          else if (pred) ++fp;
          else if (test_y[i]) ++fn;
          else ++tn;
        }
        m["accuracy"] = (tp + tn) / static_cast<double>(p.size());
        m["false_positive_rate"] = detail::safe_ratio(fp, fp + tn);
        m["false_negative_rate"] = detail::safe_ratio(fn, fn + tp);
        m["precision"] = detail::safe_ratio(tp, tp + fp);
      }
      out.metrics["detector"] = m;
      out.bundle.detector = std::move(r.model);
    }
  }

  // Repetition regressor -------------------------------------------------------
  if (which.regressor) {
    if (!any_reps) {
      skip("regressor", "corpus has no repetition counts");
    } else {
      std::vector<std::vector<double>> xs;
      std::vector<double> ys;
      std::vector<std::pair<std::vector<double>, double>> test;
      std::size_t too_few = 0;
      for (const auto& c : corpus) {
        if (!c.reps || !is_exercise_truth(c.label, c.reps)) continue;
        if (!c.test && *c.reps < ac.min_training_reps) {
          ++too_few;
          continue;
        }
        const auto combined = detail::lone_combined(c.trajectory, cfg);
        if (!combined) continue;
        auto f = rep_features(*combined, ac);
        if (!f) continue;
        if (c.test) test.emplace_back(std::move(*f), *c.reps);
        else {
          xs.push_back(std::move(*f));
          ys.push_back(*c.reps);
        }
      }
      if (xs.size() < 2) {
        skip("regressor", "fewer than 2 usable exercise trajectories with >= " +
                              std::to_string(ac.min_training_reps) + " repetitions");
      } else {
        auto tc = cfg.train;
        tc.seed = synth::mix_seed(cfg.seed, 2);
        auto r = nn::train(detail::rows_to_matrix(xs, kFrequencyFeatureCount), ys, tc, nn::Task::kRegression);
        json m = {{"train_examples", ys.size()}, {"excluded_few_reps", too_few}, {"test_examples", test.size()},
                  {"best_epoch", r.best_epoch}};
        if (!test.empty()) {
          std::vector<double> err;
          for (const auto& [f, y] : test) err.push_back(std::abs(std::max(0.0, nn::predict(r.model, f).front()) - y));
          const double mae = dsp::mean(err);
          double var = 0.0;
          for (double e : err) var += (e - mae) * (e - mae);
          m["mae"] = mae;
          m["std"] = std::sqrt(var / static_cast<double>(err.size()));
        }
        out.metrics["regressor"] = m;
        out.bundle.regressor = std::move(r.model);
      }
    }
  }

  // Recogniser -----------------------------------------------------------------
  if (which.recognizer) {
    std::set<std::string> classes;
    for (const auto& c : corpus)
      if (c.label && *c.label != "none") classes.insert(*c.label);
    if (!any_label) {
      skip("recognizer", "corpus has no class labels");
    } else if (classes.size() < 2) {
      skip("recognizer", "corpus has fewer than 2 exercise classes");
    } else {
      const std::vector<std::string> labels(classes.begin(), classes.end());
      std::map<std::string, double> index;
      for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = static_cast<double>(i);
      std::vector<std::vector<double>> xs;
      std::vector<double> ys;
      std::vector<std::pair<CombinedTrajectory, std::string>> test;
      for (const auto& c : corpus) {
        if (!c.label || *c.label == "none") continue;
        auto combined = detail::lone_combined(c.trajectory, cfg);
        if (!combined) continue;
        if (c.test) {
          test.emplace_back(std::move(*combined), *c.label);
          continue;
        }
        for (auto& q : quantized_windows(whole_window(*combined), ac).inputs) {
          xs.push_back(std::move(q));
          ys.push_back(index.at(*c.label));
        }
      }
      auto tc = cfg.train;
      tc.seed = synth::mix_seed(cfg.seed, 3);
      auto r = nn::train(detail::rows_to_matrix(xs, kQuantizedSize), ys, tc, nn::Task::kMulticlass, labels);
      json m = {{"train_windows", ys.size()}, {"test_examples", test.size()}, {"classes", labels},
                {"best_epoch", r.best_epoch}};
      if (!test.empty()) {
        std::size_t ok = 0;
        for (const auto& [c, label] : test) ok += recognize(r.model, c, ac).label_name == label;
        m["accuracy"] = static_cast<double>(ok) / static_cast<double>(test.size());
      }
      out.metrics["recognizer"] = m;
      out.bundle.recognizer = std::move(r.model);
    }
  }

  if (!out.bundle.detector && !out.bundle.regressor && !out.bundle.recognizer)
    throw ValidationError("no model could be trained from this corpus");
  return out;
}

// ---------------------------------------------------------------------------
// Inference

namespace detail {

inline json window_json(const WindowFeatures& w, double p, int raw, int label) {
  return {{"start_frame", w.window.window_start_frame},
          {"end_frame", w.window.end_frame()},
          {"probability", p},
          {"raw_label", raw},
          {"label", label},
          {"status", w.status == WindowStatus::kOk ? "ok" : "degenerate"}};
}

inline json combined_json(const CombinedTrajectory& c) {
  Point2 centroid{};
  for (const auto& p : c.points) centroid = centroid + p;
  centroid = (1.0 / static_cast<double>(c.points.size())) * centroid;
  double reach = 0.0;
  for (const auto& p : c.points) reach = std::max(reach, distance(p, centroid));
  return {{"start_frame", c.start_frame},
          {"end_frame", c.end_frame()},
          {"frames", c.points.size()},
          {"gap_frames", c.gap_frames},
          {"centroid", {centroid.x, centroid.y}},
          {"max_radius_px", reach}};
}

inline json model_summary(const std::optional<nn::MlpModel>& m) {
  if (!m) return nullptr;
  return {{"task", nn::to_string(m->task)}, {"layer_sizes", m->layer_sizes()}, {"class_labels", m->class_labels}};
}

}  // namespace detail

inline json run_pipeline(const IngestResult& input, std::span<const BoundingBox> boxes, const io::ModelBundle& bundle,
                         const io::PipelineConfig& cfg) {
  io::require_complete(bundle);
  validate_boxes(boxes);
  const auto dc = cfg.detect_config();
  const auto ac = cfg.analytics_config();

  json report;
  report["schema"] = kReportSchema;
  report["tool_version"] = kToolVersion;
  report["seed"] = cfg.seed;
  report["config"] = io::config_to_json(cfg);
  report["boxes"] = io::boxes_to_json(boxes).at("boxes");
  report["models"] = {{"feature_version", bundle.feature_version},
                      {"detector", detail::model_summary(bundle.detector)},
                      {"regressor", detail::model_summary(bundle.regressor)},
                      {"recognizer", detail::model_summary(bundle.recognizer)}};

  json trajectories = json::array();
  std::vector<SegmentPath> paths;
  std::size_t n_segments = 0;
  for (const auto& t : input.accepted) {
    json tj = {{"id", t.id}, {"start_frame", t.start_frame}, {"end_frame", t.end_frame()}};
    const auto prepared = prepare_trajectory(t, dc);
    json windows = json::array(), segments = json::array();
    if (prepared.stationary) {
      tj["status"] = "stationary";
    } else if (prepared.windows.empty()) {
      tj["status"] = "too_short";
    } else {
      tj["status"] = "ok";
      const auto d = detect(*bundle.detector, prepared, dc);
      for (std::size_t i = 0; i < prepared.windows.size(); ++i)
        windows.push_back(detail::window_json(prepared.windows[i], d.probabilities[i], d.raw_labels[i], d.labels[i]));
      for (const auto& s : d.segments) {
        segments.push_back({{"id", s.id},
                            {"start_frame", s.start_frame},
                            {"end_frame", s.end_frame},
                            {"windows", s.windows},
                            {"confidence", s.label_confidence}});
        paths.push_back(segment_path(s, prepared.gridded));
        ++n_segments;
      }
    }
    tj["windows"] = std::move(windows);
    tj["segments"] = std::move(segments);
    trajectories.push_back(std::move(tj));
  }
  report["trajectories"] = std::move(trajectories);

  json rejections = json::array();
  for (const auto& r : input.rejected)
    rejections.push_back({{"line", r.line},
                          {"id", r.id},
                          {"kind", r.kind == RejectKind::kLifespan ? "lifespan" : "validation"},
                          {"reason", r.reason}});
  report["rejections"] = std::move(rejections);
  json parse_errors = json::array();
  for (const auto& e : input.parse_errors) parse_errors.push_back({{"line", e.line}, {"message", e.message}});
  report["parse_errors"] = std::move(parse_errors);

  json clusters = json::array();
  const auto found = cluster_segments(paths, boxes, cfg.cluster);
  for (const auto& c : found) {
    json cj = {{"id", c.id},
               {"box_id", c.box_id},
               {"start_frame", c.start_frame},
               {"end_frame", c.end_frame},
               {"members", c.member_segments},
               {"combined", detail::combined_json(c.combined)}};
    const auto reps = count_reps(*bundle.regressor, c.combined, ac);
    cj["reps"] = {{"counted", reps.counted},
                  {"raw", reps.counted ? json(reps.raw) : json(nullptr)},
                  {"rounded", reps.counted ? json(reps.rounded) : json(nullptr)}};
    const auto rec = recognize(*bundle.recognizer, c.combined, ac);
    json probs = json::object();
    if (rec.recognized)
      for (std::size_t i = 0; i < rec.probabilities.size(); ++i) probs[bundle.recognizer->class_labels[i]] = rec.probabilities[i];
    cj["recognition"] = {{"recognized", rec.recognized},
                         {"label", rec.recognized ? json(rec.label_name) : json(nullptr)},
                         {"probabilities", std::move(probs)},
                         {"windows", rec.windows},
                         {"fallback", rec.fallback}};
    clusters.push_back(std::move(cj));
  }
  report["clusters"] = std::move(clusters);
  report["summary"] = {{"input_records", input.total()},
                       {"accepted", input.accepted.size()},
                       {"rejected", input.rejected.size()},
                       {"parse_errors", input.parse_errors.size()},
                       {"segments", n_segments},
                       {"clusters", found.size()}};
  return report;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalMetrics {
  // Window-level detection.
  std::size_t windows = 0, tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> detection_accuracy, false_positive_rate, precision;
  // Cluster tracking.
  std::size_t gt_exercises = 0, predicted_clusters = 0, matched = 0;
  double tracking_rate = 0.0;
  double cluster_false_positive_rate = 0.0;
  // Over matched clusters.
  std::size_t rep_pairs = 0;
  std::optional<double> rep_mae, rep_std;
  std::size_t recognition_pairs = 0;
  std::optional<double> recognition_accuracy;
};

inline double temporal_iou(Frame a0, Frame a1, Frame b0, Frame b1) {
  const Frame inter = std::max<Frame>(0, std::min(a1, b1) - std::max(a0, b0) + 1);
  const Frame uni = (a1 - a0 + 1) + (b1 - b0 + 1) - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

struct ClusterMatch {
  std::size_t truth = 0;
  std::size_t predicted = 0;
  double iou = 0.0;
};

struct PredictedInterval {
  std::string box_id;
  Frame start_frame = 0;
  Frame end_frame = 0;
};

// One-to-one greedy matching by descending IoU (ties: lower truth index, then
// lower prediction index); pairs must share a box and reach min_iou.
inline std::vector<ClusterMatch> match_clusters(std::span<const TruthRecord> regions,
                                                std::span<const PredictedInterval> predicted, double min_iou = 0.5) {
  std::vector<ClusterMatch> cand;
  for (std::size_t g = 0; g < regions.size(); ++g)
    for (std::size_t p = 0; p < predicted.size(); ++p) {
      if (regions[g].region != predicted[p].box_id) continue;
      const double iou =
          temporal_iou(regions[g].start_frame, regions[g].end_frame, predicted[p].start_frame, predicted[p].end_frame);
      if (iou >= min_iou) cand.push_back({g, p, iou});
    }
  std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.iou > b.iou; });
  std::vector<char> used_g(regions.size(), 0), used_p(predicted.size(), 0);
  std::vector<ClusterMatch> out;
  for (const auto& c : cand) {
    if (used_g[c.truth] || used_p[c.predicted]) continue;
    used_g[c.truth] = used_p[c.predicted] = 1;
    out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.truth < b.truth; });
  return out;
}

inline EvalMetrics evaluate(const json& report, std::span<const TruthRecord> truth) {
  EvalMetrics m;
  std::map<std::string, std::vector<const TruthRecord*>> by_id;
  std::vector<TruthRecord> regions;
  for (const auto& r : truth) {
    if (!r.id.empty()) by_id[r.id].push_back(&r);
    else regions.push_back(r);
  }
  std::set<std::string> reported, rejected, boxes;
  try {
    for (const auto& t : report.at("trajectories")) reported.insert(t.at("id").get<std::string>());
    for (const auto& r : report.at("rejections")) rejected.insert(r.at("id").get<std::string>());
    for (const auto& b : report.at("boxes")) boxes.insert(b.at("id").get<std::string>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  std::vector<std::string> offenders;
  for (const auto& [id, recs] : by_id)
    if (!reported.count(id) && !rejected.count(id)) offenders.push_back(id + " (not in report)");
  for (const auto& id : reported)
    if (!by_id.count(id)) offenders.push_back(id + " (no ground truth)");
  for (const auto& r : regions)
    if (!boxes.count(r.region)) offenders.push_back("region " + r.region + " (unknown box)");
  if (!offenders.empty()) throw ValidationError("ground truth does not match report: " + detail::list_ids(offenders));

  try {
    for (const auto& t : report.at("trajectories")) {
      const auto& recs = by_id.at(t.at("id").get<std::string>());
      for (const auto& w : t.at("windows")) {
        const double centre = 0.5 * static_cast<double>(w.at("start_frame").get<Frame>() + w.at("end_frame").get<Frame>());
        bool truth_pos = false;
        for (const auto* r : recs)
          truth_pos = truth_pos || (is_exercise_truth(r->label, r->reps) && centre >= static_cast<double>(r->start_frame) &&
                                    centre <= static_cast<double>(r->end_frame));
        const bool pred = w.at("label").get<int>() != 0;
        ++m.windows;
        if (pred && truth_pos) ++m.tp;
        else if (pred) ++m.fp;
        else if (truth_pos) ++m.fn;
        else ++m.tn;
      }
    }
    if (m.windows > 0) m.detection_accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(m.windows);
    if (m.fp + m.tn > 0) m.false_positive_rate = static_cast<double>(m.fp) / static_cast<double>(m.fp + m.tn);
    if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);

    const auto& clusters = report.at("clusters");
    std::vector<PredictedInterval> predicted;
    for (const auto& c : clusters)
      predicted.push_back({c.at("box_id").get<std::string>(), c.at("start_frame").get<Frame>(), c.at("end_frame").get<Frame>()});
    const auto matches = match_clusters(regions, predicted);
    m.gt_exercises = regions.size();
    m.predicted_clusters = predicted.size();
    m.matched = matches.size();
    m.tracking_rate = detail::safe_ratio(static_cast<double>(m.matched), static_cast<double>(m.gt_exercises));
    m.cluster_false_positive_rate =
        detail::safe_ratio(static_cast<double>(m.predicted_clusters - m.matched), static_cast<double>(m.predicted_clusters));

    std::vector<double> err;
    std::size_t correct = 0;
    for (const auto& match : matches) {
      const auto& g = regions[match.truth];
      const auto& c = clusters[match.predicted];
      if (g.reps && c.at("reps").at("counted").get<bool>())
        err.push_back(std::abs(c.at("reps").at("raw").get<double>() - *g.reps));
      if (g.label && c.at("recognition").at("recognized").get<bool>()) {
        ++m.recognition_pairs;
        correct += c.at("recognition").at("label").get<std::string>() == *g.label;
      }
    }
    m.rep_pairs = err.size();
    if (!err.empty()) {
      const double mae = dsp::mean(err);
      double var = 0.0;
      for (double e : err) var += (e - mae) * (e - mae);
      m.rep_mae = mae;
      m.rep_std = std::sqrt(var / static_cast<double>(err.size()));
    }
    if (m.recognition_pairs > 0)
      m.recognition_accuracy = static_cast<double>(correct) / static_cast<double>(m.recognition_pairs);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return m;
}

inline json metrics_to_json(const EvalMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"detection",
           {{"windows", m.windows},
            {"true_positives", m.tp},
            {"false_positives", m.fp},
            {"true_negatives", m.tn},
            {"false_negatives", m.fn},
            {"accuracy", opt(m.detection_accuracy)},
            {"false_positive_rate", opt(m.false_positive_rate)},
            {"precision", opt(m.precision)}}},
          {"clusters",
           {{"ground_truth_exercises", m.gt_exercises},
            {"predicted", m.predicted_clusters},
            {"matched", m.matched},
            {"tracking_rate", m.tracking_rate},
            {"false_positive_rate", m.cluster_false_positive_rate}}},
          {"reps", {{"pairs", m.rep_pairs}, {"mae", opt(m.rep_mae)}, {"std", opt(m.rep_std)}}},
          {"recognition", {{"pairs", m.recognition_pairs}, {"accuracy", opt(m.recognition_accuracy)}}}};
}

// ---------------------------------------------------------------------------
// Report validation

// Structural and referential checks; returns every problem found.
inline std::vector<std::string> validate_report(const json& r) {
  std::vector<std::string> errs;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) errs.push_back(what);
    return ok;
  };
  if (!need(r.is_object(), "report is not an object")) return errs;
  for (const char* key : {"schema", "tool_version", "seed", "config", "boxes", "models", "trajectories", "rejections",
                          "parse_errors", "clusters", "summary"})
    need(r.contains(key), std::string("missing key '") + key + "'");
  if (!errs.empty()) return errs;
  need(r.at("schema") == kReportSchema, "unexpected schema tag");
  need(r.at("tool_version").is_string(), "tool_version must be a string");
  need(r.at("seed").is_number_unsigned(), "seed must be a non-negative integer");
  need(r.at("config").is_object(), "config must be an object");

  auto rate = [&](const json& v, const std::string& where) {
    if (v.is_null()) return;
    need(v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0, where + " must be in [0, 1]");
  };

  std::set<std::string> box_ids, segment_ids, trajectory_ids;
  for (const auto& b : r.at("boxes")) {
    if (!need(b.is_object() && b.contains("id") && b.at("id").is_string(), "box without string id")) continue;
    need(box_ids.insert(b.at("id").get<std::string>()).second, "duplicate box id");
  }
  for (const auto& t : r.at("trajectories")) {
    if (!need(t.is_object() && t.contains("id") && t.at("id").is_string(), "trajectory without string id")) continue;
    const auto id = t.at("id").get<std::string>();
    need(trajectory_ids.insert(id).second, "duplicate trajectory id '" + id + "'");
    const auto status = t.value("status", std::string{});
    need(status == "ok" || status == "stationary" || status == "too_short", "trajectory '" + id + "' has bad status");
    if (!need(t.contains("windows") && t.at("windows").is_array(), "trajectory '" + id + "' lacks windows")) continue;
    if (!need(t.contains("segments") && t.at("segments").is_array(), "trajectory '" + id + "' lacks segments")) continue;
    const auto n_windows = t.at("windows").size();
    for (const auto& w : t.at("windows")) {
      need(w.contains("probability") && w.at("probability").is_number(), "window without probability in '" + id + "'");
      if (w.contains("probability")) rate(w.at("probability"), "window probability in '" + id + "'");
      need(w.contains("label") && (w.at("label") == 0 || w.at("label") == 1), "window label must be 0 or 1 in '" + id + "'");
    }
    for (const auto& s : t.at("segments")) {
      if (!need(s.contains("id") && s.at("id").is_string(), "segment without id in '" + id + "'")) continue;
      need(segment_ids.insert(s.at("id").get<std::string>()).second, "duplicate segment id");
      for (const auto& wi : s.value("windows", json::array()))
        need(wi.is_number_unsigned() && wi.get<std::size_t>() < n_windows, "segment window index out of range");
    }
  }
  for (const auto& c : r.at("clusters")) {
    const auto cid = c.value("id", std::string{"?"});
    need(c.contains("box_id") && c.at("box_id").is_string() && box_ids.count(c.at("box_id").get<std::string>()),
         "cluster '" + cid + "' references an unknown box");
    if (need(c.contains("members") && c.at("members").is_array() && !c.at("members").empty(),
             "cluster '" + cid + "' has no members"))
      for (const auto& mem : c.at("members"))
        need(mem.is_string() && segment_ids.count(mem.get<std::string>()),
             "cluster '" + cid + "' references unknown segment " + mem.dump());
    if (need(c.contains("reps") && c.at("reps").is_object(), "cluster '" + cid + "' lacks reps")) {
      const auto& reps = c.at("reps");
      if (reps.value("counted", false)) {
        need(reps.at("raw").is_number() && reps.at("raw").get<double>() >= 0.0, "cluster '" + cid + "' has bad raw reps");
        need(reps.at("rounded").is_number_integer() &&
                 reps.at("rounded").get<long>() == std::lround(reps.at("raw").get<double>()),
             "cluster '" + cid + "' rounded reps disagree with raw");
      }
    }
    if (need(c.contains("recognition") && c.at("recognition").is_object(), "cluster '" + cid + "' lacks recognition")) {
      const auto& rec = c.at("recognition");
      if (rec.value("recognized", false)) {
        double sum = 0.0;
        for (const auto& [k, v] : rec.at("probabilities").items()) {
          rate(v, "cluster '" + cid + "' probability");
          if (v.is_number()) sum += v.get<double>();
        }
        need(std::abs(sum - 1.0) <= 1e-6, "cluster '" + cid + "' probabilities do not sum to 1");
        need(rec.at("label").is_string() && rec.at("probabilities").contains(rec.at("label").get<std::string>()),
             "cluster '" + cid + "' label is not among its probabilities");
      }
    }
  }
  if (r.contains("metrics")) {
    const auto& m = r.at("metrics");
    if (need(m.is_object() && m.contains("detection") && m.contains("clusters") && m.contains("reps") &&
                 m.contains("recognition"),
             "metrics block is incomplete")) {
      rate(m.at("detection").value("accuracy", json(nullptr)), "detection accuracy");
      rate(m.at("detection").value("false_positive_rate", json(nullptr)), "detection false_positive_rate");
      rate(m.at("detection").value("precision", json(nullptr)), "detection precision");
      rate(m.at("clusters").value("tracking_rate", json(nullptr)), "tracking_rate");
      rate(m.at("clusters").value("false_positive_rate", json(nullptr)), "cluster false_positive_rate");
      rate(m.at("recognition").value("accuracy", json(nullptr)), "recognition accuracy");
      const auto mae = m.at("reps").value("mae", json(nullptr));
      need(mae.is_null() || (mae.is_number() && mae.get<double>() >= 0.0), "rep mae must be >= 0");
    }
  }
  return errs;
}

}  // namespace gymcam
