#pragma once

// File formats: trajectory JSON lines, box configuration, ground-truth JSON
// lines, pipeline configuration and the model bundle.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gymcam/analytics.hpp"
#include "gymcam/cluster.hpp"
#include "gymcam/core.hpp"
#include "gymcam/detect.hpp"
#include "gymcam/nn.hpp"

namespace gymcam::io {

using nlohmann::json;

inline std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + p.string() + "'");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ProcessingError("cannot write '" + p.string() + "'");
  return out;
}

inline json read_json_file(const std::filesystem::path& p) {
  auto in = open_input(p);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("'" + p.string() + "' is not valid JSON: " + e.what());
  }
}

// Pretty-printed with a trailing newline; key order is sorted by the json
// library, so output is byte-stable.
inline void write_json_file(const std::filesystem::path& p, const json& j) {
  auto out = open_output(p);
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Trajectories

inline json trajectory_to_json(const MotionTrajectory& t) {
  json pts = json::array();
  for (const auto& p : t.points) pts.push_back({p.x, p.y});
  return {{"id", t.id}, {"fps", t.fps}, {"start_frame", t.start_frame}, {"points", std::move(pts)}};
}

inline void write_trajectories(std::ostream& out, std::span<const MotionTrajectory> ts) {
  for (const auto& t : ts) out << trajectory_to_json(t).dump() << '\n';
}

inline IngestResult read_trajectories(const std::filesystem::path& p, const TrajectoryConfig& cfg = {}) {
  auto in = open_input(p);
  return ingest_trajectories(in, cfg);
}

// ---------------------------------------------------------------------------
// Boxes

inline std::vector<BoundingBox> boxes_from_json(const json& j) {
  std::vector<BoundingBox> out;
  try {
    const auto& arr = j.at("boxes");
    if (!arr.is_array()) throw ValidationError("'boxes' must be an array");
    for (const auto& b : arr) {
      const auto& id = b.at("id");
      out.push_back({id.is_string() ? id.get<std::string>() : id.dump(), b.at("x_min").get<double>(),
                     b.at("y_min").get<double>(), b.at("x_max").get<double>(), b.at("y_max").get<double>()});
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed box configuration: ") + e.what());
  }
  validate_boxes(out);
  return out;
}

inline json boxes_to_json(std::span<const BoundingBox> boxes) {
  json arr = json::array();
  for (const auto& b : boxes)
    arr.push_back({{"id", b.id}, {"x_min", b.x_min}, {"y_min", b.y_min}, {"x_max", b.x_max}, {"y_max", b.y_max}});
  return {{"boxes", std::move(arr)}};
}

inline std::vector<BoundingBox> read_boxes(const std::filesystem::path& p) {
  if (!std::filesystem::exists(p)) throw ValidationError("box configuration '" + p.string() + "' not found");
  return boxes_from_json(read_json_file(p));
}

// ---------------------------------------------------------------------------
// Ground truth

inline json truth_to_json(const TruthRecord& r) {
  json j;
  if (!r.region.empty()) j["region"] = r.region;
  else j["id"] = r.id;
  j["class"] = r.label ? json(*r.label) : json(nullptr);
  j["start_frame"] = r.start_frame;
  j["end_frame"] = r.end_frame;
  j["reps"] = r.reps ? json(*r.reps) : json(nullptr);
  if (!r.split.empty()) j["split"] = r.split;
  return j;
}

inline TruthRecord truth_from_json(const json& j) {
  TruthRecord r;
  const bool has_id = j.contains("id"), has_region = j.contains("region");
  if (has_id == has_region) throw ValidationError("truth record needs exactly one of 'id' and 'region'");
  auto str = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  if (has_id) r.id = str(j.at("id"));
  else r.region = str(j.at("region"));
  if (j.contains("class") && !j.at("class").is_null()) r.label = j.at("class").get<std::string>();
  r.start_frame = j.at("start_frame").get<Frame>();
  r.end_frame = j.at("end_frame").get<Frame>();
  if (r.end_frame < r.start_frame) throw ValidationError("truth record ends before it starts");
  if (j.contains("reps") && !j.at("reps").is_null()) {
    r.reps = j.at("reps").get<double>();
    if (!(*r.reps >= 0.0)) throw ValidationError("truth reps must be >= 0");
  }
  r.split = j.value("split", std::string{});
  if (!r.split.empty() && r.split != "train" && r.split != "test")
    throw ValidationError("truth split must be 'train' or 'test'");
  return r;
}

inline std::vector<TruthRecord> read_truth(std::istream& in) {
  std::vector<TruthRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(truth_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ValidationError("ground truth line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("ground truth line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<TruthRecord> read_truth(const std::filesystem::path& p) {
  auto in = open_input(p);
  return read_truth(in);
}

inline void write_truth(std::ostream& out, std::span<const TruthRecord> records) {
  for (const auto& r : records) out << truth_to_json(r).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Configuration

struct SynthConfig {
  std::string preset = "training";  // training | detection | recognition | reps | scene
  int n_per_class = 40;
  bool walkers = true;  // scene preset only
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  TrajectoryConfig trajectory;
  FeatureConfig features;
  DetectConfig detect;
  FilterConfig filter;
  ClusterConfig cluster;
  AnalyticsConfig analytics;
  nn::TrainConfig train;
  SynthConfig synth;

  // Stage configs share the trajectory and feature settings.
  DetectConfig detect_config() const {
    DetectConfig d = detect;
    d.trajectory = trajectory;
    d.features = features;
    return d;
  }
  AnalyticsConfig analytics_config() const {
    AnalyticsConfig a = analytics;
    a.trajectory = trajectory;
    a.features = features;
    return a;
  }
};

inline std::string to_string(VoteMode m) { return m == VoteMode::kTiled ? "tiled" : "centered"; }

inline VoteMode vote_mode_from_string(const std::string& s) {
  if (s == "tiled") return VoteMode::kTiled;
  if (s == "centered") return VoteMode::kCentered;
  throw ValidationError("vote_mode must be 'tiled' or 'centered', got '" + s + "'");
}

inline json config_to_json(const PipelineConfig& c) {
  return {
      {"seed", c.seed},
      {"trajectory",
       {{"max_lifespan_s", c.trajectory.max_lifespan_s},
        {"window_s", c.trajectory.window_s},
        {"stride_s", c.trajectory.stride_s}}},
      {"features", {{"prominence_ratio", c.features.prominence_ratio}, {"max_lag_fraction", c.features.max_lag_fraction}}},
      {"detect",
       {{"min_move_px", c.detect.min_move_px},
        {"vote_size", c.detect.vote_size},
        {"vote_mode", to_string(c.detect.vote_mode)},
        {"threshold", c.detect.threshold},
        {"negative_class_weight", c.detect.negative_class_weight}}},
      {"filter",
       {{"min_ac_max_peak", c.filter.min_ac_max_peak},
        {"min_prominent_peaks", c.filter.min_prominent_peaks},
        {"max_weak_peaks", c.filter.max_weak_peaks}}},
      {"cluster",
       {{"phase_threshold_deg", c.cluster.phase_threshold_deg},
        {"min_overlap_s", c.cluster.min_overlap_s},
        {"combine_window_s", c.cluster.combine_window_s}}},
      {"analytics",
       {{"windowed_rep_features", c.analytics.windowed_rep_features},
        {"min_training_reps", c.analytics.min_training_reps}}},
      {"train",
       {{"hidden", c.train.hidden},
        {"learning_rate", c.train.learning_rate},
        {"l2", c.train.l2},
        {"batch_size", c.train.batch_size},
        {"max_epochs", c.train.max_epochs},
        {"patience", c.train.patience},
        {"validation_fraction", c.train.validation_fraction}}},
      {"synth", {{"preset", c.synth.preset}, {"n_per_class", c.synth.n_per_class}, {"walkers", c.synth.walkers}}},
  };
}

inline void validate_config(const PipelineConfig& c);

namespace detail {

// Copies j[key] into dst when present; unknown keys are rejected so typos in
// config files surface as validation errors.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ValidationError("config section '" + name_ + "' must be an object");
  }

  template <typename T>
  Section& get(const char* key, T& dst) {
    seen_.push_back(key);
    if (!j_.contains(key)) return *this;
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ValidationError("config '" + name_ + "." + key + "': " + e.what());
    }
    return *this;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end())
        throw ValidationError("unknown config key '" + name_ + "." + k + "'");
  }

 private:
  const json& j_;
  std::string name_;
  std::vector<std::string> seen_;
};

}  // namespace detail

// Applies the keys present in j on top of c.
inline void apply_config(PipelineConfig& c, const json& j) {
  using detail::Section;
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  static const std::vector<std::string> sections = {"seed",   "trajectory", "features",  "detect", "filter",
                                                    "cluster", "analytics", "train", "synth"};
  for (const auto& [k, v] : j.items())
    if (std::find(sections.begin(), sections.end(), k) == sections.end())
      throw ValidationError("unknown config key '" + k + "'");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ValidationError("config 'seed' must be a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("trajectory")) {
    Section(j.at("trajectory"), "trajectory")
        .get("max_lifespan_s", c.trajectory.max_lifespan_s)
        .get("window_s", c.trajectory.window_s)
        .get("stride_s", c.trajectory.stride_s)
        .finish();
  }
  if (j.contains("features")) {
    Section(j.at("features"), "features")
        .get("prominence_ratio", c.features.prominence_ratio)
        .get("max_lag_fraction", c.features.max_lag_fraction)
        .finish();
  }
  if (j.contains("detect")) {
    std::string mode = to_string(c.detect.vote_mode);
    Section(j.at("detect"), "detect")
        .get("min_move_px", c.detect.min_move_px)
        .get("vote_size", c.detect.vote_size)
        .get("vote_mode", mode)
        .get("threshold", c.detect.threshold)
        .get("negative_class_weight", c.detect.negative_class_weight)
        .finish();
    c.detect.vote_mode = vote_mode_from_string(mode);
  }
  if (j.contains("filter")) {
    Section(j.at("filter"), "filter")
        .get("min_ac_max_peak", c.filter.min_ac_max_peak)
        .get("min_prominent_peaks", c.filter.min_prominent_peaks)
        .get("max_weak_peaks", c.filter.max_weak_peaks)
        .finish();
  }
  if (j.contains("cluster")) {
    Section(j.at("cluster"), "cluster")
        .get("phase_threshold_deg", c.cluster.phase_threshold_deg)
        .get("min_overlap_s", c.cluster.min_overlap_s)
        .get("combine_window_s", c.cluster.combine_window_s)
        .finish();
  }
  if (j.contains("analytics")) {
    Section(j.at("analytics"), "analytics")
        .get("windowed_rep_features", c.analytics.windowed_rep_features)
        .get("min_training_reps", c.analytics.min_training_reps)
        .finish();
  }
  if (j.contains("train")) {
    Section(j.at("train"), "train")
        .get("hidden", c.train.hidden)
        .get("learning_rate", c.train.learning_rate)
        .get("l2", c.train.l2)
        .get("batch_size", c.train.batch_size)
        .get("max_epochs", c.train.max_epochs)
        .get("patience", c.train.patience)
        .get("validation_fraction", c.train.validation_fraction)
        .finish();
  }
  if (j.contains("synth")) {
    Section(j.at("synth"), "synth")
        .get("preset", c.synth.preset)
        .get("n_per_class", c.synth.n_per_class)
        .get("walkers", c.synth.walkers)
        .finish();
  }
  validate_config(c);
}

inline void validate_config(const PipelineConfig& c) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError("invalid config: " + what);
  };
  need(c.trajectory.max_lifespan_s > 0, "trajectory.max_lifespan_s must be > 0");
  need(c.trajectory.window_s > 0 && c.trajectory.stride_s > 0, "window_s and stride_s must be > 0");
  need(c.features.prominence_ratio > 0 && c.features.prominence_ratio < 1, "features.prominence_ratio must be in (0, 1)");
  need(c.features.max_lag_fraction > 0 && c.features.max_lag_fraction <= 1, "features.max_lag_fraction must be in (0, 1]");
  need(c.detect.min_move_px >= 0, "detect.min_move_px must be >= 0");
  need(c.detect.vote_size >= 1 && c.detect.vote_size % 2 == 1, "detect.vote_size must be odd and >= 1");
  need(c.detect.threshold > 0 && c.detect.threshold < 1, "detect.threshold must be in (0, 1)");
  need(c.detect.negative_class_weight > 0, "detect.negative_class_weight must be > 0");
  need(c.cluster.phase_threshold_deg >= 0 && c.cluster.phase_threshold_deg <= 180,
       "cluster.phase_threshold_deg must be in [0, 180]");
  need(c.cluster.min_overlap_s >= 0, "cluster.min_overlap_s must be >= 0");
  need(c.cluster.combine_window_s > 0, "cluster.combine_window_s must be > 0");
  need(!c.train.hidden.empty(), "train.hidden must list at least one layer");
  for (int h : c.train.hidden) need(h > 0, "train.hidden sizes must be > 0");
  need(c.train.learning_rate > 0, "train.learning_rate must be > 0");
  need(c.train.l2 >= 0, "train.l2 must be >= 0");
  need(c.train.batch_size > 0 && c.train.max_epochs > 0 && c.train.patience > 0,
       "train.batch_size, max_epochs and patience must be > 0");
  need(c.train.validation_fraction > 0 && c.train.validation_fraction < 1,
       "train.validation_fraction must be in (0, 1)");
  need(c.synth.n_per_class >= 1, "synth.n_per_class must be >= 1");
}

inline PipelineConfig load_config(const std::filesystem::path& p) {
  PipelineConfig c;
  apply_config(c, read_json_file(p));
  return c;
}

// Defaults, then the config file (if any), then an explicit seed.
inline PipelineConfig resolve_config(const std::filesystem::path& file, std::optional<std::uint64_t> seed) {
  PipelineConfig c = file.empty() ? PipelineConfig{} : load_config(file);
  if (seed) c.seed = *seed;
  return c;
}

// ---------------------------------------------------------------------------
// Model bundle

inline constexpr int kBundleVersion = 1;

struct ModelBundle {
  std::optional<nn::MlpModel> detector;
  std::optional<nn::MlpModel> regressor;
  std::optional<nn::MlpModel> recognizer;
  int feature_version = kFeatureVersion;
  std::uint64_t seed = 0;
  json config = json::object();
};

inline json bundle_to_json(const ModelBundle& b) {
  json j;
  j["format"] = "gymcam-models";
  j["version"] = kBundleVersion;
  j["feature_version"] = b.feature_version;
  j["seed"] = b.seed;
  j["config"] = b.config;
  j["detector"] = b.detector ? nn::to_json(*b.detector) : json(nullptr);
  j["regressor"] = b.regressor ? nn::to_json(*b.regressor) : json(nullptr);
  j["recognizer"] = b.recognizer ? nn::to_json(*b.recognizer) : json(nullptr);
  return j;
}

inline ModelBundle bundle_from_json(const json& j) {
  ModelBundle b;
  try {
    if (j.at("format").get<std::string>() != "gymcam-models") throw ValidationError("not a gymcam model bundle");
    if (j.at("version").get<int>() != kBundleVersion)
      throw ValidationError("model bundle version " + j.at("version").dump() + " is not supported");
    b.feature_version = j.at("feature_version").get<int>();
    if (b.feature_version != kFeatureVersion)
      throw ValidationError("model bundle feature version " + std::to_string(b.feature_version) +
                            " does not match this build (" + std::to_string(kFeatureVersion) + ")");
    b.seed = j.value("seed", std::uint64_t{0});
    b.config = j.value("config", json::object());
    auto model = [&](const char* key, nn::Task task, Eigen::Index inputs) -> std::optional<nn::MlpModel> {
      if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
      auto m = nn::model_from_json(j.at(key));
      if (m.task != task) throw ValidationError(std::string(key) + " has task " + nn::to_string(m.task));
      if (m.input_size() != inputs)
        throw ValidationError(std::string(key) + " expects " + std::to_string(m.input_size()) + " inputs, not " +
                              std::to_string(inputs));
      return m;
    };
    b.detector = model("detector", nn::Task::kBinary, static_cast<Eigen::Index>(kFeatureCount));
    b.regressor = model("regressor", nn::Task::kRegression, static_cast<Eigen::Index>(kFrequencyFeatureCount));
    b.recognizer = model("recognizer", nn::Task::kMulticlass, static_cast<Eigen::Index>(kQuantizedSize));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model bundle: ") + e.what());
  }
  return b;
}

inline ModelBundle read_bundle(const std::filesystem::path& p) {
  if (!std::filesystem::exists(p)) throw ValidationError("model bundle '" + p.string() + "' not found");
  return bundle_from_json(read_json_file(p));
}

// The pipeline needs all three models.
inline void require_complete(const ModelBundle& b) {
  std::vector<std::string> missing;
  if (!b.detector) missing.push_back("detector");
  if (!b.regressor) missing.push_back("regressor");
  if (!b.recognizer) missing.push_back("recognizer");
  if (missing.empty()) return;
  std::string list;
  for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
  throw ValidationError("model bundle is missing: " + list);
}

}  // namespace gymcam::io
