#include <gtest/gtest.h>

#include <sstream>

#include "gymcam/pipeline.hpp"
#include "trained.hpp"

using namespace gymcam;
using nlohmann::json;

namespace {

IngestResult as_input(const std::vector<MotionTrajectory>& ts) {
  std::stringstream buf;
  io::write_trajectories(buf, ts);
  return ingest_trajectories(buf);
}

const json& scene_report() {
  static const json r = [] {
    const auto scene = synth::generate_scene(synth::default_scene_spec(7));
    return run_pipeline(as_input(scene.trajectories), scene.boxes, fixtures::bundle(), fixtures::config());
  }();
  return r;
}

// Two boxes, two trajectories; every count below is worked out by hand.
json hand_report() {
  auto window = [](Frame s, Frame e, int label) {
    return json{{"start_frame", s}, {"end_frame", e}, {"probability", label ? 0.9 : 0.1},
                {"raw_label", label}, {"label", label}, {"status", "ok"}};
  };
  json r;
  r["boxes"] = json::array({{{"id", "A"}}, {{"id", "B"}}});
  r["rejections"] = json::array();
  r["trajectories"] = json::array({
      {{"id", "t1"}, {"windows", {window(0, 149, 1), window(150, 299, 0)}}},
      {{"id", "t2"}, {"windows", {window(0, 149, 1), window(30, 179, 0)}}},
  });
  r["clusters"] = json::array({
      {{"box_id", "A"}, {"start_frame", 0}, {"end_frame", 299},
       {"reps", {{"counted", true}, {"raw", 9.0}, {"rounded", 9}}},
       {"recognition", {{"recognized", true}, {"label", "circle"}}}},
      {{"box_id", "B"}, {"start_frame", 400}, {"end_frame", 500},
       {"reps", {{"counted", true}, {"raw", 3.0}, {"rounded", 3}}},
       {"recognition", {{"recognized", true}, {"label", "circle"}}}},
  });
  return r;
}

std::vector<TruthRecord> hand_truth() {
  return {{"t1", "", "circle", 0, 299, 10.0, ""},
          {"t2", "", "none", 0, 179, 0.0, ""},
          {"", "A", "circle", 0, 299, 10.0, ""},
          {"", "B", "circle", 0, 299, 10.0, ""}};
}

std::vector<LabeledTrajectory> small_corpus(std::uint64_t seed) {
  return labeled_corpus(synth::generate_corpus(synth::training_corpus_spec(), 6, seed));
}

io::PipelineConfig quick_config() {
  auto c = fixtures::config();
  c.train.max_epochs = 15;
  return c;
}

}  // namespace

TEST(Evaluate, HandBuiltCase) {
  const auto m = evaluate(hand_report(), hand_truth());
  EXPECT_EQ(m.windows, 4u);
  EXPECT_EQ(m.tp, 1u);
  EXPECT_EQ(m.fn, 1u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.tn, 1u);
  EXPECT_DOUBLE_EQ(*m.detection_accuracy, 0.5);
  EXPECT_DOUBLE_EQ(*m.false_positive_rate, 0.5);
  EXPECT_DOUBLE_EQ(*m.precision, 0.5);
  EXPECT_EQ(m.gt_exercises, 2u);
  EXPECT_EQ(m.matched, 1u);
  EXPECT_DOUBLE_EQ(m.tracking_rate, 0.5);
  EXPECT_DOUBLE_EQ(m.cluster_false_positive_rate, 0.5);
  EXPECT_EQ(m.rep_pairs, 1u);
  EXPECT_DOUBLE_EQ(*m.rep_mae, 1.0);
  EXPECT_DOUBLE_EQ(*m.rep_std, 0.0);
  EXPECT_DOUBLE_EQ(*m.recognition_accuracy, 1.0);
}

TEST(Evaluate, PerfectPredictions) {
  auto r = hand_report();
  r["trajectories"][0]["windows"][1]["label"] = 1;
  r["trajectories"][1]["windows"][0]["label"] = 0;
  r["clusters"][0]["reps"]["raw"] = 10.0;
  r["clusters"][1]["start_frame"] = 0;
  r["clusters"][1]["end_frame"] = 299;
  r["clusters"][1]["reps"]["raw"] = 10.0;
  const auto m = evaluate(r, hand_truth());
  EXPECT_DOUBLE_EQ(*m.detection_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(*m.false_positive_rate, 0.0);
  EXPECT_DOUBLE_EQ(m.tracking_rate, 1.0);
  EXPECT_DOUBLE_EQ(m.cluster_false_positive_rate, 0.0);
  EXPECT_DOUBLE_EQ(*m.rep_mae, 0.0);
}

TEST(Evaluate, NoClustersGiveZeroTracking) {
  auto r = hand_report();
  r["clusters"] = json::array();
  const auto m = evaluate(r, hand_truth());
  EXPECT_EQ(m.tracking_rate, 0.0);
  EXPECT_EQ(m.cluster_false_positive_rate, 0.0);
  EXPECT_FALSE(m.rep_mae.has_value());
  EXPECT_FALSE(m.recognition_accuracy.has_value());
  const auto j = metrics_to_json(m);
  EXPECT_TRUE(j["reps"]["mae"].is_null());
}

TEST(Evaluate, IdMismatchIsAValidationError) {
  auto truth = hand_truth();
  truth.push_back({"ghost", "", "none", 0, 10, std::nullopt, ""});
  EXPECT_THROW(evaluate(hand_report(), truth), ValidationError);
  auto missing = hand_truth();
  missing.erase(missing.begin() + 1);
  EXPECT_THROW(evaluate(hand_report(), missing), ValidationError);
  auto region = hand_truth();
  region.push_back({"", "Z", "circle", 0, 10, 1.0, ""});
  EXPECT_THROW(evaluate(hand_report(), region), ValidationError);
  EXPECT_THROW(evaluate(json::object(), hand_truth()), ValidationError);
}

TEST(Evaluate, RejectedTrajectoriesMayCarryTruth) {
  auto r = hand_report();
  r["rejections"] = json::array({{{"id", "long"}, {"line", 3}}});
  auto truth = hand_truth();
  truth.push_back({"long", "", "none", 0, 400, std::nullopt, ""});
  EXPECT_NO_THROW(evaluate(r, truth));
}

TEST(Match, TemporalIou) {
  EXPECT_DOUBLE_EQ(temporal_iou(0, 9, 5, 14), 5.0 / 15.0);
  EXPECT_DOUBLE_EQ(temporal_iou(0, 9, 0, 9), 1.0);
  EXPECT_DOUBLE_EQ(temporal_iou(0, 9, 10, 19), 0.0);
}

TEST(Match, OneToOneWithinTheSameBox) {
  const std::vector<TruthRecord> g{{"", "A", "x", 0, 99, 1.0, ""}, {"", "A", "x", 0, 99, 1.0, ""}};
  const std::vector<PredictedInterval> p{{"A", 0, 99}, {"B", 0, 99}, {"A", 40, 99}};
  const auto m = match_clusters(g, p);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].predicted, 0u);
  EXPECT_EQ(m[1].predicted, 2u);
  EXPECT_DOUBLE_EQ(m[1].iou, 0.6);
  const std::vector<PredictedInterval> q{{"A", 0, 99}, {"A", 0, 59}};
  const auto two = match_clusters(g, q);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[1].predicted, 1u);
  EXPECT_DOUBLE_EQ(two[1].iou, 0.6);
}

TEST(Run, SceneGivesOneClusterPerExercise) {
  const auto& r = scene_report();
  EXPECT_TRUE(validate_report(r).empty());
  std::map<std::string, int> per_box;
  for (const auto& c : r["clusters"]) per_box[c["box_id"].get<std::string>()]++;
  EXPECT_EQ(per_box["1"], 2);
  EXPECT_EQ(per_box["2"], 1);
  const auto scene = synth::generate_scene(synth::default_scene_spec(7));
  const auto m = evaluate(r, scene.truth);
  EXPECT_DOUBLE_EQ(m.tracking_rate, 1.0);
  EXPECT_DOUBLE_EQ(m.cluster_false_positive_rate, 0.0);
  ASSERT_TRUE(m.rep_mae.has_value());
  EXPECT_LE(*m.rep_mae, 1.7);
}

TEST(Run, ReportIsDeterministic) {
  const auto scene = synth::generate_scene(synth::default_scene_spec(7));
  const auto again = run_pipeline(as_input(scene.trajectories), scene.boxes, fixtures::bundle(), fixtures::config());
  EXPECT_EQ(again.dump(), scene_report().dump());
}

TEST(Run, RejectionsAndParseErrorsAreReported) {
  std::stringstream in;
  in << R"({"id":"ok","fps":30,"start_frame":0,"points":[[1,1],[9,1],[17,1]]})" << '\n'
     << "not json\n"
     << R"({"id":"empty","fps":30,"start_frame":0,"points":[]})" << '\n';
  const std::vector<BoundingBox> boxes{{"1", 0, 0, 10, 10}};
  const auto r = run_pipeline(ingest_trajectories(in), boxes, fixtures::bundle(), fixtures::config());
  EXPECT_EQ(r["summary"]["input_records"], 3);
  EXPECT_EQ(r["summary"]["accepted"], 1);
  EXPECT_EQ(r["rejections"].size(), 1u);
  EXPECT_EQ(r["parse_errors"].size(), 1u);
  EXPECT_EQ(r["trajectories"][0]["status"], "too_short");
  EXPECT_TRUE(validate_report(r).empty());
}

TEST(Run, MissingBoxesOrModelsAreValidationErrors) {
  const auto scene = synth::generate_scene(synth::default_scene_spec(7, false));
  const auto input = as_input(scene.trajectories);
  EXPECT_THROW(run_pipeline(input, std::vector<BoundingBox>{}, fixtures::bundle(), fixtures::config()), ValidationError);
  auto partial = fixtures::bundle();
  partial.regressor.reset();
  EXPECT_THROW(run_pipeline(input, scene.boxes, partial, fixtures::config()), ValidationError);
}

TEST(ValidateReport, FlagsBrokenReferences) {
  auto r = scene_report();
  ASSERT_FALSE(r["clusters"].empty());
  r["clusters"][0]["box_id"] = "nowhere";
  r["clusters"][0]["members"].push_back("ghost#0");
  r["clusters"][0]["reps"]["rounded"] = 1000;
  const auto errs = validate_report(r);
  EXPECT_GE(errs.size(), 3u);
  auto missing = scene_report();
  missing.erase("summary");
  EXPECT_FALSE(validate_report(missing).empty());
  EXPECT_FALSE(validate_report(json::array()).empty());
}

TEST(JoinTruth, AttachesLabelsAndDrawsAStratifiedHoldout) {
  std::vector<MotionTrajectory> ts;
  std::vector<TruthRecord> truth;
  for (int i = 0; i < 10; ++i) {
    synth::SynthSpec s;
    s.id = "t" + std::to_string(i);
    s.kind = i < 5 ? synth::Kind::kCircle : synth::Kind::kRandomWalk;
    s.duration_s = 1.0;
    ts.push_back(synth::generate(s).trajectory);
    truth.push_back({s.id, "", i < 5 ? "circle" : "none", 0, 29, i < 5 ? 1.0 : 0.0, ""});
  }
  const auto joined = join_truth(ts, truth, 3);
  ASSERT_EQ(joined.size(), 10u);
  int test_circle = 0, test_none = 0;
  for (const auto& j : joined) (*j.label == "circle" ? test_circle : test_none) += j.test;
  EXPECT_EQ(test_circle, 1);
  EXPECT_EQ(test_none, 1);
  EXPECT_EQ(*joined[2].label, "circle");

  truth[0].split = "test";
  const auto explicit_split = join_truth(ts, truth, 3);
  int tests = 0;
  for (const auto& j : explicit_split) tests += j.test;
  EXPECT_EQ(tests, 1);

  truth.pop_back();
  EXPECT_THROW(join_truth(ts, truth, 3), ValidationError);
  truth.push_back(truth.front());
  EXPECT_THROW(join_truth(ts, truth, 3), ValidationError);
}

TEST(Train, PartialCorpusWarnsUnlessExplicit) {
  auto corpus = small_corpus(8);
  for (auto& c : corpus) c.reps.reset();
  const auto out = train_models(corpus, quick_config(), {true, true, false, false});
  EXPECT_TRUE(out.bundle.detector.has_value());
  EXPECT_FALSE(out.bundle.regressor.has_value());
  ASSERT_EQ(out.warnings.size(), 1u);
  EXPECT_NE(out.warnings[0].find("regressor"), std::string::npos);
  EXPECT_THROW(train_models(corpus, quick_config(), {false, true, false, true}), ValidationError);
}

TEST(Train, AbsentClassIsAnError) {
  auto corpus = small_corpus(9);
  std::erase_if(corpus, [](const LabeledTrajectory& c) { return *c.label == "none"; });
  EXPECT_THROW(train_models(corpus, quick_config(), {true, false, false, false}), ValidationError);
  EXPECT_THROW(train_models(std::vector<LabeledTrajectory>{}, quick_config()), ValidationError);
}

TEST(Train, SameSeedSameBundle) {
  const auto corpus = small_corpus(10);
  const auto a = train_models(corpus, quick_config());
  const auto b = train_models(corpus, quick_config());
  ASSERT_TRUE(a.bundle.detector && a.bundle.regressor && a.bundle.recognizer);
  EXPECT_EQ(io::bundle_to_json(a.bundle).dump(), io::bundle_to_json(b.bundle).dump());
  EXPECT_EQ(a.metrics.dump(), b.metrics.dump());
  auto other = quick_config();
  other.seed = 2;
  EXPECT_NE(io::bundle_to_json(train_models(corpus, other).bundle).dump(), io::bundle_to_json(a.bundle).dump());
}
