#pragma once

// Models trained once per test binary on synthetic corpora.

#include "gymcam/pipeline.hpp"

namespace fixtures {

inline gymcam::io::PipelineConfig config(std::uint64_t seed = 1) {
  gymcam::io::PipelineConfig c;
  c.seed = seed;
  return c;
}

inline const gymcam::nn::MlpModel& detector() {
  static const gymcam::nn::MlpModel m = [] {
    const auto corpus = gymcam::synth::generate_corpus(gymcam::synth::detection_corpus_spec(), 80, 101);
    const auto labeled = gymcam::labeled_corpus(corpus);
    return *gymcam::train_models(labeled, config(), {true, false, false, true}).bundle.detector;
  }();
  return m;
}

inline const gymcam::nn::MlpModel& regressor() {
  static const gymcam::nn::MlpModel m = [] {
    const auto corpus = gymcam::synth::generate_corpus(gymcam::synth::rep_corpus_spec(), 300, 102);
    const auto labeled = gymcam::labeled_corpus(corpus);
    return *gymcam::train_models(labeled, config(), {false, true, false, true}).bundle.regressor;
  }();
  return m;
}

inline const gymcam::nn::MlpModel& recognizer() {
  static const gymcam::nn::MlpModel m = [] {
    const auto corpus = gymcam::synth::generate_corpus(gymcam::synth::recognition_corpus_spec(), 60, 103);
    const auto labeled = gymcam::labeled_corpus(corpus);
    return *gymcam::train_models(labeled, config(), {false, false, true, true}).bundle.recognizer;
  }();
  return m;
}

inline const gymcam::io::ModelBundle& bundle() {
  static const gymcam::io::ModelBundle b = [] {
    gymcam::io::ModelBundle out;
    out.detector = detector();
    out.regressor = regressor();
    out.recognizer = recognizer();
    out.config = gymcam::io::config_to_json(config());
    return out;
  }();
  return b;
}

}  // namespace fixtures
