#include <gtest/gtest.h>

#include <random>

#include "gymcam/nn.hpp"

using namespace gymcam;
using namespace gymcam::nn;

namespace {

struct Data {
  Eigen::MatrixXd x;
  std::vector<double> y;
};

Data xor_data(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.05);
  Data d{Eigen::MatrixXd(400, 2), {}};
  for (int i = 0; i < 400; ++i) {
    const int a = i % 2, b = (i / 2) % 2;
    d.x(i, 0) = a + jitter(rng);
    d.x(i, 1) = b + jitter(rng);
    d.y.push_back(static_cast<double>(a ^ b));
  }
  return d;
}

Data line_data(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Data d{Eigen::MatrixXd(n, 1), {}};
  for (int i = 0; i < n; ++i) {
    d.x(i, 0) = u(rng);
    d.y.push_back(3.0 * d.x(i, 0) + 1.0);
  }
  return d;
}

TrainConfig quick(std::uint64_t seed = 1) {
  TrainConfig c;
  c.seed = seed;
  c.learning_rate = 1e-2;
  return c;
}

MlpModel random_model(Task task, std::vector<int> sizes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto m = make_model(task, sizes, rng);
  return m;
}

}  // namespace

TEST(Mlp, LearnsXor) {
  const auto d = xor_data(1);
  const auto r = train(d.x, d.y, quick(), Task::kBinary);
  const auto p = predict_batch(r.model, d.x);
  int correct = 0;
  for (int i = 0; i < 400; ++i) correct += (p(i, 0) >= 0.5) == (d.y[static_cast<std::size_t>(i)] == 1.0);
  EXPECT_GE(correct, 396);
  const std::vector<double> one_zero{1.0, 0.0};
  EXPECT_GE(predict(r.model, one_zero)[0], 0.95);
}

TEST(Mlp, RegressesALine) {
  const auto d = line_data(200, 2);
  const auto r = train(d.x, d.y, quick(), Task::kRegression);
  const auto held = line_data(100, 99);
  const auto p = predict_batch(r.model, held.x);
  double mse = 0.0;
  for (int i = 0; i < 100; ++i) mse += std::pow(p(i, 0) - held.y[static_cast<std::size_t>(i)], 2) / 100.0;
  EXPECT_LE(mse, 1e-2);
}

TEST(Mlp, FixedSeedIsDeterministic) {
  const auto d = xor_data(3);
  const auto a = to_json(train(d.x, d.y, quick(7), Task::kBinary).model).dump();
  const auto b = to_json(train(d.x, d.y, quick(7), Task::kBinary).model).dump();
  EXPECT_EQ(a, b);
  const auto c = to_json(train(d.x, d.y, quick(8), Task::kBinary).model).dump();
  EXPECT_NE(a, c);
}

TEST(Mlp, BestValidationLossNeverIncreases) {
  const auto d = line_data(200, 5);
  const auto r = train(d.x, d.y, quick(), Task::kRegression);
  ASSERT_FALSE(r.best_validation_loss.empty());
  for (std::size_t i = 1; i < r.best_validation_loss.size(); ++i)
    EXPECT_LE(r.best_validation_loss[i], r.best_validation_loss[i - 1]);
}

TEST(Mlp, StandardisationComesFromTheStoredModel) {
  const auto d = line_data(200, 6);
  auto r = train(d.x, d.y, quick(), Task::kRegression);
  const std::vector<double> at{0.5};
  const double before = predict(r.model, at)[0];
  // Predictions depend on the stored constants only.
  auto shifted = r.model;
  shifted.input_mean(0) += 1.0;
  EXPECT_NE(predict(shifted, at)[0], before);
  EXPECT_EQ(predict(r.model, at)[0], before);
  EXPECT_GT(r.model.input_scale(0), 0.0);
}

TEST(Mlp, MulticlassOutputsSumToOne) {
  std::mt19937_64 rng(4);
  const auto m = random_model(Task::kMulticlass, {6, 10, 4}, 4);
  auto mm = m;
  mm.class_labels = {"a", "b", "c", "d"};
  std::normal_distribution<double> g(0.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(6);
    for (auto& v : x) v = g(rng);
    const auto p = predict(mm, x);
    double s = 0.0;
    for (double v : p) {
      ASSERT_GE(v, 0.0);
      s += v;
    }
    ASSERT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Mlp, ZeroWeightBinaryModelIsOneHalf) {
  auto m = random_model(Task::kBinary, {5, 8, 1}, 1);
  for (auto& l : m.layers) {
    l.weights.setZero();
    l.bias.setZero();
  }
  const std::vector<double> x{1, -2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(predict(m, x)[0], 0.5);
}

TEST(Mlp, DimensionMismatchThrows) {
  const auto m = random_model(Task::kBinary, {5, 8, 1}, 1);
  const std::vector<double> x{1, 2};
  EXPECT_THROW(predict(m, x), ValidationError);
}

TEST(Mlp, TrainingErrors) {
  Eigen::MatrixXd x(4, 1);
  x << 1, 2, 3, 4;
  const std::vector<double> single{1, 1, 1, 1};
  EXPECT_THROW(train(x, single, quick(), Task::kBinary), ValidationError);
  EXPECT_THROW(train(x, single, quick(), Task::kMulticlass), ValidationError);
  const std::vector<double> short_y{0, 1};
  EXPECT_THROW(train(x, short_y, quick(), Task::kBinary), ValidationError);
  x(2, 0) = std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> y{0, 1, 0, 1};
  EXPECT_THROW(train(x, y, quick(), Task::kBinary), ValidationError);
  x(2, 0) = 3.0;
  const std::vector<double> inf_y{0, 1, std::numeric_limits<double>::infinity(), 1};
  EXPECT_THROW(train(x, inf_y, quick(), Task::kRegression), ValidationError);
  auto bad = quick();
  bad.batch_size = 0;
  EXPECT_THROW(train(x, y, bad, Task::kBinary), ValidationError);
}

TEST(GradientCheck, PipelineArchitectures) {
  struct Case {
    Task task;
    std::vector<int> sizes;
  };
  const Case cases[] = {{Task::kBinary, {27, 100, 1}}, {Task::kRegression, {12, 100, 1}},
                        {Task::kMulticlass, {300, 100, 5}}, {Task::kMulticlass, {4, 7, 3}},
                        {Task::kBinary, {3, 5, 4, 1}}};
  std::mt19937_64 rng(11);
  for (const auto& c : cases) {
    const auto m = make_model(c.task, c.sizes, rng);
    const auto b = random_batch(m, 8, rng);
    EXPECT_LE(gradient_check(m, b, 1e-4), 1e-4) << to_string(c.task) << " " << c.sizes.front();
    EXPECT_LE(gradient_check(m, b, 0.0), 1e-4);
  }
}

TEST(GradientCheck, LinearIdentityModelIsExact) {
  std::mt19937_64 rng(12);
  const auto m = make_model(Task::kRegression, std::vector<int>{4, 1}, rng);
  const auto b = random_batch(m, 16, rng);
  // Quadratic loss: central differences are exact up to rounding.
  EXPECT_LE(gradient_check(m, b, 0.0), 1e-7);
}

TEST(Serialization, RoundTripIsBitIdentical) {
  const auto d = xor_data(2);
  const auto m = train(d.x, d.y, quick(), Task::kBinary).model;
  const auto back = model_from_json(nlohmann::json::parse(to_json(m).dump()));
  const auto a = predict_batch(m, d.x), b = predict_batch(back, d.x);
  for (Eigen::Index i = 0; i < a.rows(); ++i) ASSERT_EQ(a(i, 0), b(i, 0));
  EXPECT_EQ(to_json(back).dump(), to_json(m).dump());
  EXPECT_EQ(to_json(m)["activations"], (nlohmann::json{"relu", "sigmoid"}));
}

TEST(Serialization, RefusesOtherVersionsAndMalformedModels) {
  const auto m = random_model(Task::kRegression, {3, 4, 1}, 3);
  auto j = to_json(m);
  j["version"] = kModelVersion + 1;
  EXPECT_THROW(model_from_json(j), ValidationError);
  j = to_json(m);
  j["layer_sizes"] = {3, 5, 1};
  EXPECT_THROW(model_from_json(j), ValidationError);
  j = to_json(m);
  j.erase("layers");
  EXPECT_THROW(model_from_json(j), ValidationError);
  j = to_json(m);
  j["format"] = "other";
  EXPECT_THROW(model_from_json(j), ValidationError);
}
