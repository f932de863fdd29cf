#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cpda/analytic.hpp"
#include "cpda/errors.hpp"
#include "cpda/evaluation.hpp"
#include "cpda/patching.hpp"
#include "function_classifier.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace cpda;

TEST(LogOdds, Examples) {
  EXPECT_EQ(log_odds_ratio(0.5, 0.5), 0.0);
  EXPECT_NEAR(log_odds_ratio(0.9, 0.5), std::log(9.0), 1e-12);
  EXPECT_NEAR(log_odds_ratio(0.5, 0.2), std::log(4.0), 1e-12);
  // Clamping keeps the extremes finite.
  EXPECT_TRUE(std::isfinite(log_odds_ratio(1.0, 0.0)));
  EXPECT_NEAR(log_odds_ratio(1.0, 0.0), 2.0 * std::log((1 - 1e-9) / 1e-9), 1e-6);
}

TEST(LogOdds, AntisymmetricAndZeroOnEqualInputs) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10000; ++t) {
    const double p = u(rng);
    const double q = u(rng);
    ASSERT_EQ(log_odds_ratio(p, q), -log_odds_ratio(q, p));
    ASSERT_EQ(log_odds_ratio(p, p), 0.0);
  }
}

TEST(Perturb, WindowIsCentredAndClamped) {
  auto m = SaliencyMap::zeros(16, 16, 0, Method::kCpda);
  m.values[8 * 16 + 8] = 1.0;
  EXPECT_EQ(perturbation_window(m), (Rect{4, 4, 9, 9}));
  m.values.assign(256, 0.0);
  m.values[0] = 1.0;
  EXPECT_EQ(perturbation_window(m), (Rect{0, 0, 9, 9}));
  m.values.assign(256, 0.0);
  m.values[255] = 1.0;
  EXPECT_EQ(perturbation_window(m), (Rect{7, 7, 9, 9}));
  // First maximum wins on ties; an all-zero map points at (0,0).
  m.values.assign(256, 0.0);
  EXPECT_EQ(perturbation_window(m), (Rect{0, 0, 9, 9}));
  const auto small = SaliencyMap::zeros(5, 5, 0, Method::kCpda);
  EXPECT_EQ(perturbation_window(small), (Rect{0, 0, 5, 5}));
}

TEST(Perturb, FillsWindowWithRoundedChannelMean) {
  ImageTensor img(16, 16, 3);
  img.at(0, 0, 0) = 255;
  img.at(0, 1, 0) = 255;  // mean of channel 0 = 510/256 = 1.99 -> 2
  auto m = SaliencyMap::zeros(16, 16, 0, Method::kCpda);
  m.values[10 * 16 + 10] = 1.0;
  const auto out = perturb_at_argmax(img, m);
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) {
      const bool inside = r >= 6 && r < 15 && c >= 6 && c < 15;
      ASSERT_EQ(out.at(r, c, 0), inside ? 2 : img.at(r, c, 0));
      ASSERT_EQ(out.at(r, c, 1), 0);
    }
  }
  EXPECT_THROW(perturb_at_argmax(ImageTensor(8, 8, 1), m), DimensionMismatch);
}

TEST(Evaluate, ConstantBackendGivesZeroMeanAndStd) {
  ConstantClassifier clf(16, {0.3, 0.7});
  std::mt19937_64 rng(52);
  std::vector<CorpusImage> corpus;
  for (int i = 0; i < 5; ++i) corpus.push_back({"img" + std::to_string(i), testkit::random_image(rng, 20, 20, 3)});
  for (Method m : {Method::kCpda, Method::kPdaOcclusion, Method::kPdaMarginal}) {
    MethodSettings s;
    s.method = m;
    s.config.patch_size = 4;
    s.config.stride = 4;
    s.marginal.samples = 2;
    const auto r = evaluate_logodds(corpus, clf, s);
    EXPECT_EQ(r.mean, 0.0);
    EXPECT_EQ(r.stddev, 0.0);
    ASSERT_EQ(r.per_image.size(), 5u);
    EXPECT_EQ(r.per_image[0].class_index, 1u);
  }
}

TEST(Evaluate, SingleImageHasZeroStd) {
  LinearRegionClassifier clf(16, {0, 0, 8, 8}, 6.0, -3.0);
  std::mt19937_64 rng(53);
  MethodSettings s;
  s.config.patch_size = 4;
  s.config.stride = 2;
  const auto r = evaluate_logodds({{"a", testkit::random_image(rng, 16, 16, 1)}}, clf, s);
  EXPECT_EQ(r.stddev, 0.0);
  EXPECT_EQ(r.mean, r.per_image[0].ratio);
}

TEST(Evaluate, LinearRegionCorpusHasPositiveMean) {
  // Bright region content drives the score; removing it lowers the odds.
  LinearRegionClassifier clf(32, {8, 8, 12, 12}, 6.0, -3.0);
  std::mt19937_64 rng(54);
  std::vector<CorpusImage> corpus;
  for (int i = 0; i < 6; ++i) {
    auto img = testkit::random_image(rng, 32, 32, 3);
    corpus.push_back({std::to_string(i), testkit::paint(img, 8, 8, 12, 12, 255)});
  }
  MethodSettings s;
  s.config.patch_size = 8;
  s.config.stride = 4;
  const auto r = evaluate_logodds(corpus, clf, s);
  EXPECT_GT(r.mean, 0.0);
  const auto workers = evaluate_logodds(corpus, clf, s, 3);
  EXPECT_EQ(workers.mean, r.mean);
  EXPECT_EQ(workers.per_image.size(), r.per_image.size());
  for (std::size_t i = 0; i < r.per_image.size(); ++i) {
    EXPECT_EQ(workers.per_image[i].path, r.per_image[i].path);
    EXPECT_EQ(workers.per_image[i].ratio, r.per_image[i].ratio);
  }
}

TEST(Evaluate, ReportJsonShape) {
  ConstantClassifier clf(8, {0.5});
  MethodSettings s;
  s.config.patch_size = 4;
  s.config.stride = 4;
  const auto r = evaluate_logodds({{"x.png", ImageTensor(8, 8, 1)}}, clf, s);
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j.at("method"), "cpda");
  EXPECT_EQ(j.at("per_image").size(), 1u);
  EXPECT_EQ(j.at("per_image")[0].at("path"), "x.png");
  EXPECT_EQ(j.at("mean"), 0.0);
  EXPECT_EQ(j.at("std"), 0.0);
  EXPECT_EQ(j.at("calls"), r.calls);
  EXPECT_EQ(r.calls, 1u + 5u + 1u);  // base, explanation (4 patches + base), perturbed
}

TEST(Evaluate, FailuresAreRecordedAndAllFailingThrows) {
  int seen = 0;
  testkit::FunctionClassifier flaky(8, [&](const ImageTensor& img) -> std::vector<double> {
    ++seen;
    if (img.at(0, 0) == 7) return {2.0};  // invalid output
    return {0.5};
  });
  MethodSettings s;
  s.config.patch_size = 4;
  s.config.stride = 4;
  const auto r = evaluate_logodds({{"bad", ImageTensor::filled(8, 8, 1, 7)}, {"ok", ImageTensor(8, 8, 1)}},
                                  flaky, s);
  EXPECT_EQ(r.per_image.size(), 1u);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].path, "bad");
  EXPECT_THROW(evaluate_logodds({{"bad", ImageTensor::filled(8, 8, 1, 7)}}, flaky, s), BackendError);
  EXPECT_THROW(evaluate_logodds({}, flaky, s), InvalidArgument);
}

TEST(Probe, SaturatedOrClosedForms) {
  auto img = ImageTensor(64, 64, 1);
  img = testkit::paint(img, 8, 8, 16, 16, 255);
  img = testkit::paint(img, 40, 40, 16, 16, 255);
  SaturatedOrClassifier clf(GroupDef::from_rects(64, {{8, 8, 16, 16}, {40, 40, 16, 16}}));
  const std::vector<Rect> regions{{8, 8, 16, 16}, {40, 40, 16, 16}, {40, 0, 24, 24}, {8, 8, 48, 48}};
  const auto p = saturation_probe(img, regions, clf, 0, Filler::constant(0));
  EXPECT_EQ(p.base, 1.0);
  EXPECT_EQ(p.deltas, (std::vector<double>{0.0, 0.0, 0.0, -1.0}));
  // Group A removed and half of group B: 1 - (1 - 0)(1 - 0.5) = 0.5.
  const auto half = saturation_probe(img, {{8, 8, 48, 40}}, clf, 0, Filler::constant(0));
  EXPECT_EQ(half.scores[0], 0.5);
  const auto part = saturation_probe(img, {{8, 8, 8, 16}, {40, 40, 16, 16}}, clf, 0, Filler::constant(0));
  EXPECT_EQ(part.scores, (std::vector<double>{1.0, 1.0}));
}

TEST(CostModel, PredictedCalls) {
  EXPECT_EQ(predict_calls(Method::kCpda, 224, 20, 5, 10), 1682u);
  EXPECT_EQ(predict_calls(Method::kPdaOcclusion, 224, 20, 5, 10), 1682u);
  EXPECT_EQ(predict_calls(Method::kPdaMarginal, 224, 20, 5, 10), 420251u);
  EXPECT_EQ((predict_calls(Method::kPdaMarginal, 224, 20, 5, 10) - 1) /
                (predict_calls(Method::kCpda, 224, 20, 5, 10) - 1),
            250u);
  EXPECT_THROW(predict_calls(Method::kCpda, 16, 16, 1, 1), InvalidGeometry);
}

TEST(CostModel, MeasuredMatchesPredicted) {
  ConstantClassifier clf(32, {0.5});
  for (Method m : {Method::kCpda, Method::kPdaOcclusion, Method::kPdaMarginal}) {
    MethodSettings s;
    s.method = m;
    s.config.patch_size = 8;
    s.config.stride = m == Method::kPdaMarginal ? 1 : 3;
    s.marginal.samples = 3;
    clf.reset_counter();
    explain_with(ImageTensor(32, 32, 3), clf, s, 0);
    EXPECT_EQ(clf.counter().inferences, predict_calls(m, 32, 8, s.config.stride, 3)) << to_string(m);
  }
}
