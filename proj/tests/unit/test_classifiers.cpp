#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "cpda/analytic.hpp"
#include "cpda/backend_spec.hpp"
#include "cpda/errors.hpp"
#include "cpda/explainers.hpp"
#include "oracles.hpp"

using namespace cpda;

namespace {

// Three 2x2 groups on a 4x4 frame: top-left, top-right, bottom-left.
GroupDef three_groups() {
  return GroupDef::from_rects(4, {{0, 0, 2, 2}, {0, 2, 2, 2}, {2, 0, 2, 2}});
}

ImageTensor activate(const std::vector<int>& on) {
  auto img = ImageTensor(4, 4, 1);
  const std::vector<Rect> rects{{0, 0, 2, 2}, {0, 2, 2, 2}, {2, 0, 2, 2}};
  for (std::size_t g = 0; g < on.size(); ++g) {
    if (on[g]) img = testkit::paint(img, rects[g].top, rects[g].left, 2, 2, 255);
  }
  return img;
}

}  // namespace

TEST(GroupDef, Validation) {
  EXPECT_THROW(GroupDef(4, {{0, 1}, {1, 2}}), InvalidArgument);
  EXPECT_THROW(GroupDef(4, {{}}), InvalidArgument);
  EXPECT_THROW(GroupDef(4, {{16}}), InvalidArgument);
  EXPECT_NO_THROW(GroupDef(4, {}));
}

TEST(MaxGroup, DemoInput) {
  EXPECT_DOUBLE_EQ(max_group_eval(three_groups(), activate({1, 1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(max_group_eval(three_groups(), activate({0, 0, 0})), 0.0);
  EXPECT_THROW(max_group_eval(GroupDef(4, {}), activate({0, 0, 0})), EmptyGroups);
}

TEST(MaxGroup, PartialActivationIsMeanOverChannels) {
  GroupDef g = GroupDef::from_rects(2, {{0, 0, 1, 2}});
  ImageTensor img(2, 2, 3);
  img.at(0, 0, 0) = 255;  // one sample of six
  EXPECT_DOUBLE_EQ(max_group_eval(g, img), 1.0 / 6.0);
}

TEST(MaxGroup, SaturatesOnAnyNonEmptySubsetOfActiveGroups) {
  // Exhaustive over the on/off patterns of up to four groups.
  const auto g = GroupDef::from_rects(4, {{0, 0, 2, 2}, {0, 2, 2, 2}, {2, 0, 2, 2}, {2, 2, 2, 2}});
  const std::vector<Rect> rects{{0, 0, 2, 2}, {0, 2, 2, 2}, {2, 0, 2, 2}, {2, 2, 2, 2}};
  for (int mask = 0; mask < 16; ++mask) {
    ImageTensor img(4, 4, 1);
    for (int b = 0; b < 4; ++b) {
      if (mask >> b & 1) img = testkit::paint(img, rects[b].top, rects[b].left, 2, 2, 255);
    }
    EXPECT_DOUBLE_EQ(max_group_eval(g, img), mask ? 1.0 : 0.0) << mask;
    EXPECT_DOUBLE_EQ(saturated_or_eval(g, img), mask ? 1.0 : 0.0) << mask;
  }
}

TEST(SaturatedOr, SoftOrOfPartialActivations) {
  const auto g = GroupDef::from_rects(2, {{0, 0, 1, 2}, {1, 0, 1, 2}});
  ImageTensor img(2, 2, 1, {255, 0, 255, 0});  // a = (0.5, 0.5)
  EXPECT_DOUBLE_EQ(saturated_or_eval(g, img), 0.75);
  EXPECT_THROW(saturated_or_eval(GroupDef(2, {}), img), EmptyGroups);
}

TEST(LinearRegion, LogisticOfRegionMean) {
  const auto img = ImageTensor::filled(8, 8, 3, 255);
  EXPECT_NEAR(linear_region_eval({0, 0, 4, 4}, 2.0, 0.0, img), 0.8807970779778823, 1e-15);
  EXPECT_DOUBLE_EQ(linear_region_eval({0, 0, 4, 4}, 6.0, -3.0, ImageTensor::filled(8, 8, 1, 0)),
                   logistic(-3.0));
  EXPECT_THROW(linear_region_eval({6, 6, 4, 4}, 1.0, 0.0, img), RegionOutOfBounds);
  EXPECT_THROW(LinearRegionClassifier(8, {6, 6, 4, 4}, 1.0, 0.0), RegionOutOfBounds);
}

TEST(Classifier, RejectsWrongDimensions) {
  ConstantClassifier c(8, {0.5});
  EXPECT_THROW(c.classify(ImageTensor(8, 9, 3)), DimensionMismatch);
  const std::vector<ImageTensor> batch{ImageTensor(8, 8, 3), ImageTensor(4, 4, 3)};
  try {
    c.classify_batch(batch);
    FAIL();
  } catch (const BatchElementError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(Classifier, ConstantValidatesItsOutput) {
  EXPECT_THROW(ConstantClassifier(8, {1.5}), OutOfRange);
  EXPECT_THROW(ConstantClassifier(8, {}), InvalidArgument);
}

TEST(Classifier, BatchEqualsSequentialAndIsPure) {
  std::mt19937_64 rng(11);
  const auto groups = GroupDef::from_rects(16, {{0, 0, 5, 5}, {8, 8, 6, 4}});
  MaxGroupClassifier a(groups);
  SaturatedOrClassifier b(groups);
  LinearRegionClassifier c(16, {2, 3, 8, 8}, 4.0, -1.0);
  std::vector<ImageTensor> imgs;
  for (int i = 0; i < 100; ++i) imgs.push_back(testkit::random_image(rng, 16, 16, i % 2 ? 3 : 1));
  for (Classifier* clf : std::initializer_list<Classifier*>{&a, &b, &c}) {
    const auto batched = clf->classify_batch(imgs);
    ASSERT_EQ(batched.size(), imgs.size());
    for (std::size_t i = 0; i < imgs.size(); ++i) {
      ASSERT_EQ(batched[i], clf->classify(imgs[i]));
      ASSERT_EQ(clf->classify(imgs[i]), clf->classify(imgs[i]));
    }
  }
}

TEST(Classifier, CounterTracksInferencesAndBatches) {
  ConstantClassifier c(4, {0.3, 0.7});
  EXPECT_TRUE(c.classify_batch({}).empty());
  EXPECT_EQ(c.counter().batches, 0u);
  c.classify(ImageTensor(4, 4, 1));
  const std::vector<ImageTensor> batch(5, ImageTensor(4, 4, 1));
  c.classify_batch(batch);
  EXPECT_EQ(c.counter().inferences, 6u);
  EXPECT_EQ(c.counter().batches, 2u);
  c.reset_counter();
  EXPECT_EQ(c.counter().inferences, 0u);
}

TEST(Classifier, SweepUsesGridPlusOneInferences) {
  ConstantClassifier c(32, {0.5});
  ExplainConfig cfg;
  cfg.patch_size = 8;
  cfg.stride = 3;
  cfg.batch_size = 7;
  sweep_cpda(ImageTensor(32, 32, 3), c, cfg);
  EXPECT_EQ(c.counter().inferences, build_grid(32, 8, 3).size() + 1);
}

// ---- backend grammar ------------------------------------------------------------------

TEST(BackendSpec, AnalyticForms) {
  const auto lin = parse_backend_spec("analytic:linear:1,2,3,4,6,-3", 64);
  EXPECT_EQ(lin.kind, ClassifierSpec::Kind::kLinearRegion);
  EXPECT_EQ(lin.region, (Rect{1, 2, 3, 4}));
  EXPECT_DOUBLE_EQ(lin.weight, 6.0);
  EXPECT_DOUBLE_EQ(lin.bias, -3.0);
  const auto k = parse_backend_spec("analytic:constant:0.2,0.8", 16);
  EXPECT_EQ(k.constant_probs, (std::vector<double>{0.2, 0.8}));
  EXPECT_EQ(make_classifier(k)->classify(ImageTensor(16, 16, 3)).probs, k.constant_probs);
}

TEST(BackendSpec, ExternalForms) {
  const auto e = parse_backend_spec("exec:python3 adapter.py --preset echo", 224);
  EXPECT_EQ(e.kind, ClassifierSpec::Kind::kExec);
  EXPECT_EQ(e.command, "python3 adapter.py --preset echo");
  const auto t = parse_backend_spec("tcp:localhost:9000", 224);
  EXPECT_EQ(t.host, "localhost");
  EXPECT_EQ(t.port, 9000);
}

TEST(BackendSpec, RejectsMalformed) {
  for (const char* bad : {"", "analytic:", "analytic:linear:1,2,3", "analytic:constant:",
                          "analytic:constant:2", "exec:", "tcp:host", "tcp:host:99999",
                          "gpu:resnet"}) {
    EXPECT_THROW(parse_backend_spec(bad, 32), InvalidArgument) << bad;
  }
  EXPECT_THROW(parse_backend_spec("analytic:max-group:/no/such/file.json", 32), IoError);
}

TEST(BackendSpec, GroupFile) {
  const auto path = std::filesystem::temp_directory_path() / "cpda_groups_test.json";
  {
    std::ofstream f(path);
    f << R"({"side": 8, "groups": [{"rect": [0, 0, 2, 2]}, {"pixels": [63, 62]}]})";
  }
  const auto spec = parse_backend_spec("analytic:max-group:" + path.string(), 224);
  EXPECT_EQ(spec.input_side, 8);
  ASSERT_EQ(spec.groups.size(), 2u);
  EXPECT_EQ(spec.groups[0], (std::vector<std::size_t>{0, 1, 8, 9}));
  EXPECT_EQ(make_classifier(spec)->input_side(), 8);
  std::filesystem::remove(path);
}
