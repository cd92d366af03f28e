#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "unipose/metrics/heatmaps.hpp"
#include "unipose/metrics/metrics.hpp"

using namespace unipose;
using namespace unipose::metrics;

namespace {

Keypoints straight_line(int k, double spacing) {
  Keypoints kp;
  for (int j = 0; j < k; ++j) kp.joints.push_back({10.0 + spacing * j, 20.0, true, 0.0});
  kp.torso = Segment{{0, 0}, {100, 0}};
  kp.head = Segment{{0, 0}, {0, 40}};
  return kp;
}

Keypoints random_keypoints(std::mt19937& rng, int k, int h, int w) {
  Keypoints kp;
  std::uniform_int_distribution<int> xs(0, w - 1), ys(0, h - 1);
  std::bernoulli_distribution vis(0.8);
  for (int j = 0; j < k; ++j) {
    kp.joints.push_back({static_cast<double>(xs(rng)), static_cast<double>(ys(rng)), vis(rng), 0});
  }
  kp.torso = Segment{{double(xs(rng)), double(ys(rng))}, {double(xs(rng)) + w, double(ys(rng))}};
  kp.head = Segment{{double(xs(rng)), double(ys(rng))}, {double(xs(rng)), double(ys(rng)) + h}};
  for (int j = 0; j + 1 < k; ++j) kp.limbs.push_back({j, j + 1});
  return kp;
}

// Brute-force oracle: walks joints with squared distances, no shared code.
std::pair<std::size_t, std::size_t> oracle_counts(const std::vector<Keypoints>& pred,
                                                  const std::vector<Keypoints>& gt,
                                                  double fraction, bool head) {
  std::size_t correct = 0, total = 0;
  for (std::size_t s = 0; s < gt.size(); ++s) {
    const Segment seg = head ? *gt[s].head : *gt[s].torso;
    const double ref2 = (seg.a.x - seg.b.x) * (seg.a.x - seg.b.x) + (seg.a.y - seg.b.y) * (seg.a.y - seg.b.y);
    for (std::size_t j = 0; j < gt[s].joints.size(); ++j) {
      if (!gt[s].joints[j].visible) continue;
      ++total;
      const double dx = pred[s].joints[j].x - gt[s].joints[j].x;
      const double dy = pred[s].joints[j].y - gt[s].joints[j].y;
      if (std::sqrt(dx * dx + dy * dy) <= fraction * std::sqrt(ref2)) ++correct;
    }
  }
  return {correct, total};
}

}  // namespace

// ------------------------------------------------------------ gaussian targets

TEST(GaussianTargets, PeakAndSigmaValues) {
  Keypoints kp;
  kp.joints = {{20, 30, true, 0}};
  auto maps = gaussian_targets<double>(kp, Box{5, 5, 40, 50}, 64, 64);
  EXPECT_EQ(maps.shape(), (Shape{1, 3, 64, 64}));
  EXPECT_EQ(maps.at(0, 0, 30, 20), 1.0);
  EXPECT_NEAR(maps.at(0, 0, 30, 23), std::exp(-0.5), 1e-9);
  EXPECT_NEAR(maps.at(0, 0, 27, 20), std::exp(-0.5), 1e-9);
  // Inside the 3-sigma disc, then just beyond it.
  EXPECT_NEAR(maps.at(0, 0, 30, 29), std::exp(-81.0 / 18.0), 1e-12);
  EXPECT_EQ(maps.at(0, 0, 30, 30), 0.0);
  EXPECT_EQ(maps.at(0, 0, 37, 27), 0.0);
  EXPECT_EQ(maps.at(0, 1, 5, 5), 1.0);
  EXPECT_EQ(maps.at(0, 2, 50, 40), 1.0);
}

TEST(GaussianTargets, HiddenJointGivesZeroChannel) {
  Keypoints kp;
  kp.joints = {{20, 30, false, 0}, {1, 1, true, 0}};
  auto maps = gaussian_targets<float>(kp, Box{0, 0, 10, 10}, 32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) EXPECT_EQ(maps.at(0, 0, y, x), 0.0f);
}

TEST(GaussianTargets, AdjacentJointsStayInSeparateUnimodalChannels) {
  Keypoints kp;
  kp.joints = {{10, 10, true, 0}, {11, 10, true, 0}};
  auto maps = gaussian_targets<double>(kp, Box{0, 0, 20, 20}, 24, 24);
  for (int c = 0; c < 2; ++c) {
    const Peak p = argmax(maps, 0, c);
    EXPECT_EQ(p.x, 10 + c);
    // Strictly decreasing along the row away from the peak.
    for (int x = p.x + 1; x < p.x + 9; ++x) EXPECT_LT(maps.at(0, c, 10, x), maps.at(0, c, 10, x - 1));
    for (int x = p.x - 1; x > p.x - 9 && x >= 0; --x) EXPECT_LT(maps.at(0, c, 10, x), maps.at(0, c, 10, x + 1));
  }
}

TEST(GaussianTargets, RejectsBadSigma) {
  Keypoints kp;
  kp.joints = {{1, 1, true, 0}};
  GaussianSpec spec;
  spec.sigma = 0.0;
  EXPECT_THROW(gaussian_targets<float>(kp, Box{}, 8, 8, spec), MetricError);
}

// ------------------------------------------------------------ decoding

TEST(Decode, PlantedGaussianAndZeroChannel) {
  Tensor<float> maps(Shape{1, 2, 16, 16});
  draw_gaussian(maps, 0, 0, {7, 9}, GaussianSpec{});
  auto kp = decode_joints(maps, 0, 2);
  EXPECT_EQ(kp.joints[0].x, 7);
  EXPECT_EQ(kp.joints[0].y, 9);
  EXPECT_EQ(kp.joints[0].confidence, 1.0);
  EXPECT_EQ(kp.joints[1].x, 0);
  EXPECT_EQ(kp.joints[1].y, 0);
  EXPECT_EQ(kp.joints[1].confidence, 0.0);
}

TEST(Decode, TiesPreferSmallestRowThenColumn) {
  Tensor<float> maps(Shape{1, 1, 4, 4});
  auto d = maps.mutable_data();
  d[1 * 4 + 3] = 2.0f;
  d[2 * 4 + 0] = 2.0f;
  d[1 * 4 + 2] = 2.0f;
  auto p = argmax(maps, 0, 0);
  EXPECT_EQ(p.y, 1);
  EXPECT_EQ(p.x, 2);
}

TEST(Decode, RoundTripOverRandomJointSets) {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 8 * std::uniform_int_distribution<int>(2, 10)(rng);
    const int w = 8 * std::uniform_int_distribution<int>(2, 10)(rng);
    auto kp = random_keypoints(rng, 14, h, w);
    Box box{2, 3, double(w - 3), double(h - 2)};
    auto maps = gaussian_targets<float>(kp, box, h, w);
    auto decoded = decode_joints(maps, 0, 14);
    for (int j = 0; j < 14; ++j) {
      if (!kp.joints[j].visible) continue;
      EXPECT_EQ(decoded.joints[j].x, kp.joints[j].x);
      EXPECT_EQ(decoded.joints[j].y, kp.joints[j].y);
    }
    auto b = decode_bbox(maps, 0, 14);
    EXPECT_EQ(b.x_min, box.x_min);
    EXPECT_EQ(b.y_max, box.y_max);
  }
}

TEST(DecodeBbox, PlantedCornersInvertedAndDegenerate) {
  Tensor<float> maps(Shape{1, 2, 64, 64});
  draw_gaussian(maps, 0, 0, {12, 10}, GaussianSpec{});
  draw_gaussian(maps, 0, 1, {60, 50}, GaussianSpec{});
  auto b = decode_bbox(maps, 0, 0);
  EXPECT_EQ(b.x_min, 12);
  EXPECT_EQ(b.y_min, 10);
  EXPECT_EQ(b.x_max, 60);
  EXPECT_EQ(b.y_max, 50);

  Tensor<float> inverted(Shape{1, 2, 64, 64});
  draw_gaussian(inverted, 0, 0, {60, 50}, GaussianSpec{});
  draw_gaussian(inverted, 0, 1, {12, 10}, GaussianSpec{});
  auto c = decode_bbox(inverted, 0, 0);
  EXPECT_EQ(c.x_min, 12);
  EXPECT_EQ(c.y_max, 50);

  Tensor<float> same(Shape{1, 2, 32, 32});
  draw_gaussian(same, 0, 0, {5, 6}, GaussianSpec{});
  draw_gaussian(same, 0, 1, {5, 6}, GaussianSpec{});
  auto d = decode_bbox(same, 0, 0);
  EXPECT_EQ(d.x_min, d.x_max);
  EXPECT_EQ(d.y_min, d.y_max);
}

// ------------------------------------------------------------ PCK family

TEST(Pck, ExactPredictionAndBoundary) {
  auto gt = straight_line(3, 10);
  EXPECT_EQ(pck({gt}, {gt}).rate(), 1.0);
  auto pred = gt;
  pred.joints[0].x += 20.0;
  pred.joints[1].y += 20.01;
  auto r = pck({pred}, {gt}, 0.2);
  EXPECT_EQ(r.item_correct[0], 1u);
  EXPECT_EQ(r.item_correct[1], 0u);
  EXPECT_EQ(r.correct(), 2u);
  EXPECT_EQ(r.total(), 3u);
}

TEST(Pck, FarPredictionsScoreZero) {
  auto gt = straight_line(4, 5);
  auto pred = gt;
  for (auto& j : pred.joints) j.x += 1000.0;
  EXPECT_EQ(pck({pred}, {gt}).rate(), 0.0);
}

TEST(Pck, MissingTorsoRejected) {
  auto gt = straight_line(2, 5);
  gt.torso.reset();
  EXPECT_THROW(pck({gt}, {gt}), MetricError);
}

TEST(Pckh, BoundaryAndZeroDenominator) {
  auto gt = straight_line(2, 10);
  auto pred = gt;
  pred.joints[0].x += 19.9;
  pred.joints[1].x -= 20.1;
  auto r = pckh({pred}, {gt});
  EXPECT_EQ(r.item_correct[0], 1u);
  EXPECT_EQ(r.item_correct[1], 0u);

  for (auto& j : gt.joints) j.visible = false;
  auto empty = pckh({gt}, {gt});
  EXPECT_FALSE(empty.defined());
  EXPECT_THROW(empty.rate(), MetricError);
  EXPECT_NE(empty.to_kv().find("rate = undefined"), std::string::npos);
}

TEST(Pcp, RuleAndInclusiveBoundary) {
  Keypoints gt;
  gt.joints = {{0, 0, true, 0}, {50, 0, true, 0}};
  gt.limbs = {{0, 1}};
  EXPECT_EQ(pcp({gt}, {gt}).rate(), 1.0);

  auto pred = gt;
  pred.joints[0].y = 24;
  pred.joints[1].y = 26;
  EXPECT_EQ(pcp({pred}, {gt}).rate(), 0.0);

  pred = gt;
  pred.joints[1].y = 25.0;
  EXPECT_EQ(pcp({pred}, {gt}).rate(), 1.0);
}

TEST(Pcp, ZeroLengthLimbExcludedWithWarning) {
  Keypoints gt;
  gt.joints = {{5, 5, true, 0}, {5, 5, true, 0}, {20, 5, true, 0}};
  gt.limbs = {{0, 1}, {1, 2}};
  auto r = pcp({gt}, {gt});
  EXPECT_EQ(r.total(), 1u);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(BboxContainment, EdgesInclusive) {
  Keypoints gt;
  gt.joints = {{15, 15, true, 0}, {10, 12, true, 0}, {20, 20, true, 0}, {21, 15, true, 0}};
  Box box{10, 10, 20, 20};
  auto r = bbox_containment({gt}, {gt}, {box});
  EXPECT_EQ(r.item_correct, (std::vector<std::size_t>{1, 1, 1, 0}));

  Keypoints center;
  center.joints.assign(4, Joint{15, 15, true, 0});
  EXPECT_EQ(bbox_containment({center}, {gt}, {box}).rate(), 1.0);
  EXPECT_THROW(bbox_containment({gt}, {gt}, {Box{20, 10, 10, 20}}), MetricError);
}

TEST(MetricReport, MergeIsCountWeighted) {
  auto gt = straight_line(2, 10);
  auto bad = gt;
  bad.joints[0].x += 500;
  auto a = pck({gt}, {gt});
  auto b = pck({bad, bad, bad}, {gt, gt, gt});
  a.merge(b);
  EXPECT_EQ(a.samples, 4u);
  EXPECT_DOUBLE_EQ(a.rate(), 5.0 / 8.0);
  EXPECT_NE(a.to_table().find("overall"), std::string::npos);
}

// ------------------------------------------------------------ properties

TEST(MetricProperties, MatchBruteForceOracle) {
  std::mt19937 rng(2);
  std::normal_distribution<double> noise(0.0, 12.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Keypoints> gt, pred;
    for (int s = 0; s < 5; ++s) {
      gt.push_back(random_keypoints(rng, 14, 64, 64));
      pred.push_back(gt.back());
      for (auto& j : pred.back().joints) {
        j.x += noise(rng);
        j.y += noise(rng);
      }
    }
    const double f = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
    auto [c1, t1] = oracle_counts(pred, gt, f, false);
    auto r1 = pck(pred, gt, f);
    EXPECT_EQ(r1.correct(), c1);
    EXPECT_EQ(r1.total(), t1);
    auto [c2, t2] = oracle_counts(pred, gt, f, true);
    auto r2 = pckh(pred, gt, f);
    EXPECT_EQ(r2.correct(), c2);
    EXPECT_EQ(r2.total(), t2);
  }
}

TEST(MetricProperties, TranslationInvariance) {
  std::mt19937 rng(3);
  std::normal_distribution<double> noise(0.0, 8.0);
  std::uniform_int_distribution<int> shift(-200, 200);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Keypoints> gt, pred;
    std::vector<Box> boxes;
    for (int s = 0; s < 4; ++s) {
      gt.push_back(random_keypoints(rng, 8, 48, 48));
      pred.push_back(gt.back());
      for (auto& j : pred.back().joints) {
        j.x += std::round(noise(rng));
        j.y += std::round(noise(rng));
      }
      boxes.push_back(Box{4, 6, 40, 44});
    }
    // Integer shifts keep every distance bit-identical.
    const double dx = shift(rng), dy = shift(rng);
    auto moved_gt = gt, moved_pred = pred;
    auto moved_boxes = boxes;
    auto move = [&](Keypoints& kp) {
      for (auto& j : kp.joints) {
        j.x += dx;
        j.y += dy;
      }
      for (auto* seg : {&kp.torso, &kp.head}) {
        (*seg)->a.x += dx;
        (*seg)->a.y += dy;
        (*seg)->b.x += dx;
        (*seg)->b.y += dy;
      }
    };
    for (auto& k : moved_gt) move(k);
    for (auto& k : moved_pred) move(k);
    for (auto& b : moved_boxes) b = Box{b.x_min + dx, b.y_min + dy, b.x_max + dx, b.y_max + dy};
    EXPECT_EQ(pck(pred, gt).correct(), pck(moved_pred, moved_gt).correct());
    EXPECT_EQ(pckh(pred, gt).correct(), pckh(moved_pred, moved_gt).correct());
    EXPECT_EQ(pcp(pred, gt).correct(), pcp(moved_pred, moved_gt).correct());
    EXPECT_EQ(bbox_containment(pred, gt, boxes).correct(),
              bbox_containment(moved_pred, moved_gt, moved_boxes).correct());
  }
}

TEST(MetricProperties, PckMonotoneInFraction) {
  std::mt19937 rng(4);
  std::normal_distribution<double> noise(0.0, 15.0);
  std::vector<Keypoints> gt, pred;
  for (int s = 0; s < 20; ++s) {
    gt.push_back(random_keypoints(rng, 14, 64, 64));
    pred.push_back(gt.back());
    for (auto& j : pred.back().joints) j.x += noise(rng);
  }
  double prev = -1.0;
  for (double f = 0.01; f < 1.5; f += 0.01) {
    const double r = pck(pred, gt, f).rate();
    EXPECT_GE(r, prev);
    prev = r;
  }
}
