#include <gtest/gtest.h>

#include "oracles.hpp"
#include "unipose/ops.hpp"
#include "unipose/tensor.hpp"

namespace unipose {
namespace {

TEST(Tensor, DataLengthMatchesShape) {
  Tensor<float> t(Shape{2, 3, 4, 5});
  EXPECT_EQ(t.numel(), 120u);
  EXPECT_EQ(t.data().size(), 120u);
  EXPECT_THROW(Tensor<float>(Shape{1, 1, 2, 2}, std::vector<float>(3)), TensorError);
  EXPECT_THROW(Tensor<float>(Shape{1, -1, 2, 2}), TensorError);
}

TEST(Tensor, RowMajorWidthFastest) {
  Shape s{2, 3, 4, 5};
  EXPECT_EQ(s.index(0, 0, 0, 1), 1u);
  EXPECT_EQ(s.index(0, 0, 1, 0), 5u);
  EXPECT_EQ(s.index(0, 1, 0, 0), 20u);
  EXPECT_EQ(s.index(1, 0, 0, 0), 60u);
}

TEST(Tensor, PrecisionTracksScalarType) {
  static_assert(precision_of<float>() == Precision::kStandard32);
  static_assert(precision_of<double>() == Precision::kCheck64);
}

TEST(Backward, SumGivesOnes) {
  auto x = testing::random_tensor<double>(Shape{1, 2, 3, 3}, 1, -1, 1, true);
  backward(ops::sum(x));
  ASSERT_TRUE(x.has_grad());
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, GradientShapeEqualsDataShape) {
  auto x = testing::random_tensor<float>(Shape{2, 3, 4, 4}, 2, -1, 1, true);
  backward(ops::mean(ops::relu(x)));
  EXPECT_EQ(x.grad().size(), x.numel());
}

TEST(Backward, AccumulatesAcrossBranches) {
  auto x = testing::random_tensor<double>(Shape{1, 1, 3, 4}, 3, -1, 1, true);
  // d/dx [2x + x*x] = 2 + 2x
  auto loss = ops::sum(ops::add(ops::scale(x, 2.0), ops::mul(x, x)));
  backward(loss);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    EXPECT_NEAR(x.grad()[i], 2.0 + 2.0 * x.data()[i], 1e-12);
  }
}

TEST(Backward, RejectsNonScalar) {
  auto x = testing::random_tensor<float>(Shape{1, 1, 2, 2}, 4, -1, 1, true);
  EXPECT_THROW(backward(ops::relu(x)), TensorError);
}

TEST(Backward, RejectsDisconnectedLoss) {
  auto x = testing::random_tensor<float>(Shape{1, 1, 2, 2}, 5);
  EXPECT_THROW(backward(ops::sum(x)), TensorError);
}

TEST(Backward, ConsumesGraph) {
  auto x = testing::random_tensor<float>(Shape{1, 1, 2, 2}, 6, -1, 1, true);
  auto loss = ops::sum(ops::scale(x, 3.0f));
  EXPECT_FALSE(loss.is_leaf());
  backward(loss);
  EXPECT_TRUE(loss.is_leaf());
  x.zero_grad();
  EXPECT_FALSE(x.has_grad());
}

TEST(NoGrad, SuppressesRecording) {
  auto x = testing::random_tensor<float>(Shape{1, 1, 2, 2}, 7, -1, 1, true);
  NoGradGuard guard;
  auto y = ops::relu(x);
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(y.is_leaf());
}

}  // namespace
}  // namespace unipose
