#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "unipose/grad_check.hpp"
#include "unipose/ops.hpp"

namespace unipose {
namespace {

using testing::random_tensor;

TEST(GradCheckHarness, RelativeErrorFloor) {
  EXPECT_DOUBLE_EQ(relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 1e-10), 1e-10 / 1e-8);
}

TEST(GradCheckHarness, LinearFunctionIsNearlyExact) {
  auto offset = random_tensor<double>(Shape{1, 2, 3, 3}, 1);
  auto x = random_tensor<double>(Shape{1, 2, 3, 3}, 2);
  auto r = grad_check(
      [&](const Tensor<double>& in) { return ops::add(ops::scale(in, 0.75), offset); }, x, 1e-4);
  EXPECT_LE(r.max_relative_error, 1e-10);
  EXPECT_EQ(r.checked, x.numel());
}

TEST(GradCheckHarness, ConvSoftmaxComposite) {
  auto w = random_tensor<double>(Shape{2, 3, 3, 3}, 3);
  auto x = random_tensor<double>(Shape{1, 3, 6, 6}, 4);
  auto r = grad_check(
      [&](const Tensor<double>& in) {
        return ops::spatial_softmax(ops::conv2d(in, w, Tensor<double>(), {1, 2, 2}));
      },
      x, 1e-4);
  EXPECT_LE(r.max_relative_error, 1e-4);
}

// Identity whose recorded backward is wrong by 1%.
Tensor<double> corrupted_identity(const Tensor<double>& x) {
  Tensor<double> out(x.shape(), std::vector<double>(x.data().begin(), x.data().end()));
  return record<double>(out, {x}, [x](std::span<const double> gy, std::span<const double>) {
    std::vector<double> d(gy.begin(), gy.end());
    for (auto& v : d) v *= 1.01;
    accumulate_grad<double>(x, d);
  });
}

TEST(GradCheckHarness, FlagsInjectedFault) {
  auto x = random_tensor<double>(Shape{1, 1, 4, 4}, 5);
  auto r = grad_check([](const Tensor<double>& in) { return ops::tanh(corrupted_identity(in)); },
                      x, 1e-4);
  EXPECT_GE(r.max_relative_error, 5e-3);
  EXPECT_FALSE(r.passed(1e-4));
}

TEST(GradCheckHarness, ReportsNonFinite) {
  auto x = random_tensor<double>(Shape{1, 1, 2, 2}, 6);
  auto r = grad_check(
      [](const Tensor<double>& in) {
        return ops::scale(in, std::numeric_limits<double>::infinity());
      },
      x, 1e-4);
  EXPECT_FALSE(r.finite);
  EXPECT_FALSE(r.passed(1.0));
  EXPECT_FALSE(r.message.empty());
}

}  // namespace
}  // namespace unipose
