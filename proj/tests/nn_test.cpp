#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "param_util.hpp"
#include "unipose/grad_check.hpp"
#include "unipose/nn/backbone.hpp"
#include "unipose/nn/conv_lstm.hpp"
#include "unipose/nn/layers.hpp"

using namespace unipose;
namespace ut = unipose::testing;
using ut::random_tensor;

namespace {

nn::BackboneConfig tiny_backbone() {
  nn::BackboneConfig c;
  c.stem_channels = 4;
  c.stage_channels = {4, 6, 8, 8};
  c.blocks_per_stage = {1, 1, 1, 1};
  return c;
}

template <typename T>
nn::ParamList<T> params_of(const auto& module) {
  nn::ParamList<T> out;
  module.collect("m", out);
  return out;
}

}  // namespace

// ------------------------------------------------------------ residual block

TEST(ResidualBlock, ZeroWeightsGiveActivationOfInput) {
  nn::Initializer init(1);
  nn::ResidualBlock<float> block({5, 5, 1, 1}, init);
  ASSERT_FALSE(block.has_projection());
  for (auto& p : params_of<float>(block)) {
    if (p.name.find("conv") != std::string::npos) {
      for (auto& v : Tensor<float>(p.tensor).mutable_data()) v = 0.0f;
    }
  }
  auto x = random_tensor<float>(Shape{2, 5, 6, 7}, 3);
  auto y = block(x);
  ASSERT_EQ(y.shape(), x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y.data()[i], std::max(0.0f, x.data()[i]));
}

TEST(ResidualBlock, StrideTwoHalvesSpatialSize) {
  nn::Initializer init(2);
  nn::ResidualBlock<float> block({8, 12, 2, 1}, init);
  EXPECT_TRUE(block.has_projection());
  auto y = block(random_tensor<float>(Shape{1, 8, 16, 16}, 4));
  EXPECT_EQ(y.shape(), (Shape{1, 12, 8, 8}));
}

TEST(ResidualBlock, DilationPreservesSpatialSize) {
  nn::Initializer init(2);
  nn::ResidualBlock<float> block({4, 4, 1, 2}, init);
  EXPECT_EQ(block(random_tensor<float>(Shape{1, 4, 9, 11}, 4)).shape(), (Shape{1, 4, 9, 11}));
}

TEST(ResidualBlock, RejectsChannelMismatch) {
  nn::Initializer init(2);
  nn::ResidualBlock<float> block({4, 4, 1, 1}, init);
  EXPECT_THROW(block(random_tensor<float>(Shape{1, 3, 8, 8}, 4)), TensorError);
}

TEST(ResidualBlock, TwoBlockStackPassesGradCheck) {
  nn::Initializer init(5);
  nn::ResidualBlock<double> first({3, 4, 2, 1}, init);
  nn::ResidualBlock<double> second({4, 4, 1, 2}, init);
  nn::ParamList<double> params;
  first.collect("b1", params);
  second.collect("b2", params);
  // Non-zero residual scales so every parameter carries gradient.
  ut::randomize(params, 6, -0.8, 0.8);
  auto x = random_tensor<double>(Shape{1, 3, 8, 8}, 7);
  auto r = grad_check([&](const Tensor<double>& in) { return second(first(in)); }, x, 1e-6);
  EXPECT_LE(r.max_relative_error, 1e-4) << r.message;
  auto p = grad_check_params(
      [&] {
        auto y = second(first(x));
        return ops::sum(ops::mul(y, y));
      },
      ut::as_named(params), 1e-6, 12);
  EXPECT_LE(p.max_relative_error, 1e-4) << p.worst_label;
}

// ------------------------------------------------------------ backbone

TEST(Backbone, DefaultConfigTapShapes) {
  nn::Initializer init(9);
  nn::BackboneConfig config;
  nn::Backbone<float> backbone(config, init);
  EXPECT_EQ(config.low_level_stage(), 1);
  auto f = backbone(random_tensor<float>(Shape{1, 3, 64, 64}, 10, 0, 1));
  EXPECT_EQ(f.low_level.shape(), (Shape{1, 256, 16, 16}));
  EXPECT_EQ(f.deep.shape(), (Shape{1, 512, 8, 8}));
}

TEST(Backbone, IdenticalInputsGiveBitIdenticalOutputs) {
  nn::Initializer init(9);
  nn::Backbone<float> backbone(tiny_backbone(), init);
  auto x = random_tensor<float>(Shape{1, 3, 32, 32}, 11, 0, 1);
  auto y = random_tensor<float>(Shape{1, 3, 32, 32}, 11, 0, 1);
  auto a = backbone(x), b = backbone(y);
  ASSERT_EQ(a.deep.shape(), b.deep.shape());
  for (std::size_t i = 0; i < a.deep.numel(); ++i) ASSERT_EQ(a.deep.data()[i], b.deep.data()[i]);
  for (std::size_t i = 0; i < a.low_level.numel(); ++i) {
    ASSERT_EQ(a.low_level.data()[i], b.low_level.data()[i]);
  }
}

TEST(Backbone, DoublingHeightDoublesLowLevelHeight) {
  nn::Initializer init(9);
  nn::Backbone<float> backbone(tiny_backbone(), init);
  auto a = backbone(random_tensor<float>(Shape{1, 3, 32, 24}, 12));
  auto b = backbone(random_tensor<float>(Shape{1, 3, 64, 24}, 12));
  EXPECT_EQ(b.low_level.shape().h, 2 * a.low_level.shape().h);
  EXPECT_EQ(b.low_level.shape().w, a.low_level.shape().w);
}

TEST(Backbone, StrideContractHoldsForRandomValidSizes) {
  nn::Initializer init(13);
  nn::Backbone<float> backbone(tiny_backbone(), init);
  std::mt19937 rng(14);
  for (int trial = 0; trial < 12; ++trial) {
    const int h = 8 * std::uniform_int_distribution<int>(1, 6)(rng);
    const int w = 8 * std::uniform_int_distribution<int>(1, 6)(rng);
    const int n = std::uniform_int_distribution<int>(1, 2)(rng);
    auto f = backbone(random_tensor<float>(Shape{n, 3, h, w}, 15 + trial));
    EXPECT_EQ(f.low_level.shape(), (Shape{n, 6, h / 4, w / 4}));
    EXPECT_EQ(f.deep.shape(), (Shape{n, 8, h / 8, w / 8}));
  }
}

TEST(Backbone, NonDivisibleInputReportsPadding) {
  nn::Initializer init(9);
  nn::Backbone<float> backbone(tiny_backbone(), init);
  try {
    backbone(random_tensor<float>(Shape{1, 3, 63, 64}, 1));
    FAIL() << "expected rejection";
  } catch (const TensorError& e) {
    EXPECT_NE(std::string(e.what()).find("pad to 64x64"), std::string::npos) << e.what();
  }
}

TEST(BackboneConfig, RejectsWrongStrides) {
  auto c = tiny_backbone();
  c.stage_strides = {2, 2, 2, 1};
  EXPECT_THROW(c.validate(), TensorError);
  c = tiny_backbone();
  c.output_stride = 16;
  EXPECT_THROW(c.validate(), TensorError);
  c = tiny_backbone();
  c.blocks_per_stage = {1, 1};
  EXPECT_THROW(c.validate(), TensorError);
  c = tiny_backbone();
  c.stage_strides = {1, 1, 4, 1};
  EXPECT_THROW(c.validate(), TensorError);
}

TEST(Backbone, PassesGradCheck) {
  nn::Initializer init(16);
  nn::Backbone<double> backbone(tiny_backbone(), init);
  nn::ParamList<double> params;
  backbone.collect("bb", params);
  ut::randomize(params, 17, -0.5, 0.5);
  auto x = random_tensor<double>(Shape{1, 3, 16, 16}, 18);
  auto r = grad_check(
      [&](const Tensor<double>& in) {
        auto f = backbone(in);
        return ops::concat_channels<double>(
            {ops::max_pool2d(f.low_level, 2, 2), f.deep});
      },
      x, 1e-5);
  EXPECT_LE(r.max_relative_error, 1e-4) << r.message << " idx " << r.worst_index << " a " << r.analytic_at_worst << " n " << r.numeric_at_worst;
}

// ------------------------------------------------------------ conv lstm

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Gate equations written out directly on flat arrays.
nn::ConvLSTMState<double> lstm_oracle(const Tensor<double>& x, const nn::ConvLSTMState<double>& s,
                                      const Tensor<double>& w, const Tensor<double>& b) {
  const Shape xs = x.shape(), hs = s.hidden.shape();
  const int ch = hs.c;
  Shape zs{xs.n, xs.c + ch, xs.h, xs.w};
  std::vector<double> z(zs.numel());
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < zs.c; ++c)
      for (int i = 0; i < xs.h; ++i)
        for (int j = 0; j < xs.w; ++j) {
          z[zs.index(n, c, i, j)] = c < xs.c ? x.data()[xs.index(n, c, i, j)]
                                             : s.hidden.data()[hs.index(n, c - xs.c, i, j)];
        }
  Shape gs;
  auto g = ut::direct_conv2d(z, zs, ut::as_double(w), w.shape(), ut::as_double(b), 1,
                                  w.shape().h / 2, 1, &gs);
  std::vector<double> hidden(hs.numel()), cell(hs.numel());
  for (int n = 0; n < hs.n; ++n)
    for (int c = 0; c < ch; ++c)
      for (int i = 0; i < hs.h; ++i)
        for (int j = 0; j < hs.w; ++j) {
          const double ig = sigmoid(g[gs.index(n, c, i, j)]);
          const double fg = sigmoid(g[gs.index(n, ch + c, i, j)]);
          const double og = sigmoid(g[gs.index(n, 2 * ch + c, i, j)]);
          const double gg = std::tanh(g[gs.index(n, 3 * ch + c, i, j)]);
          const std::size_t k = hs.index(n, c, i, j);
          cell[k] = fg * s.cell.data()[k] + ig * gg;
          hidden[k] = og * std::tanh(cell[k]);
        }
  return {Tensor<double>(hs, hidden), Tensor<double>(hs, cell)};
}

}  // namespace

TEST(ConvLSTM, ZeroInputZeroStateZeroBiasStaysZero) {
  nn::Initializer init(20);
  nn::ConvLSTMCell<float> cell(3, 4, init);
  auto s = cell.zero_state(2, 5, 6);
  auto next = cell.step(Tensor<float>(Shape{2, 3, 5, 6}), s);
  for (float v : next.hidden.data()) EXPECT_EQ(v, 0.0f);
  for (float v : next.cell.data()) EXPECT_EQ(v, 0.0f);
}

TEST(ConvLSTM, SaturatedGatesKeepCell) {
  nn::Initializer init(21);
  nn::ConvLSTMCell<double> cell(3, 4, init);
  auto params = params_of<double>(cell);
  ut::randomize(params, 22, -0.05, 0.05);
  auto bias = cell.gates().bias().mutable_data();
  for (int c = 0; c < 4; ++c) {
    bias[c] = -10.0;     // input gate
    bias[4 + c] = 10.0;  // forget gate
  }
  nn::ConvLSTMState<double> s{random_tensor<double>(Shape{1, 4, 6, 6}, 23),
                              random_tensor<double>(Shape{1, 4, 6, 6}, 24, -2, 2)};
  auto next = cell.step(random_tensor<double>(Shape{1, 3, 6, 6}, 25), s);
  EXPECT_LE(ut::max_abs_diff(next.cell.data(), s.cell.data()), 1e-3);
}

TEST(ConvLSTM, MatchesGateEquationOracle) {
  nn::Initializer init(26);
  nn::ConvLSTMCell<double> cell64(5, 3, init);
  auto params = params_of<double>(cell64);
  ut::randomize(params, 27, -0.5, 0.5);
  auto x = random_tensor<double>(Shape{2, 5, 7, 6}, 28);
  nn::ConvLSTMState<double> s{random_tensor<double>(Shape{2, 3, 7, 6}, 29),
                              random_tensor<double>(Shape{2, 3, 7, 6}, 30)};
  auto expected = lstm_oracle(x, s, cell64.gates().weight(), cell64.gates().bias());
  auto got = cell64.step(x, s);
  EXPECT_LE(ut::max_abs_diff(got.hidden.data(), expected.hidden.data()), 1e-6);
  EXPECT_LE(ut::max_abs_diff(got.cell.data(), expected.cell.data()), 1e-6);

  // Same weights in 32-bit.
  nn::Initializer init32(26);
  nn::ConvLSTMCell<float> cell32(5, 3, init32);
  auto p32 = params_of<float>(cell32);
  for (std::size_t i = 0; i < p32.size(); ++i) {
    auto dst = Tensor<float>(p32[i].tensor).mutable_data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = static_cast<float>(params[i].tensor.data()[k]);
  }
  auto to32 = [](const Tensor<double>& t) {
    return Tensor<float>(t.shape(), std::vector<float>(t.data().begin(), t.data().end()));
  };
  auto got32 = cell32.step(to32(x), {to32(s.hidden), to32(s.cell)});
  EXPECT_LE(ut::max_abs_diff(got32.hidden.data(), expected.hidden.data()), 1e-6);
  EXPECT_LE(ut::max_abs_diff(got32.cell.data(), expected.cell.data()), 1e-6);
}

TEST(ConvLSTM, RejectsShapeMismatch) {
  nn::Initializer init(31);
  nn::ConvLSTMCell<float> cell(3, 4, init);
  auto s = cell.zero_state(1, 5, 5);
  EXPECT_THROW(cell.step(Tensor<float>(Shape{1, 2, 5, 5}), s), TensorError);
  EXPECT_THROW(cell.step(Tensor<float>(Shape{1, 3, 6, 5}), s), TensorError);
  EXPECT_THROW(cell.step(Tensor<float>(Shape{1, 3, 5, 5}), cell.zero_state(1, 5, 4)),
               TensorError);
  nn::ConvLSTMState<float> bad{Tensor<float>(Shape{1, 4, 5, 5}), Tensor<float>(Shape{1, 4, 5, 4})};
  EXPECT_THROW(cell.step(Tensor<float>(Shape{1, 3, 5, 5}), bad), TensorError);
}

TEST(ConvLSTM, RepeatedInputsStayFiniteAndShaped) {
  nn::Initializer init(32);
  nn::ConvLSTMCell<float> cell(4, 4, init);
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    auto params = params_of<float>(cell);
    const double bound = 0.5 + trial;
    ut::randomize(params, rng(), -bound, bound);
    auto x = random_tensor<float>(Shape{1, 4, 6, 6}, rng(), -3, 3);
    auto s = cell.zero_state(1, 6, 6);
    for (int t = 0; t < 50; ++t) {
      s = cell.step(x, s);
      ASSERT_EQ(s.hidden.shape(), (Shape{1, 4, 6, 6}));
      for (float v : s.hidden.data()) ASSERT_TRUE(std::isfinite(v) && std::abs(v) <= 1.0f);
      for (float v : s.cell.data()) ASSERT_TRUE(std::isfinite(v));
    }
  }
}

TEST(ConvLSTM, PassesGradCheck) {
  nn::Initializer init(34);
  nn::ConvLSTMCell<double> cell(2, 3, init);
  auto params = params_of<double>(cell);
  ut::randomize(params, 35, -0.6, 0.6);
  auto x0 = random_tensor<double>(Shape{1, 2, 5, 5}, 36);
  auto x1 = random_tensor<double>(Shape{1, 2, 5, 5}, 37);
  auto r = grad_check(
      [&](const Tensor<double>& in) {
        auto s = cell.step(in, cell.zero_state(1, 5, 5));
        s = cell.step(x1, s);
        return ops::concat_channels<double>({s.hidden, s.cell});
      },
      x0, 1e-6);
  EXPECT_LE(r.max_relative_error, 1e-4) << r.message;
  auto p = grad_check_params(
      [&] {
        auto s = cell.step(x1, cell.step(x0, cell.zero_state(1, 5, 5)));
        return ops::sum(ops::mul(s.hidden, s.hidden));
      },
      ut::as_named(params), 1e-6, 40);
  EXPECT_LE(p.max_relative_error, 1e-4) << p.worst_label;
}

// ------------------------------------------------------------ dropout

TEST(Dropout, RateZeroAndEvalModeAreIdentity) {
  auto x = random_tensor<float>(Shape{2, 3, 4, 5}, 40);
  auto a = nn::dropout(x, 0.0, 1, true);
  auto b = nn::dropout(x, 0.7, 1, false);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    EXPECT_EQ(a.data()[i], x.data()[i]);
    EXPECT_EQ(b.data()[i], x.data()[i]);
  }
}

TEST(Dropout, RejectsInvalidRate) {
  auto x = random_tensor<float>(Shape{1, 1, 2, 2}, 41);
  EXPECT_THROW(nn::dropout(x, 1.0, 1, true), TensorError);
  EXPECT_THROW(nn::dropout(x, 1.5, 1, false), TensorError);
  EXPECT_THROW(nn::dropout(x, -0.1, 1, true), TensorError);
}

TEST(Dropout, HalfRateStatisticsOverMillionElements) {
  auto x = Tensor<float>::full(Shape{1, 1, 1000, 1000}, 1.0f);
  auto y = nn::dropout(x, 0.5, 42, true);
  double total = 0.0;
  std::size_t zeros = 0;
  for (float v : y.data()) {
    total += v;
    zeros += v == 0.0f;
    ASSERT_TRUE(v == 0.0f || v == 2.0f);
  }
  EXPECT_NEAR(total / 1e6, 1.0, 0.01);
  EXPECT_NEAR(static_cast<double>(zeros) / 1e6, 0.5, 0.01);
}

TEST(Dropout, MaskIsSeededAndRoutesGradient) {
  auto x = random_tensor<double>(Shape{1, 2, 8, 8}, 43, -1, 1, true);
  auto a = nn::dropout(x, 0.3, 44, true);
  auto b = nn::dropout(x, 0.3, 44, true);
  for (std::size_t i = 0; i < x.numel(); ++i) ASSERT_EQ(a.data()[i], b.data()[i]);
  backward(ops::sum(a));
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double expected = a.data()[i] == 0.0 ? 0.0 : 1.0 / 0.7;
    EXPECT_NEAR(x.grad()[i], expected, 1e-12);
  }
}
