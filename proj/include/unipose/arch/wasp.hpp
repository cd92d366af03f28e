#pragma once

#include <array>
#include <string>
#include <vector>

#include "unipose/arch/module_spec.hpp"
#include "unipose/nn/layers.hpp"

namespace unipose::arch {

struct WaspConfig {
  int in_channels = 512;
  int branch_channels = 64;
  int out_channels = 256;
  std::array<int, 4> rates{6, 12, 18, 24};

  /// Positive widths, rates >= 1 and, when `strict` is set, strictly
  /// increasing rates. Throws SpecError.
  void validate(bool strict = true) const;
};

/// Layer graph of the waterfall module: a 3x3 atrous cascade where each
/// stage feeds the next, a 1x1 projection per stage, a global-pool branch,
/// and a 1x1 fusion over the five concatenated branches.
ModuleSpec wasp_spec(const WaspConfig& config);
/// The parallel counterpart: all four atrous branches read the input.
ModuleSpec aspp_spec(const WaspConfig& config);

/// Shared forward machinery for the two pooling modules. Every conv but
/// the final fusion is followed by ReLU.
template <typename T>
class AtrousPooling {
 public:
  enum class Topology { kWaterfall, kParallel };

  AtrousPooling() = default;
  AtrousPooling(const WaspConfig& config, Topology topology, nn::Initializer& init);

  Tensor<T> operator()(const Tensor<T>& input) const;
  /// The five projected branches in concat order (four atrous, then pool),
  /// each (N, branch_channels, H, W).
  std::vector<Tensor<T>> branches(const Tensor<T>& input) const;
  void collect(const std::string& prefix, nn::ParamList<T>& out) const;

  const WaspConfig& config() const { return config_; }
  Topology topology() const { return topology_; }
  ModuleSpec spec() const;

  nn::Conv2d<T>& atrous(int i) { return atrous_[i]; }
  nn::Conv2d<T>& projection(int i) { return projection_[i]; }
  nn::Conv2d<T>& pool_projection() { return pool_projection_; }
  nn::Conv2d<T>& fuse() { return fuse_; }

 private:
  WaspConfig config_;
  Topology topology_ = Topology::kWaterfall;
  std::array<nn::Conv2d<T>, 4> atrous_;
  std::array<nn::Conv2d<T>, 4> projection_;
  nn::Conv2d<T> pool_projection_;
  nn::Conv2d<T> fuse_;
};

template <typename T>
class Wasp : public AtrousPooling<T> {
 public:
  Wasp() = default;
  Wasp(const WaspConfig& config, nn::Initializer& init)
      : AtrousPooling<T>(config, AtrousPooling<T>::Topology::kWaterfall, init) {}
};

template <typename T>
class Aspp : public AtrousPooling<T> {
 public:
  Aspp() = default;
  Aspp(const WaspConfig& config, nn::Initializer& init)
      : AtrousPooling<T>(config, AtrousPooling<T>::Topology::kParallel, init) {}
};

}  // namespace unipose::arch
